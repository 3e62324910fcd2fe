import itertools

import numpy as np
import pytest
from scipy.linalg import expm


def full_hamiltonian(N, J, Delta, B):
    """Dense 2^N XXZ ring Hamiltonian from Pauli matrices; bit 1 = flipped (down)."""
    sp_ = np.array([[0, 0], [1, 0]], dtype=complex)  # |up> -> |down> lowers sz
    sm_ = sp_.T.copy()
    sz = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2, dtype=complex)

    def site_op(op, n):
        out = np.array([[1.0 + 0j]])
        for k in range(N):
            out = np.kron(out, op if k == n else eye)
        return out

    H = np.zeros((2 ** N, 2 ** N), dtype=complex)
    for n in range(N):
        m = (n + 1) % N
        hop = site_op(sp_, n) @ site_op(sm_, m)
        H += -J / 4 * (2 * (hop + hop.conj().T) + Delta * site_op(sz, n) @ site_op(sz, m))
        H += -B * site_op(sz, n)
    return H


def sector_basis(N, k):
    """Basis indices of the k-flip sector, ordered like the package (lexicographic sites)."""
    out = []
    for sites in itertools.combinations(range(N), k):
        idx = 0
        for s in sites:
            idx |= 1 << (N - 1 - s)
        out.append(idx)
    return np.array(out)


@pytest.fixture
def brute():
    return full_hamiltonian


@pytest.fixture
def basis():
    return sector_basis


@pytest.fixture
def dense_expm():
    return expm


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = {}


@pytest.fixture
def report():
    """Record one acceptance line: ``report(number, ok, detail)``."""
    def _report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[k])

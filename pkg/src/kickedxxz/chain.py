"""Parameters, basis indexing and XXZ Hamiltonian blocks on a ring.

Sites are 0-based. The two-excitation sector is spanned by ordered pairs
``(n1, n2)`` with ``n1 < n2``, indexed lexicographically by :func:`pair_index`.

The two-excitation Hamiltonian commutes with rigid translations of the pair,
so :func:`total_momentum_blocks` rewrites it as ``N`` real tridiagonal blocks,
one per total momentum ``K = 2 pi q / N``. Each block acts on the pair
separation ``d = 1 .. floor(N/2)`` in the centre-of-mass basis

    |q, d> ~ sum_s exp(i K (s + d/2)) |s, s + d>.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

__all__ = [
    "ChainParams",
    "OneExcitationState",
    "TwoExcitationState",
    "HamiltonianBlock",
    "MomentumBlocks",
    "pair_index",
    "pair_unindex",
    "pair_arrays",
    "n_pairs",
    "build_one_excitation_h",
    "build_two_excitation_h",
    "total_momentum_blocks",
    "translation_operator",
]


@dataclass(frozen=True)
class ChainParams:
    """Physical and kick parameters of the kicked XXZ ring (hbar = 1).

    ``n0`` is the minimum of the parabolic kick field in 0-based site
    coordinates; it defaults to ``N // 2`` and may be half-integer.
    """

    N: int
    J: float = 1.0
    Delta: float = 0.0
    B: float = 0.0
    B_Q: float = 0.0
    n0: float | None = None
    T: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 4:
            raise ValueError(f"N must be an integer >= 4, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T!r}")
        if self.B_Q < 0:
            raise ValueError(f"B_Q must be non-negative, got {self.B_Q!r}")
        if self.n0 is None:
            object.__setattr__(self, "n0", float(self.N // 2))
        for name in ("J", "Delta", "B", "B_Q", "n0", "T"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def JT(self) -> float:
        return self.J * self.T

    @property
    def E0(self) -> float:
        """Energy of the fully polarised state (uniform-field term dropped)."""
        return -self.J * self.Delta * self.N / 4.0

    def replace(self, **changes) -> "ChainParams":
        values = dict(N=self.N, J=self.J, Delta=self.Delta, B=self.B,
                      B_Q=self.B_Q, n0=self.n0, T=self.T)
        values.update(changes)
        return ChainParams(**values)


def n_pairs(N: int) -> int:
    return N * (N - 1) // 2


def pair_index(n1, n2, N: int):
    """Lexicographic index of the ordered pair ``n1 < n2`` on ``N`` sites.

    Accepts scalars or integer arrays.
    """
    a1 = np.asarray(n1)
    a2 = np.asarray(n2)
    if np.any(a1 < 0) or np.any(a2 >= N) or np.any(a1 >= a2):
        raise ValueError(f"need 0 <= n1 < n2 < N={N}, got ({n1}, {n2})")
    idx = a1 * (2 * N - a1 - 1) // 2 + (a2 - a1 - 1)
    if idx.ndim == 0:
        return int(idx)
    return idx


def pair_unindex(index, N: int):
    """Inverse of :func:`pair_index`."""
    n1s, n2s = pair_arrays(N)
    idx = np.asarray(index)
    if np.any(idx < 0) or np.any(idx >= n_pairs(N)):
        raise ValueError(f"pair index out of range for N={N}: {index}")
    if idx.ndim == 0:
        return int(n1s[idx]), int(n2s[idx])
    return n1s[idx], n2s[idx]


def pair_arrays(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Site arrays ``(n1, n2)`` for every pair, in pair-index order."""
    n1, n2 = np.triu_indices(N, k=1)
    return n1.astype(np.int64), n2.astype(np.int64)


@dataclass
class OneExcitationState:
    """Amplitudes over the single-flip basis ``|n>``."""

    amps: np.ndarray
    N: int = field(init=False)

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        self.N = self.amps.size

    @classmethod
    def localized(cls, N: int, site: int) -> "OneExcitationState":
        amps = np.zeros(N, complex)
        amps[site % N] = 1.0
        return cls(amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    @property
    def n_flips(self) -> int:
        return 1


@dataclass
class TwoExcitationState:
    """Amplitudes over ordered pairs ``(n1, n2)``, ``n1 < n2``."""

    amps: np.ndarray
    N: int

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.size != n_pairs(self.N):
            raise ValueError(
                f"two-excitation state on N={self.N} needs {n_pairs(self.N)} "
                f"amplitudes, got {self.amps.size}")

    @classmethod
    def localized(cls, N: int, n1: int, n2: int) -> "TwoExcitationState":
        a, b = sorted((n1 % N, n2 % N))
        amps = np.zeros(n_pairs(N), complex)
        amps[pair_index(a, b, N)] = 1.0
        return cls(amps, N)

    def amplitude(self, n1: int, n2: int) -> complex:
        a, b = sorted((n1, n2))
        return complex(self.amps[pair_index(a, b, self.N)])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    @property
    def n_flips(self) -> int:
        return 2


@dataclass(frozen=True)
class HamiltonianBlock:
    """Sparse real-symmetric Hamiltonian of one excitation sector.

    ``matrix`` holds ``H - energy_offset``; the offset is the ferromagnetic
    reference energy ``E0``.
    """

    matrix: sp.csr_matrix
    sector: str
    energy_offset: float

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def entries(self) -> list[tuple[int, int, float]]:
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def build_one_excitation_h(params: ChainParams) -> HamiltonianBlock:
    N, J = params.N, params.J
    d1 = 2.0 * params.B + J * params.Delta
    n = np.arange(N)
    rows = np.concatenate([n, n, n])
    cols = np.concatenate([n, (n + 1) % N, (n - 1) % N])
    vals = np.concatenate([np.full(N, d1), np.full(2 * N, -J / 2.0)])
    h = sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
    h.sum_duplicates()
    return HamiltonianBlock(h, "one", params.E0)


def _adjacent(n1: np.ndarray, n2: np.ndarray, N: int) -> np.ndarray:
    return (n2 - n1 == 1) | ((n1 == 0) & (n2 == N - 1))


def build_two_excitation_h(params: ChainParams) -> HamiltonianBlock:
    N, J, Delta = params.N, params.J, params.Delta
    M = n_pairs(N)
    n1, n2 = pair_arrays(N)
    diag = 4.0 * params.B + 2.0 * J * Delta - J * Delta * _adjacent(n1, n2, N)

    rows, cols = [np.arange(M)], [np.arange(M)]
    vals = [diag]
    # move either flip by +-1; hops onto the partner's site are dropped
    for mover, other in ((n1, n2), (n2, n1)):
        for step in (1, -1):
            moved = (mover + step) % N
            ok = moved != other
            a = np.minimum(moved[ok], other[ok])
            b = np.maximum(moved[ok], other[ok])
            rows.append(np.arange(M)[ok])
            cols.append(a * (2 * N - a - 1) // 2 + (b - a - 1))
            vals.append(np.full(ok.sum(), -J / 2.0))
    h = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(M, M))
    h.sum_duplicates()
    return HamiltonianBlock(h, "two", params.E0)


def translation_operator(N: int, sector: str) -> sp.csr_matrix:
    """Permutation matrix shifting every flip by one site to the right."""
    if sector == "one":
        n = np.arange(N)
        return sp.csr_matrix((np.ones(N), ((n + 1) % N, n)), shape=(N, N))
    n1, n2 = pair_arrays(N)
    a, b = (n1 + 1) % N, (n2 + 1) % N
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    M = n_pairs(N)
    return sp.csr_matrix((np.ones(M), (pair_index(lo, hi, N), np.arange(M))),
                         shape=(M, M))


class MomentumBlocks:
    """Total-momentum block structure of the two-excitation sector.

    Attributes
    ----------
    dims : ndarray of int, shape (N,)
        Block dimension for each momentum index ``q``.
    diag, offdiag : ndarray, shapes (N, D) and (N, D - 1)
        Tridiagonal block Hamiltonians (``H - E0``), zero-padded to
        ``D = floor(N/2)``.
    """

    def __init__(self, params: ChainParams):
        self.params = params
        N = params.N
        self.N = N
        self.D = D = N // 2
        self.even = N % 2 == 0
        q = np.arange(N)
        self.K = 2.0 * np.pi * q / N
        self.dims = np.full(N, D)
        if self.even:
            self.dims[q % 2 == 1] = D - 1

        s = np.arange(N)[:, None]
        d = np.arange(1, D + 1)[None, :]
        a = s * np.ones_like(d)
        b = (s + d) % N
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        self._gather = lo * (2 * N - lo - 1) // 2 + (hi - lo - 1)
        # phase exp(i K d / 2) linking the plain and centre-of-mass bases
        self._com = np.exp(0.5j * self.K[:, None] * d)

        self.diag, self.offdiag = self._build_blocks()

    def _build_blocks(self):
        p = self.params
        N, D, J, Delta = self.N, self.D, p.J, p.Delta
        c = np.cos(self.K / 2.0)
        diag = np.full((N, D), 4.0 * p.B + 2.0 * J * Delta)
        diag[:, 0] -= J * Delta
        off = np.repeat((-J * c)[:, None], max(D - 1, 0), axis=1)
        if self.even:
            off[:, -1] *= np.sqrt(2.0)
            odd = np.arange(N) % 2 == 1
            diag[odd, -1] = 0.0
            off[odd, -1] = 0.0
        else:
            sign = np.where(np.arange(N) % 2 == 0, 1.0, -1.0)
            diag[:, -1] += -J * c * sign
        return diag, off

    def block_matrix(self, q: int) -> np.ndarray:
        """Dense block Hamiltonian for momentum index ``q``."""
        n = self.dims[q]
        h = np.diag(self.diag[q, :n])
        if n > 1:
            h += np.diag(self.offdiag[q, : n - 1], 1) + np.diag(self.offdiag[q, : n - 1], -1)
        return h

    def to_momentum(self, amps: np.ndarray) -> np.ndarray:
        """Pair-basis amplitudes -> coefficients ``c[q, d - 1]``."""
        N, D = self.N, self.D
        f = np.fft.fft(amps[self._gather], axis=0) / np.sqrt(N)
        c = np.conj(self._com) * f
        if self.even:
            c[:, -1] /= np.sqrt(2.0)
            c[1::2, -1] = 0.0
        return c

    def from_momentum(self, coeffs: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_momentum`."""
        N, D = self.N, self.D
        work = self._com * coeffs
        if self.even:
            work[:, -1] *= np.sqrt(2.0)
            work[1::2, -1] = 0.0
        g = np.fft.ifft(work, axis=0) * np.sqrt(N)
        out = np.empty(n_pairs(N), complex)
        if self.even:
            out[self._gather[:, :-1]] = g[:, :-1]
            out[self._gather[: N // 2, -1]] = g[: N // 2, -1]
        else:
            out[self._gather] = g
        return out

    def dense_transform(self) -> np.ndarray:
        """Unitary ``U`` (pair basis x block basis), columns ordered by ``q`` then ``d``.

        Intended for small ``N`` checks only.
        """
        M = n_pairs(self.N)
        cols = []
        for q in range(self.N):
            for k in range(self.dims[q]):
                c = np.zeros((self.N, self.D), complex)
                c[q, k] = 1.0
                cols.append(self.from_momentum(c))
        u = np.array(cols).T
        assert u.shape == (M, M)
        return u

    def eigvalsh(self) -> np.ndarray:
        """All two-excitation eigenvalues (``E - E0``), sorted."""
        from scipy.linalg import eigvalsh_tridiagonal

        out = []
        for q in range(self.N):
            n = self.dims[q]
            out.append(eigvalsh_tridiagonal(self.diag[q, :n], self.offdiag[q, : n - 1]))
        return np.sort(np.concatenate(out))


def total_momentum_blocks(params: ChainParams) -> MomentumBlocks:
    return MomentumBlocks(params)

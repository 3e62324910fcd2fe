import csv
import io
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kickedxxz.bethe import (
    UnresolvedRootError,
    bethe_residual,
    bound_band_energy,
    bound_energy_deviation,
    build_eigenstate,
    enumerate_spectrum,
    relative_form_amplitudes,
    solve_root,
    two_magnon_energy,
)
from kickedxxz.chain import ChainParams, build_two_excitation_h, total_momentum_blocks
from kickedxxz.observables import nn_indices

TWO_PI = 2 * np.pi


@lru_cache(maxsize=None)
def catalog(N, Delta, B=0.0):
    return enumerate_spectrum(ChainParams(N=N, Delta=Delta, B=B))


def exact_energies(N, Delta, B=0.0):
    return np.linalg.eigvalsh(build_two_excitation_h(ChainParams(N=N, Delta=Delta, B=B)).toarray())


def _wrap(x):
    return (x + np.pi) % TWO_PI - np.pi


@pytest.mark.parametrize("N", [8, 12, 16])
@pytest.mark.parametrize("Delta", [0.5, 1.0, 2.0])
def test_catalog_reproduces_exact_spectrum(N, Delta):
    cat = catalog(N, Delta, 0.25)
    assert cat.complete and not cat.unresolved
    E = np.sort(cat.energies)
    assert np.max(np.abs(E - exact_energies(N, Delta, 0.25))) < 1e-7


@pytest.mark.parametrize("N,Delta", [(9, 1.0), (12, 0.5), (16, 2.0), (32, 3.0)])
def test_root_invariants(N, Delta):
    p = ChainParams(N=N, Delta=Delta)
    for r in catalog(N, Delta).roots:
        assert r.residual < 1e-10
        assert 0 <= r.lambda1 <= r.lambda2 <= N - 1
        assert bethe_residual(r, p) == pytest.approx(r.residual)
        assert abs(_wrap((N * r.kappa1 - r.theta).real - TWO_PI * r.lambda1)) < 1e-9
        assert abs(_wrap((N * r.kappa2 + r.theta).real - TWO_PI * r.lambda2)) < 1e-9
        if r.kind == "scattering":
            assert abs(r.theta.imag) < 1e-8
            assert abs(r.kappa1.imag) < 1e-8 and abs(r.kappa2.imag) < 1e-8
        else:
            assert r.kind == "bound"
            # conjugate pair: (k1, k2) -> (conj k2, conj k1) is the same root
            assert abs(_wrap((r.kappa1 - np.conj(r.kappa2)).real)) < 1e-8
            assert abs(r.kappa1.imag + r.kappa2.imag) < 1e-8


def test_free_roots():
    N = 16
    cat = catalog(N, 0.0)
    assert len(cat.roots) == 120 and cat.counts["bound"] == 0
    for r in cat.roots:
        assert r.kind == "free"
        assert abs(_wrap(r.theta.real - np.pi)) < 1e-12 and abs(r.theta.imag) < 1e-12
        # free momenta are odd multiples of pi / N
        assert abs(_wrap(N * r.kappa1.real - np.pi)) < 1e-10
        assert abs(_wrap(N * r.kappa2.real - np.pi)) < 1e-10
        assert abs(_wrap(r.kappa1.real - r.kappa2.real)) > 1e-6


def test_solve_root_free_case():
    p = ChainParams(N=10, Delta=0.0)
    r = solve_root(p, 2, 6)
    assert r.kind == "free" and abs(_wrap(r.theta.real - np.pi)) < 1e-12
    assert r.kappa1.real == pytest.approx(5 * np.pi / 10)
    assert r.kappa2.real == pytest.approx(11 * np.pi / 10)


def test_solve_root_null_pair_unresolved():
    # lambda2 = lambda1 + 1 gives k1 = k2 at Delta = 0: a null state
    with pytest.raises(UnresolvedRootError):
        solve_root(ChainParams(N=10, Delta=0.0), 3, 4)


def test_solve_root_rejects_bad_labels():
    with pytest.raises(ValueError):
        solve_root(ChainParams(N=10, Delta=1.0), 5, 2)


@pytest.mark.parametrize("Delta", [0.5, 2.0])
def test_solve_root_recovers_every_catalog_label(Delta):
    p = ChainParams(N=12, Delta=Delta)
    for r in catalog(12, Delta).roots:
        s = solve_root(p, r.lambda1, r.lambda2)
        assert (s.lambda1, s.lambda2) == (r.lambda1, r.lambda2)
        assert s.residual < 1e-10


def test_uniform_pair_at_isotropic_point():
    p = ChainParams(N=12, J=1.3, Delta=1.0, B=0.3)
    r = solve_root(p, 0, 0)
    assert r.kappa1 == 0 and r.kappa2 == 0 and r.limit
    assert two_magnon_energy(r, p).real == pytest.approx(4 * 0.3 + 2 * 1.3 * 1.0 - 2 * 1.3)


def test_energy_consistency_isotropic():
    ex = exact_energies(16, 1.0)
    for r in catalog(16, 1.0).roots:
        e = two_magnon_energy(r, ChainParams(N=16, Delta=1.0)).real
        assert np.min(np.abs(ex - e)) < 1e-8


def test_bound_energies_real():
    p = ChainParams(N=32, Delta=2.0)
    bound = [r for r in catalog(32, 2.0).roots if r.kind == "bound"]
    assert bound
    for r in bound:
        assert abs(two_magnon_energy(r, p).imag) < 1e-9


def test_bound_state_is_lowest_in_each_momentum_class():
    N, Delta = 16, 2.0
    p = ChainParams(N=N, Delta=Delta)
    bound = [r for r in catalog(N, Delta).roots if r.kind == "bound"]
    assert len(bound) == N
    mb = total_momentum_blocks(p)
    for r in bound:
        q = round(r.kappa_total * N / TWO_PI) % N
        lowest = np.linalg.eigvalsh(mb.block_matrix(q))[0]
        assert two_magnon_energy(r, p).real == pytest.approx(lowest, abs=1e-9)


def test_bands_separate_at_delta_three():
    N, Delta = 32, 3.0
    p = ChainParams(N=N, Delta=Delta)
    by_class = {}
    for r in catalog(N, Delta).roots:
        q = round(r.kappa_total * N / TWO_PI) % N
        by_class.setdefault(q, []).append((r.kind, two_magnon_energy(r, p).real))
    for q, items in by_class.items():
        scat = [e for k, e in items if k == "scattering"]
        bound = [e for k, e in items if k == "bound"]
        assert len(bound) == 1
        assert bound[0] < min(scat) or bound[0] > max(scat)


def test_bound_count_grows_with_delta():
    counts = [catalog(16, d).counts["bound"] for d in (0.5, 1.0, 2.0)]
    assert counts == sorted(counts) and counts[0] < counts[-1]


def test_bound_band_energy_values():
    assert bound_band_energy(np.pi, ChainParams(N=8, Delta=2.0, B=0.5)) == pytest.approx(2 + 2)
    assert bound_band_energy(0.0, ChainParams(N=8, Delta=1.0)) == pytest.approx(0.0)
    for d in (0.0, -1.0):
        with pytest.raises(ValueError):
            bound_band_energy(0.0, ChainParams(N=8, Delta=d))


def test_bound_energies_approach_band_with_delta():
    N = 48
    devs = []
    for Delta in (4.0, 8.0, 16.0):
        p = ChainParams(N=N, Delta=Delta)
        cat = enumerate_spectrum(p)
        r = next(r for r in cat.roots if r.kind == "bound" and abs(r.kappa_total - TWO_PI * 4 / N) < 1e-9)
        d = bound_energy_deviation(r, p)
        assert d < 1.0 / Delta ** 2
        devs.append(d)
    assert devs[0] > devs[1] > devs[2]


def test_bound_deviation_matches_direct_difference_where_resolvable():
    p = ChainParams(N=12, Delta=3.0)
    for r in catalog(12, 3.0).roots:
        if r.kind != "bound":
            continue
        direct = abs(two_magnon_energy(r, p).real - bound_band_energy(r.kappa_total, p))
        if direct > 1e-9:
            assert bound_energy_deviation(r, p) == pytest.approx(direct, rel=1e-5)


def test_bound_deviation_decreases_with_size():
    worst = []
    for N in (16, 32, 64):
        p = ChainParams(N=N, Delta=3.0)
        worst.append(max(bound_energy_deviation(r, p) for r in catalog(N, 3.0).roots
                         if r.kind == "bound"))
    assert worst[0] > worst[1] > worst[2]


def test_eigenstates_satisfy_schroedinger_equation():
    p = ChainParams(N=12, Delta=1.0, B=0.2)
    H = build_two_excitation_h(p).matrix
    for r in catalog(12, 1.0, 0.2).roots:
        psi = build_eigenstate(r, p).amps
        E = two_magnon_energy(r, p).real
        assert np.linalg.norm(H @ psi - E * psi) < 1e-8


def test_bound_amplitude_decays_with_separation():
    N = 24
    p = ChainParams(N=N, Delta=2.0)
    r = next(r for r in catalog(N, 2.0).roots if r.kind == "bound" and r.kappa_total == 0)
    st_ = build_eigenstate(r, p)
    by_sep = [np.mean([abs(st_.amplitude(n, (n + d) % N)) for n in range(N)]) for d in range(1, N // 2)]
    assert np.argmax(by_sep) == 0
    assert all(a > b for a, b in zip(by_sep, by_sep[1:]))
    rates = np.diff(np.log(by_sep[:6]))
    assert np.ptp(rates) < 1e-3


def test_large_delta_bound_states_live_on_neighbours():
    N, Delta = 32, 16.0
    p = ChainParams(N=N, Delta=Delta)
    idx = nn_indices(N)
    for r in enumerate_spectrum(p).roots:
        w = np.sum(np.abs(build_eigenstate(r, p).amps[idx]) ** 2)
        if r.kind == "bound":
            assert w > 0.99
        elif not (r.lambda1 == r.lambda2 and r.theta == 0):
            assert w < 10 / Delta ** 2


@pytest.mark.parametrize("Delta", [0.5, 2.0])
def test_relative_form_agrees_with_plane_waves(Delta):
    p = ChainParams(N=12, Delta=Delta)
    for r in catalog(12, Delta).roots:
        if r.kind != "scattering" or r.limit:
            continue
        a = build_eigenstate(r, p).amps
        b = relative_form_amplitudes(r, p).amps
        assert abs(abs(np.vdot(a, b)) - 1) < 1e-9


def test_catalog_csv_columns():
    text = catalog(8, 1.0).to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["lambda1", "lambda2", "re_k1", "im_k1", "re_k2", "im_k2",
                       "re_theta", "im_theta", "class", "energy", "residual"]
    assert len(rows) == 1 + 28
    assert {r[8] for r in rows[1:]} <= {"scattering", "bound"}


def test_enumeration_size_cap():
    with pytest.raises(ValueError):
        enumerate_spectrum(ChainParams(N=65, Delta=1.0))


@settings(max_examples=25, deadline=None)
@given(st.integers(6, 14), st.floats(-2.5, 3.5).filter(lambda d: abs(d) > 1e-3))
def test_catalog_complete_for_random_anisotropy(N, Delta):
    cat = enumerate_spectrum(ChainParams(N=N, Delta=Delta))
    assert cat.complete
    assert np.max(np.abs(np.sort(cat.energies) - exact_energies(N, Delta))) < 1e-7

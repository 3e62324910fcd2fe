import logging

import numpy as np
import pytest

from kickedxxz.chain import (
    ChainParams,
    OneExcitationState,
    TwoExcitationState,
    build_one_excitation_h,
    build_two_excitation_h,
    n_pairs,
    pair_arrays,
)
from kickedxxz.floquet import (
    ChebyshevConvergenceError,
    apply_floquet,
    build_floquet,
    build_kick_phases,
    chebyshev_apply,
    evolve,
    propagate_unkicked,
)


def _random_state(rng, N, sector):
    if sector == "one":
        a = rng.normal(size=N) + 1j * rng.normal(size=N)
        return OneExcitationState(a / np.linalg.norm(a))
    M = n_pairs(N)
    a = rng.normal(size=M) + 1j * rng.normal(size=M)
    return TwoExcitationState(a / np.linalg.norm(a), N)


@pytest.mark.parametrize("Delta", [0.0, 1.0, 2.5])
@pytest.mark.parametrize("sector", ["one", "two"])
def test_matches_dense_exponential(Delta, sector, dense_expm):
    p = ChainParams(N=10, J=1.7, Delta=Delta, B=0.3, B_Q=0.4, n0=4, T=0.9)
    build = build_one_excitation_h if sector == "one" else build_two_excitation_h
    H = build(p).toarray()
    ref = np.diag(build_kick_phases(p, sector)) @ dense_expm(-1j * p.T * H)
    U = build_floquet(p, sector).matrix()
    assert np.max(np.abs(U - ref)) < 1e-12


def test_kick_phase_convention():
    p = ChainParams(N=12, B_Q=0.5, n0=6)
    ph = build_kick_phases(p, "two")
    n1, n2 = pair_arrays(12)
    k = np.flatnonzero((n1 == 3) & (n2 == 8))[0]
    assert ph[k] == pytest.approx(np.exp(-0.25j * (9 + 4)))
    with pytest.raises(ValueError):
        build_kick_phases(p, "three")


def test_kick_is_identity_at_center_only():
    p = ChainParams(N=9, B_Q=1.0, n0=4)
    ph = build_kick_phases(p, "one")
    assert ph[4] == 1 and np.all(ph[np.arange(9) != 4] != 1)


def test_dimension_mismatch_rejected():
    op = build_floquet(ChainParams(N=8), "two")
    with pytest.raises(ValueError, match="dimension"):
        apply_floquet(op, OneExcitationState.localized(8, 0))


def test_chebyshev_agrees_with_spectral(rng):
    p = ChainParams(N=14, J=1.0, Delta=1.5, B=0.1)
    op = build_floquet(p, "two")
    h = build_two_excitation_h(p)
    for t in (0.3, 4.0, 25.0):
        s = _random_state(rng, 14, "two")
        a = chebyshev_apply(h, s, t)
        b = propagate_unkicked(op, s, t).amps
        assert np.max(np.abs(a - b)) < 1e-10


def test_chebyshev_zero_time_and_cap():
    h = build_one_excitation_h(ChainParams(N=8, J=1.0))
    v = np.eye(8)[0]
    assert np.array_equal(chebyshev_apply(h, v, 0.0), v)
    with pytest.raises(ChebyshevConvergenceError):
        chebyshev_apply(h, v, 5.0, bounds=(-100.0, 100.0), tol=0.0)


def test_norm_preserved_large_coupling():
    p = ChainParams(N=64, J=130.0, Delta=2.0, B_Q=0.1)
    op = build_floquet(p)
    s = evolve(op, TwoExcitationState.localized(64, 32, 33), 20,
               {"norm": lambda st: st.norm})
    assert np.max(np.abs(np.array(s["norm"]) - 1)) < 1e-12


def test_evolve_records_and_renormalises(caplog):
    p = ChainParams(N=16, J=2.0, B_Q=0.3)
    op = build_floquet(p, "one")
    init = OneExcitationState(2 * np.eye(16)[8])
    with caplog.at_level(logging.WARNING):
        s = evolve(op, init, 7, [lambda st: st.norm], every=3)
    assert "renormalised" in caplog.text
    assert list(s.periods) == [0, 3, 6, 7]
    assert s.final_state.norm == pytest.approx(1.0)
    with pytest.raises(ValueError):
        evolve(op, init, -1)


def test_translation_invariant_without_kick():
    p = ChainParams(N=12, J=1.0, Delta=0.7)
    op = build_floquet(p)
    a = apply_floquet(op, TwoExcitationState.localized(12, 2, 5)).amps
    b = apply_floquet(op, TwoExcitationState.localized(12, 3, 6)).amps
    n1, n2 = pair_arrays(12)
    for k in range(n1.size):
        x, y = (n1[k] + 1) % 12, (n2[k] + 1) % 12
        lo, hi = min(x, y), max(x, y)
        j = np.flatnonzero((n1 == lo) & (n2 == hi))[0]
        assert abs(a[k] - b[j]) < 1e-13

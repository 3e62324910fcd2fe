import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kickedxxz.chain import ChainParams, OneExcitationState, TwoExcitationState, n_pairs, pair_arrays
from kickedxxz.fermion import BesselPropagatorSpec, two_flip_element
from kickedxxz.floquet import apply_floquet, build_floquet, evolve
from kickedxxz.observables import (
    InsufficientRangeError,
    PeakTrack,
    com_second_moment,
    localization_fit,
    magnetization_profile,
    near_diagonal_mass,
    nn_approximant,
    nn_fidelity,
    nn_indices,
    split_profiles,
    two_site_correlation,
    track_peak,
)


def _random_two(rng, N):
    a = rng.normal(size=n_pairs(N)) + 1j * rng.normal(size=n_pairs(N))
    return TwoExcitationState(a / np.linalg.norm(a), N)


def test_localized_pair_profile():
    prof = magnetization_profile(TwoExcitationState.localized(12, 6, 7))
    assert np.array_equal(prof, np.isin(np.arange(12), [6, 7]).astype(float))


def test_uniform_superposition_profile():
    N = 8
    amps = np.ones(n_pairs(N)) / np.sqrt(n_pairs(N))
    assert np.allclose(magnetization_profile(TwoExcitationState(amps, N)), 2 / 8, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 30), st.integers(0, 2 ** 32 - 1))
def test_profile_sums_and_marginals(N, seed):
    rng = np.random.default_rng(seed)
    s = _random_two(rng, N)
    prof = magnetization_profile(s)
    assert prof.sum() == pytest.approx(2.0, abs=1e-10)
    C = two_site_correlation(s)
    assert np.allclose(C.values, C.values.T) and np.all(np.diag(C.values) == 0)
    assert C.total() == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(C.marginal() - prof)) < 1e-10
    near, far = split_profiles(s)
    assert np.allclose(near + far, prof)
    assert near.sum() == pytest.approx(2 * near_diagonal_mass(s))
    one = rng.normal(size=N) + 0j
    assert magnetization_profile(OneExcitationState(one / np.linalg.norm(one))).sum() == pytest.approx(1.0)


def test_correlation_of_localized_pair():
    C = two_site_correlation(TwoExcitationState.localized(10, 3, 7)).values
    assert C[3, 7] == C[7, 3] == 1 and C.sum() == 2


def test_correlation_rejects_one_flip():
    with pytest.raises(TypeError):
        two_site_correlation(OneExcitationState.localized(6, 2))


def test_correlation_matches_fermion_formula():
    N, n0, beta = 40, 20, 3.0
    p = ChainParams(N=N, J=beta, Delta=0.0, B_Q=0.2, n0=n0)
    s = apply_floquet(build_floquet(p, "two"), TwoExcitationState.localized(N, n0, n0 + 1))
    C = two_site_correlation(s).values
    n1, n2 = pair_arrays(N)
    inner = (np.abs(n1 - n0) < 12) & (np.abs(n2 - n0) < 12)
    want = np.abs(two_flip_element(n1, n2, n0, n0 + 1, BesselPropagatorSpec(beta, 0.2, n0))) ** 2
    assert np.max(np.abs(C[n1, n2] - want)[inner]) < 1e-12


def test_near_diagonal_mass():
    N = 20
    assert near_diagonal_mass(TwoExcitationState.localized(N, 4, 7)) == 1
    assert near_diagonal_mass(TwoExcitationState.localized(N, 4, 8)) == 0
    # ring distance: 0 and 19 are neighbours
    assert near_diagonal_mass(TwoExcitationState.localized(N, 0, 19)) == 1


def test_second_moment_examples():
    n0 = 20
    assert com_second_moment(TwoExcitationState.localized(40, n0 - 5, n0 + 5), n0, 1.0) == 0
    assert com_second_moment(TwoExcitationState.localized(40, n0, n0 + 10), n0, 1.0) == 100
    assert com_second_moment(TwoExcitationState.localized(40, n0, n0 + 10), n0, 0.5) == 25


def test_nn_indices_cover_ring_bonds():
    N = 7
    n1, n2 = pair_arrays(N)
    idx = nn_indices(N)
    got = {(int(n1[i]), int(n2[i])) for i in idx}
    assert got == {(n, n + 1) for n in range(6)} | {(0, 6)}


def test_fidelity_period_zero_is_one():
    p = ChainParams(N=30, J=10.0, Delta=2.0, B_Q=1.0, n0=15)
    rec = nn_fidelity(TwoExcitationState.localized(30, 15, 16), p, 0)
    assert rec.F == 1.0 and rec.period == 0
    with pytest.raises(ValueError):
        nn_fidelity(TwoExcitationState.localized(30, 15, 17), p, 0)
    with pytest.raises(TypeError):
        nn_fidelity(OneExcitationState.localized(30, 15), p, 0)
    with pytest.raises(ValueError):
        nn_approximant(p.replace(Delta=0.0), 15, 1)


def test_fidelity_bounded_and_decays():
    p = ChainParams(N=60, J=10.0, Delta=2.0, B_Q=1.0, n0=30)
    op = build_floquet(p, "two")
    s = TwoExcitationState.localized(60, 30, 31)
    Fs = []
    for k in range(1, 6):
        s = apply_floquet(op, s)
        F = nn_fidelity(s, p, k).F
        assert 0 <= F <= 1 + 1e-12
        Fs.append(F)
    assert all(b <= a + 1e-3 for a, b in zip(Fs, Fs[1:]))


def test_fidelity_tends_to_one_at_large_delta():
    # JT / Delta fixed: the NN approximant becomes exact as Delta grows
    out = []
    for Delta in (2.0, 8.0, 32.0):
        p = ChainParams(N=60, J=5 * Delta, Delta=Delta, B_Q=1.0, n0=30)
        s = evolve(build_floquet(p, "two"), TwoExcitationState.localized(60, 30, 31), 2).final_state
        out.append(nn_fidelity(s, p, 2).F)
    assert out[0] < out[1] < out[2] and out[2] > 0.9


def test_unkicked_approximant_is_one_shot():
    p = ChainParams(N=40, J=6.0, Delta=3.0, B_Q=0.0, n0=20)
    a = nn_approximant(p, 20, 3, kicked=True)
    b = nn_approximant(p, 20, 3, kicked=False)
    # with no kick, three periods of J(x) compose to one J(3x)
    assert abs(abs(np.vdot(a, b)) - 1) < 1e-12


def test_localization_fit_exact_exponential():
    n = np.arange(-200, 201)
    prof = np.exp(-2 * np.abs(n) / 7.0)
    fit = localization_fit(prof, center=200)
    assert fit.L == pytest.approx(7.0, rel=0.01)
    assert fit.decades >= 6


def test_localization_fit_needs_range():
    prof = np.exp(-np.abs(np.arange(-10, 11)) / 50.0)
    with pytest.raises(InsufficientRangeError):
        localization_fit(prof, center=10)
    with pytest.raises(InsufficientRangeError):
        localization_fit(np.zeros(10), center=5)


def test_peak_track_speed():
    N, n0, v = 400, 200, 37
    profiles = []
    for k in range(1, 4):
        prof = np.full(N, 1e-6)
        prof[(n0 + v * k) % N] = 1.0
        prof[(n0 - v * k) % N] = 0.5
        prof[n0] = 5.0
        profiles.append(prof)
    tr = track_peak(profiles, n0, window=10)
    assert np.array_equal(tr.displacement, [v, 2 * v, 3 * v])
    assert tr.speed == pytest.approx(v)
    assert track_peak(profiles, n0, window=10, side=-1).speed == pytest.approx(-v)


def test_peak_track_unwraps_ring():
    N, n0, v = 100, 50, 40
    profiles = []
    for k in range(1, 4):
        prof = np.zeros(N)
        prof[(n0 + v * k) % N] = 1.0
        profiles.append(prof)
    tr = track_peak(profiles, n0, window=5)
    assert np.array_equal(tr.displacement, [40, 80, 120])
    assert PeakTrack(np.array([1, 2]), np.array([3.0, 6.0])).speed == pytest.approx(3.0)

"""Measured quantities: profiles, correlations, moments, fidelity, localization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_j
from .chain import ChainParams, OneExcitationState, TwoExcitationState, pair_arrays, pair_index

__all__ = [
    "CorrelationMatrix",
    "FidelityRecord",
    "LocalizationFit",
    "PeakTrack",
    "InsufficientRangeError",
    "magnetization_profile",
    "two_site_correlation",
    "near_diagonal_mass",
    "split_profiles",
    "com_second_moment",
    "nn_indices",
    "nn_approximant",
    "nn_fidelity",
    "localization_fit",
    "track_peak",
]


class InsufficientRangeError(ValueError):
    pass


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric ``N x N`` matrix of ``<P_n1 P_n2>`` with zero diagonal."""

    values: np.ndarray

    @property
    def N(self) -> int:
        return self.values.shape[0]

    def marginal(self) -> np.ndarray:
        return self.values.sum(axis=1)

    def total(self) -> float:
        return float(np.triu(self.values, 1).sum())


@dataclass(frozen=True)
class FidelityRecord:
    period: int
    F: float


@dataclass(frozen=True)
class LocalizationFit:
    L: float
    slope: float
    intercept: float
    n_points: int
    decades: float


def magnetization_profile(state) -> np.ndarray:
    """``<P_n>``, the flip probability per site; sums to the number of flips."""
    p = np.abs(state.amps) ** 2
    if isinstance(state, OneExcitationState):
        return p
    n1, n2 = pair_arrays(state.N)
    return np.bincount(n1, p, state.N) + np.bincount(n2, p, state.N)


def two_site_correlation(state) -> CorrelationMatrix:
    """Probability of flips on ``n1`` and ``n2``, placed symmetrically."""
    if not isinstance(state, TwoExcitationState):
        raise TypeError("two-site correlation needs a two-excitation state")
    N = state.N
    n1, n2 = pair_arrays(N)
    m = np.zeros((N, N))
    p = np.abs(state.amps) ** 2
    m[n1, n2] = p
    m[n2, n1] = p
    return CorrelationMatrix(m)


def _ring_separation(N):
    n1, n2 = pair_arrays(N)
    d = n2 - n1
    return np.minimum(d, N - d)


def near_diagonal_mass(state: TwoExcitationState, max_sep: int = 3) -> float:
    """Probability that the flips are within ``max_sep`` sites (ring distance)."""
    p = np.abs(state.amps) ** 2
    return float(p[_ring_separation(state.N) <= max_sep].sum())


def split_profiles(state: TwoExcitationState, max_sep: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Magnetization profile split into close pairs (``<= max_sep``) and the rest."""
    N = state.N
    n1, n2 = pair_arrays(N)
    p = np.abs(state.amps) ** 2
    close = _ring_separation(N) <= max_sep
    pc, pf = p * close, p * ~close
    return (np.bincount(n1, pc, N) + np.bincount(n2, pc, N),
            np.bincount(n1, pf, N) + np.bincount(n2, pf, N))


def com_second_moment(state: TwoExcitationState, n0: float, B_Q: float) -> float:
    """``sum |a|^2 (n1 + n2 - 2 n0)^2 B_Q^2``."""
    n1, n2 = pair_arrays(state.N)
    p = np.abs(state.amps) ** 2
    return float(np.sum(p * (n1 + n2 - 2.0 * n0) ** 2) * B_Q ** 2)


# --- nearest-neighbour fidelity ---------------------------------------------

def nn_indices(N: int) -> np.ndarray:
    """Pair indices of ``(n, n+1 mod N)`` for ``n = 0..N-1``."""
    n = np.arange(N)
    a, b = n, (n + 1) % N
    return pair_index(np.minimum(a, b), np.maximum(a, b), N)


def _pair_hop_matrix(N: int, x: float) -> np.ndarray:
    n = np.arange(N)
    d = (n[:, None] - n[None, :] + N // 2) % N - N // 2
    ipow = np.array([1, 1j, -1, -1j])[d % 4]
    return ipow * bessel_j(d, x)


def nn_approximant(params: ChainParams, start: int, period: int, kicked: bool = True) -> np.ndarray:
    """Normalised amplitudes on the pairs ``(n, n+1)`` predicted for a bound pair.

    Kicked: ``period`` applications of
    ``A[n, m] = exp(-i B_Q (n - n0 + 1/2)^2) i^{n-m} J_{n-m}(J T / (2 Delta))``.
    Unkicked: a single ``i^{n-m} J_{n-m}(J t / (2 Delta))`` with ``t = period T``.
    """
    if params.Delta <= 0:
        raise ValueError("the bound-pair approximant requires Delta > 0")
    N = params.N
    phi = np.zeros(N, complex)
    phi[start % N] = 1.0
    if period == 0:
        return phi
    if kicked:
        n = np.arange(N)
        A = np.exp(-1j * params.B_Q * (n - params.n0 + 0.5) ** 2)[:, None] \
            * _pair_hop_matrix(N, params.JT / (2 * params.Delta))
        for _ in range(period):
            phi = A @ phi
    else:
        phi = _pair_hop_matrix(N, params.J * params.T * period / (2 * params.Delta)) @ phi
    return phi / np.linalg.norm(phi)


def nn_fidelity(exact_state: TwoExcitationState, params: ChainParams, period: int,
                start: int | None = None, kicked: bool = True) -> FidelityRecord:
    """``F = |<psi_approx | psi_exact>|^2`` with the approximant on the NN subspace.

    ``exact_state`` must have been evolved for ``period`` periods from
    ``|start, start+1>`` (default ``start = n0``).
    """
    if not isinstance(exact_state, TwoExcitationState):
        raise TypeError("fidelity needs a two-excitation state")
    if exact_state.N != params.N:
        raise ValueError("state and params disagree on N")
    start = int(round(params.n0)) if start is None else int(start)
    if period == 0:
        idx = nn_indices(params.N)
        a = exact_state.amps
        if not math.isclose(abs(a[idx[start % params.N]]), 1.0, abs_tol=1e-12):
            raise ValueError(f"period-0 state is not the pair |{start}, {start + 1}>")
    approx = nn_approximant(params, start, period, kicked)
    amps = exact_state.amps[nn_indices(params.N)]
    F = float(abs(np.vdot(approx, amps)) ** 2)
    return FidelityRecord(period, F)


# --- localization length -------------------------------------------------------

def localization_fit(profile, center: float, window: tuple[float, float] = (1e-12, 1e-2),
                     min_decades: float = 6.0) -> LocalizationFit:
    """Fit ``log P`` against ``|n - center|`` inside ``window``; ``L = -2 / slope``.

    Raises
    ------
    InsufficientRangeError
        If the positive part of the profile spans fewer than ``min_decades``
        decades or fewer than 3 points fall in the window.
    """
    P = np.asarray(profile, dtype=float)
    pos = P[P > 0]
    if pos.size == 0:
        raise InsufficientRangeError("profile has no positive entries")
    decades = float(np.log10(pos.max() / pos.min()))
    if decades < min_decades:
        raise InsufficientRangeError(
            f"profile spans {decades:.1f} decades, need {min_decades:g}")
    r = np.abs(np.arange(P.size) - center)
    sel = (P >= window[0]) & (P <= window[1])
    if sel.sum() < 3:
        raise InsufficientRangeError("fewer than 3 points inside the fit window")
    slope, icpt = np.polyfit(r[sel], np.log(P[sel]), 1)
    if slope >= 0:
        raise InsufficientRangeError("profile does not decay inside the fit window")
    return LocalizationFit(float(-2.0 / slope), float(slope), float(icpt), int(sel.sum()), decades)


# --- peak tracking -------------------------------------------------------------

@dataclass(frozen=True)
class PeakTrack:
    """Unwrapped displacement from ``n0`` of a tracked peak, per period."""

    periods: np.ndarray
    displacement: np.ndarray

    @property
    def speed(self) -> float:
        """Least-squares sites per period, line through the origin at period 0."""
        t = np.concatenate([[0], self.periods])
        d = np.concatenate([[0.0], self.displacement])
        return float(np.polyfit(t, d, 1)[0])


def track_peak(profiles, n0: int, window: int, exclusion: int = 10, side: int = 1) -> PeakTrack:
    """Follow one wavepacket peak through a sequence of profiles.

    ``profiles[k]`` is the profile after period ``k + 1``. The first peak is
    the argmax over sites more than ``exclusion`` from ``n0`` on ``side``;
    later peaks are the argmax within ``+-window`` sites of the position
    extrapolated from the previous two, unwrapped around the ring.
    """
    profiles = [np.asarray(p) for p in profiles]
    N = profiles[0].size
    pos = []
    for k, prof in enumerate(profiles):
        if k == 0:
            cand = np.arange(exclusion + 1, N // 2 + 1) * side
        else:
            prev = pos[-1]
            vel = pos[-1] - (pos[-2] if k >= 2 else 0)
            pred = prev + vel
            cand = np.arange(pred - window, pred + window + 1)
        ring = (n0 + cand) % N
        rd = (ring - n0 + N // 2) % N - N // 2
        ok = np.abs(rd) > exclusion
        if not ok.any():
            pos.append(pos[-1] if pos else 0)
            continue
        vals = np.where(ok, prof[ring], -np.inf)
        pos.append(int(cand[int(np.argmax(vals))]))
    return PeakTrack(np.arange(1, len(profiles) + 1), np.array(pos, dtype=float))

"""Kicked-rotor image of the chain: standard map, quantum kicked rotor, dictionary.

Conventions
-----------
Standard map, kick then drift::

    p' = p + K sin x,    x' = (x + p') mod 2 pi

Quantum kicked rotor over one period, in the plane-wave basis ``|l>``::

    <l|U|l'> = exp(-i l^2 tau / 2) i^{l'-l} J_{l'-l}(K / tau)

With ``l = n - n0``, ``tau = B_Q`` and ``K / tau = J T`` this is the one-flip
Floquet operator of the chain, momentum playing the role of site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_j
from .chain import ChainParams

__all__ = [
    "RotorParams",
    "ImageDictionary",
    "BasisOverflowError",
    "AcceleratorMode",
    "standard_map_step",
    "standard_map_orbit",
    "detect_accelerator_mode",
    "scan_accelerator_modes",
    "accelerator_window",
    "qkr_propagator_element",
    "qkr_moment_series",
    "QKRRun",
    "qkr_evolve",
    "classical_moment_series",
    "image_parameters",
]

TWO_PI = 2.0 * np.pi


class BasisOverflowError(RuntimeError):
    pass


@dataclass(frozen=True)
class RotorParams:
    """QKR parameters: stochasticity ``K = k T``, effective Planck constant ``tau``."""

    K: float
    tau: float
    basis: int = 2048

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.basis < 16 or self.basis % 2:
            raise ValueError("basis must be an even integer >= 16")

    @property
    def beta(self) -> float:
        """Bessel argument ``K / tau``."""
        return self.K / self.tau


@dataclass(frozen=True)
class ImageDictionary:
    """Rotor parameters seen by free flips (``_s``) and by bound pairs (``_b``)."""

    K_s: float
    tau_s: float
    K_b: float | None = None
    tau_b: float | None = None

    def hop_scattering(self, j: int) -> float:
        """Sites per period of a ``j`` accelerator mode of a free flip, ``2 pi j / tau_s``."""
        return TWO_PI * j / self.tau_s

    def hop_bound(self, j: int) -> float:
        """Sites per period of a ``j`` mode of the bound pair's centre, ``2 pi j / tau_b``."""
        if self.tau_b is None:
            raise ValueError("no bound image for Delta <= 0")
        return TWO_PI * j / self.tau_b

    def am2_hop_estimate(self) -> float:
        """Closed-form bound-pair hop ``pi / (Delta B_Q)`` sites per period.

        Kept next to :meth:`hop_bound` for comparison; the two disagree by the
        factor ``Delta / j``, and measured pair speeds follow :meth:`hop_bound`.
        """
        if self.K_b is None:
            raise ValueError("no bound image for Delta <= 0")
        return np.pi / ((self.K_s / self.K_b) * self.tau_s)

    def as_dict(self) -> dict:
        return {"K_s": self.K_s, "tau_s": self.tau_s, "K_b": self.K_b, "tau_b": self.tau_b}


def image_parameters(params: ChainParams) -> ImageDictionary:
    """``K_s = J T B_Q``, ``tau_s = B_Q``; for Delta > 0 also ``K_b = K_s / Delta``, ``tau_b = 2 B_Q``."""
    K_s = params.J * params.T * params.B_Q
    if params.Delta > 0:
        return ImageDictionary(K_s, params.B_Q, K_s / params.Delta, 2.0 * params.B_Q)
    return ImageDictionary(K_s, params.B_Q)


# --- classical ---------------------------------------------------------------

def standard_map_step(x, p, K):
    """One kick-then-drift step; vectorised over ``x`` and ``p``."""
    p = p + K * np.sin(x)
    x = np.mod(x + p, TWO_PI)
    return x, p


def standard_map_orbit(x0, p0, K, n_steps):
    """Orbit ``(x_n, p_n)`` for ``n = 0..n_steps`` (momentum unwrapped)."""
    xs = np.empty(n_steps + 1)
    ps = np.empty(n_steps + 1)
    xs[0], ps[0] = x0, p0
    x, p = x0, p0
    for n in range(1, n_steps + 1):
        x, p = standard_map_step(x, p, K)
        xs[n], ps[n] = x, p
    return xs, ps


def accelerator_window(j: int) -> tuple[float, float]:
    """Range of ``K`` where the period-one ``j`` accelerator island is stable:
    ``2 pi j <= K <= sqrt((2 pi j)^2 + 16)``."""
    a = TWO_PI * j
    return a, math.sqrt(a * a + 16.0)


@dataclass(frozen=True)
class AcceleratorMode:
    K: float
    x0: float
    p0: float
    drift: float
    residual: float
    j: int
    flagged: bool


def detect_accelerator_mode(K: float, x0: float, p0: float, n_steps: int = 200,
                            rel_tol: float = 0.1, max_residual: float = 1.0) -> AcceleratorMode:
    """Fit ``p_n`` linearly in ``n`` and flag a transporting orbit.

    The orbit is flagged when ``|drift|`` lies within ``rel_tol`` of
    ``2 pi j`` for an integer ``j >= 1`` and the RMS deviation of ``p_n`` from
    the fitted line is below ``max_residual``; chaotic orbits fail the second
    test even when their average drift happens to be close.
    """
    if n_steps < 10:
        raise ValueError("n_steps must be >= 10")
    _, ps = standard_map_orbit(x0, p0, K, n_steps)
    n = np.arange(n_steps + 1)
    slope, icpt = np.polyfit(n, ps, 1)
    resid = float(np.sqrt(np.mean((ps - (slope * n + icpt)) ** 2)))
    j = int(round(abs(slope) / TWO_PI))
    flagged = (j >= 1 and abs(abs(slope) - TWO_PI * j) <= rel_tol * TWO_PI * j
               and resid < max_residual)
    return AcceleratorMode(K, x0, p0, float(slope), resid, j if flagged else 0, bool(flagged))


def scan_accelerator_modes(K: float, n_steps: int = 200, nx: int = 25, np_: int = 11,
                           x_halfwidth: float = 0.8, p_halfwidth: float = 0.5) -> list[AcceleratorMode]:
    """Seed grid around ``(+-pi/2, 0)``; returns the flagged orbits."""
    found = []
    for xc in (np.pi / 2, 3 * np.pi / 2):
        for x0 in np.linspace(xc - x_halfwidth, xc + x_halfwidth, nx):
            for p0 in np.linspace(-p_halfwidth, p_halfwidth, np_):
                m = detect_accelerator_mode(K, float(x0 % TWO_PI), float(p0), n_steps)
                if m.flagged:
                    found.append(m)
    return found


def classical_moment_series(K: float, n_steps: int, n_traj: int = 10_000,
                            seed: int = 0, p0: float = 0.0) -> np.ndarray:
    """``<p^2>`` per step for an ensemble with uniform ``x`` and fixed ``p0``."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, TWO_PI, n_traj)
    p = np.full(n_traj, float(p0))
    out = np.empty(n_steps + 1)
    out[0] = np.mean(p * p)
    for n in range(1, n_steps + 1):
        x, p = standard_map_step(x, p, K)
        out[n] = np.mean(p * p)
    return out


# --- quantum -----------------------------------------------------------------

def qkr_propagator_element(l, lp, params: RotorParams):
    """``exp(-i l^2 tau/2) i^{lp-l} J_{lp-l}(K/tau)``, vectorised."""
    l = np.asarray(l)
    d = np.asarray(lp) - l
    ipow = np.array([1, 1j, -1, -1j])[d % 4]
    out = np.exp(-0.5j * params.tau * l.astype(float) ** 2) * ipow * bessel_j(d, params.beta)
    return out[()] if np.ndim(out) == 0 else out


@dataclass
class QKRRun:
    """Momentum distributions and moments of a QKR evolution."""

    params: RotorParams
    l: np.ndarray
    moments: np.ndarray
    final: np.ndarray
    averaged: np.ndarray | None = None


def _edge_population(psi, frac=16):
    w = max(psi.size // frac, 1)
    return float(np.sum(np.abs(psi[:w]) ** 2) + np.sum(np.abs(psi[-w:]) ** 2))


def qkr_evolve(params: RotorParams, initial, n_periods: int,
               average_window: tuple[int, int] | None = None,
               edge_tol: float = 1e-10) -> QKRRun:
    """Evolve a QKR state by repeated one-period maps.

    The kick ``exp(i (K/tau) cos x)`` is applied on an ``x`` grid and the free
    phase in momentum, switching by FFT.

    Parameters
    ----------
    initial : int or array_like
        Momentum index ``l0`` of a plane wave, or amplitudes over
        ``l = -basis/2 .. basis/2 - 1``.
    average_window : (int, int), optional
        Inclusive period range over which ``|psi_l|^2`` is averaged.

    Raises
    ------
    BasisOverflowError
        If the population in the outer sixteenth of the basis at either end
        exceeds ``edge_tol`` at any period.
    """
    M = params.basis
    if M < 2 * abs(params.beta) + 64:
        raise ValueError(f"basis {M} too small for K/tau={params.beta:.3g}; need >= 2 K/tau + 64")
    l = np.arange(-M // 2, M // 2)
    if np.ndim(initial) == 0:
        psi = np.zeros(M, complex)
        psi[int(initial) + M // 2] = 1.0
    else:
        psi = np.asarray(initial, dtype=complex).copy()
        if psi.shape != (M,):
            raise ValueError(f"initial amplitudes must have length {M}")
        psi /= np.linalg.norm(psi)

    x = TWO_PI * np.arange(M) / M
    kick = np.exp(1j * params.beta * np.cos(x))
    free = np.exp(-0.5j * params.tau * l.astype(float) ** 2)
    lt2 = (l * params.tau) ** 2
    moments = np.empty(n_periods + 1)
    moments[0] = np.sum(np.abs(psi) ** 2 * lt2)
    acc = np.zeros(M) if average_window else None
    count = 0
    # momentum index l sits at FFT slot l mod M
    for n in range(1, n_periods + 1):
        phi = np.fft.ifftshift(psi)
        phi = np.fft.fft(kick * np.fft.ifft(phi))
        psi = free * np.fft.fftshift(phi)
        prob = np.abs(psi) ** 2
        moments[n] = np.sum(prob * lt2)
        if _edge_population(psi) > edge_tol:
            raise BasisOverflowError(
                f"edge population {_edge_population(psi):.2e} exceeds {edge_tol:.0e} at "
                f"period {n}; increase basis beyond {M}")
        if average_window and average_window[0] <= n <= average_window[1]:
            acc += prob
            count += 1
    averaged = acc / count if count else None
    return QKRRun(params, l, moments, psi, averaged)


def qkr_moment_series(params: RotorParams, initial, n_periods: int) -> np.ndarray:
    """``<(l tau)^2>`` for periods ``0..n_periods``."""
    return qkr_evolve(params, initial, n_periods).moments

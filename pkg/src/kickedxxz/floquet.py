"""One-period Floquet map ``U(T) = Kick * exp(-i T H_hc)`` and its application.

The unkicked factor is stored in spectral form per total-momentum block, so
one period costs O(N log N) in the one-flip sector and O(N^3) in the two-flip
sector. :func:`chebyshev_apply` is an independent polynomial propagator that
never touches the eigendecomposition; it exists to cross-check the fast path.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .bessel import bessel_j_table
from .chain import (
    ChainParams,
    HamiltonianBlock,
    MomentumBlocks,
    OneExcitationState,
    TwoExcitationState,
    pair_arrays,
    total_momentum_blocks,
)

__all__ = [
    "FloquetOperator",
    "ChebyshevConvergenceError",
    "build_kick_phases",
    "build_floquet",
    "apply_floquet",
    "chebyshev_apply",
    "evolve",
    "EvolutionRecord",
    "ObservableSeries",
]

log = logging.getLogger(__name__)

State = OneExcitationState | TwoExcitationState


class ChebyshevConvergenceError(RuntimeError):
    pass


def build_kick_phases(params: ChainParams, sector: str) -> np.ndarray:
    """Diagonal of the kick factor, ``exp(-i B_Q/2 sum_flips (n - n0)^2)``."""
    half = params.B_Q / 2.0
    if sector == "one":
        n = np.arange(params.N)
        return np.exp(-1j * half * (n - params.n0) ** 2)
    if sector == "two":
        n1, n2 = pair_arrays(params.N)
        return np.exp(-1j * half * ((n1 - params.n0) ** 2 + (n2 - params.n0) ** 2))
    raise ValueError(f"unknown sector {sector!r}")


@dataclass(frozen=True)
class FloquetOperator:
    """Kick phases plus the block spectral form of ``exp(-i T H_hc)``.

    Energies are measured from ``E0``. In the one-flip sector every block is
    1x1 (plane waves), so ``evecs`` is ``None``.
    """

    params: ChainParams
    sector: str
    kick_phases: np.ndarray
    evals: np.ndarray
    evecs: np.ndarray | None
    blocks: MomentumBlocks | None = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.kick_phases.size

    def free_phases(self) -> np.ndarray:
        return np.exp(-1j * self.params.T * self.evals)

    def matrix(self) -> np.ndarray:
        """Dense operator, built column by column (small systems only)."""
        n = self.dimension
        cols = [apply_floquet(self, _wrap(self, np.eye(1, n, k)[0])).amps for k in range(n)]
        return np.array(cols).T


def _wrap(op: FloquetOperator, amps: np.ndarray) -> State:
    if op.sector == "one":
        return OneExcitationState(amps)
    return TwoExcitationState(amps, op.params.N)


def build_floquet(params: ChainParams, sector: str = "two") -> FloquetOperator:
    kick = build_kick_phases(params, sector)
    if sector == "one":
        kappa = 2.0 * np.pi * np.arange(params.N) / params.N
        evals = 2.0 * params.B + params.J * (params.Delta - np.cos(kappa))
        return FloquetOperator(params, sector, kick, evals, None)

    mb = total_momentum_blocks(params)
    evals = np.zeros((mb.N, mb.D))
    evecs = np.zeros((mb.N, mb.D, mb.D))
    for q in range(mb.N):
        n = mb.dims[q]
        try:
            w, v = eigh_tridiagonal(mb.diag[q, :n], mb.offdiag[q, : n - 1])
        except LinAlgError as exc:
            raise LinAlgError(f"diagonalisation failed in momentum block q={q}") from exc
        evals[q, :n] = w
        evecs[q, :n, :n] = v
        evecs[q, n:, n:] = np.eye(mb.D - n)
    return FloquetOperator(params, sector, kick, evals, evecs, mb)


def _apply_free(op: FloquetOperator, amps: np.ndarray, t: float) -> np.ndarray:
    phases = np.exp(-1j * t * op.evals)
    if op.sector == "one":
        return np.fft.ifft(phases * np.fft.fft(amps))
    mb = op.blocks
    c = mb.to_momentum(amps)
    v = op.evecs
    c = np.einsum("qji,qj->qi", v, c)
    c = np.einsum("qij,qj->qi", v, phases * c)
    return mb.from_momentum(c)


def apply_floquet(op: FloquetOperator, state: State) -> State:
    """Return ``U(T) |state>``."""
    if state.amps.size != op.dimension:
        raise ValueError(
            f"state of dimension {state.amps.size} does not match "
            f"{op.sector}-excitation operator of dimension {op.dimension}")
    amps = op.kick_phases * _apply_free(op, state.amps, op.params.T)
    return _wrap(op, amps)


def propagate_unkicked(op: FloquetOperator, state: State, t: float) -> State:
    """``exp(-i t H_hc) |state>`` through the stored spectral form."""
    return _wrap(op, _apply_free(op, state.amps, t))


def _gershgorin(h: sp.spmatrix) -> tuple[float, float]:
    h = sp.csr_matrix(h)
    d = h.diagonal().real
    radius = np.asarray(abs(h).sum(axis=1)).ravel() - np.abs(d)
    return float((d - radius).min()), float((d + radius).max())


def chebyshev_apply(h, state, t: float, bounds: tuple[float, float] | None = None,
                    tol: float = 1e-12) -> np.ndarray:
    """``exp(-i t H) state`` by Chebyshev expansion with sparse mat-vecs.

    Parameters
    ----------
    h : HamiltonianBlock or sparse matrix
        Hermitian generator.
    state : array_like or state object
        Vector to propagate.
    t : float
        Time.
    bounds : (float, float), optional
        Spectral bounds; Gershgorin discs are used when omitted.
    tol : float
        Target for the truncated tail of the expansion.

    Raises
    ------
    ChebyshevConvergenceError
        If the tail bound is not reached within ``4 * rho * |t| + 64`` terms.
    """
    mat = h.matrix if isinstance(h, HamiltonianBlock) else sp.csr_matrix(h)
    vec = np.asarray(getattr(state, "amps", state), dtype=complex)
    if t == 0:
        return vec.copy()
    lo, hi = bounds if bounds is not None else _gershgorin(mat)
    half = max((hi - lo) / 2.0, 1e-300)
    mid = (hi + lo) / 2.0
    rho = max(abs(lo), abs(hi))
    cap = int(4 * rho * abs(t)) + 64
    coef = bessel_j_table(cap, half * t)
    tail = 2.0 * np.cumsum(np.abs(coef[::-1]))[::-1]
    ok = np.nonzero(tail < tol)[0]
    if ok.size == 0:
        raise ChebyshevConvergenceError(
            f"Chebyshev tail {tail[-1]:.2e} exceeds tol={tol:.1e} at degree cap {cap}")
    order = max(int(ok[0]), 1)

    def scaled(v):
        return (mat @ v - mid * v) / half

    t_prev, t_cur = vec, scaled(vec)
    out = coef[0] * t_prev + 2.0 * (-1j) * coef[1] * t_cur
    phase = -1j
    for k in range(2, order):
        t_prev, t_cur = t_cur, 2.0 * scaled(t_cur) - t_prev
        phase *= -1j
        out += 2.0 * phase * coef[k] * t_cur
    return np.exp(-1j * mid * t) * out


@dataclass
class EvolutionRecord:
    period: int
    values: dict


@dataclass
class ObservableSeries:
    """Per-period observer outputs, keyed by observer name."""

    records: list[EvolutionRecord] = field(default_factory=list)
    final_state: State | None = None

    @property
    def periods(self) -> np.ndarray:
        return np.array([r.period for r in self.records])

    def __getitem__(self, name: str) -> list:
        return [r.values[name] for r in self.records]

    def __len__(self):
        return len(self.records)


def _normalized(state: State) -> State:
    norm = state.norm
    if norm == 0:
        raise ValueError("initial state has zero norm")
    if abs(norm - 1.0) > 1e-8:
        log.warning("initial state norm %.3e renormalised", norm)
    amps = state.amps / norm
    if isinstance(state, OneExcitationState):
        return OneExcitationState(amps)
    return TwoExcitationState(amps, state.N)


def evolve(op: FloquetOperator, initial: State, n_periods: int,
           observers: dict[str, Callable[[State], object]] | Sequence | None = None,
           every: int = 1) -> ObservableSeries:
    """Apply the Floquet map ``n_periods`` times, calling observers at t = 0 and
    after every ``every``-th period (and always after the last one)."""
    if n_periods < 0:
        raise ValueError("n_periods must be >= 0")
    if observers is None:
        observers = {}
    elif not isinstance(observers, dict):
        observers = {getattr(f, "__name__", str(i)): f for i, f in enumerate(observers)}
    state = _normalized(initial)
    series = ObservableSeries()

    def record(j):
        series.records.append(EvolutionRecord(j, {k: f(state) for k, f in observers.items()}))

    record(0)
    for j in range(1, n_periods + 1):
        state = apply_floquet(op, state)
        if j % every == 0 or j == n_periods:
            record(j)
    series.final_state = state
    return series

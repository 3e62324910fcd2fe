"""Closed-form propagators of the XX0 chain (Delta = 0) from free fermions.

After a Jordan-Wigner transformation the hopping term is quadratic, so one
period moves each flip independently with a Bessel amplitude and two flips
combine through a 2x2 determinant. The formulas are those of the infinite
chain; on a ring they hold for entries away from the wrap-around, which the
exact engine handles instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bessel import bessel_j

__all__ = [
    "BesselPropagatorSpec",
    "single_flip_element",
    "single_flip_matrix",
    "two_flip_element",
    "one_period_magnetization",
]


@dataclass(frozen=True)
class BesselPropagatorSpec:
    """Parameters of the one-period Bessel propagator.

    Attributes
    ----------
    beta : float
        ``J T``; a negative value is folded into the canonical ``beta >= 0``
        form through ``J_j(-beta) = J_{-j}(beta)``.
    B_Q, n0 : float, int
        Kick strength and centre.
    N : int or None
        Ring length, ``None`` for the infinite chain. Only used to validate
        site indices.
    B : float
        Uniform field. Adds the global phase ``exp(-2i B T)`` per flip, which
        needs ``T``; left at 0 the elements carry no Zeeman phase.
    T : float
        Period, used only with ``B``.
    """

    beta: float
    B_Q: float = 0.0
    n0: int = 0
    N: int | None = None
    B: float = 0.0
    T: float = 1.0

    def __post_init__(self):
        if self.N is not None and self.N < 1:
            raise ValueError("N must be positive or None")

    @property
    def canonical(self) -> tuple[float, int]:
        """``(|beta|, s)`` with ``J_j(beta) = s^j J_j(|beta|)``."""
        return abs(self.beta), (1 if self.beta >= 0 else -1)

    def _check(self, *sites):
        if self.N is None:
            return
        for s in sites:
            if np.any((np.asarray(s) < 0) | (np.asarray(s) >= self.N)):
                raise ValueError(f"site index outside 0..{self.N - 1}")


def _jj(orders, spec: BesselPropagatorSpec):
    beta, s = spec.canonical
    orders = np.asarray(orders)
    vals = bessel_j(orders, beta)
    return vals if s > 0 else vals * np.where(orders % 2 == 0, 1.0, -1.0)


def _ipow(k):
    return np.array([1, 1j, -1, -1j])[np.asarray(k) % 4]


def _kick(n, spec):
    return np.exp(-0.5j * spec.B_Q * (np.asarray(n) - spec.n0) ** 2)


def single_flip_element(n, m, spec: BesselPropagatorSpec):
    """``<n|U(T)|m> = exp(-i B_Q/2 (n-n0)^2) i^{m-n} J_{m-n}(beta)``.

    Vectorised over ``n`` and ``m``.
    """
    spec._check(n, m)
    d = np.asarray(m) - np.asarray(n)
    out = _kick(n, spec) * _ipow(d) * _jj(d, spec)
    if spec.B:
        out = out * np.exp(-2j * spec.B * spec.T)
    return out[()] if np.ndim(out) == 0 else out


def single_flip_matrix(sites, spec: BesselPropagatorSpec) -> np.ndarray:
    """Dense block ``<n|U|m>`` for ``n, m`` in ``sites``."""
    s = np.asarray(sites)
    return single_flip_element(s[:, None], s[None, :], spec)


def two_flip_element(n1, n2, m1, m2, spec: BesselPropagatorSpec):
    """``<n1 n2|U(T)|m1 m2>`` for the XX0 chain.

    ``exp(-i B_Q/2 [(n1-n0)^2 + (n2-n0)^2]) i^{n1+n2-m1-m2}
    [J_{n1-m1} J_{n2-m2} - J_{n1-m2} J_{n2-m1}]``, the Wick determinant of
    two single-flip elements. Ordering of either pair is not enforced, so the
    antisymmetry under ``m1 <-> m2`` is visible to callers.
    """
    spec._check(n1, n2, m1, m2)
    n1, n2, m1, m2 = (np.asarray(a) for a in (n1, n2, m1, m2))
    bracket = (_jj(n1 - m1, spec) * _jj(n2 - m2, spec)
               - _jj(n1 - m2, spec) * _jj(n2 - m1, spec))
    out = _kick(n1, spec) * _kick(n2, spec) * _ipow(n1 + n2 - m1 - m2) * bracket
    if spec.B:
        out = out * np.exp(-4j * spec.B * spec.T)
    return out[()] if np.ndim(out) == 0 else out


def one_period_magnetization(n, n0: int, beta: float):
    """Flip probability at site ``n`` one period after ``|n0, n0+1>`` at Delta = 0.

    ``J_{n-n0}(beta)^2 + J_{n-n0-1}(beta)^2``: the two flips spread as if
    independent, each from its own site.
    """
    d = np.asarray(n) - n0
    b = abs(beta)
    out = bessel_j(d, b) ** 2 + bessel_j(d - 1, b) ** 2
    return out[()] if np.ndim(out) == 0 else out

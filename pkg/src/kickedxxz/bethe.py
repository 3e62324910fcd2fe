"""Two-magnon Bethe ansatz on the XXZ ring.

A root is stored as quasi-momenta ``(k1, k2)``, scattering phase ``theta`` and
Bethe numbers ``(lambda1, lambda2)`` with

    exp(i theta) = -(1 + e^{i(k1+k2)} - 2 Delta e^{i k1}) / (1 + e^{i(k1+k2)} - 2 Delta e^{i k2})
    N k1 = 2 pi lambda1 + theta,   N k2 = 2 pi lambda2 - theta.

Writing ``k1,2 = K/2 +- u`` with total momentum ``K = 2 pi S / N`` the
equations collapse to one polynomial of degree ``N`` in ``z = exp(i u)``

    (-1)^S (c z^N - Delta z^{N-1}) + c - Delta z = 0,    c = cos(K/2),

whose roots come in reciprocal pairs ``z, 1/z`` (the same state with the two
magnons swapped). :func:`enumerate_spectrum` uses this to find every root of a
momentum class; :func:`solve_root` runs Newton on ``(k1, k2, theta)`` for a
single pair of Bethe numbers.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainParams, TwoExcitationState, pair_arrays

__all__ = [
    "BetheRoot",
    "SpectrumCatalog",
    "UnresolvedRootError",
    "solve_root",
    "enumerate_spectrum",
    "two_magnon_energy",
    "bound_band_energy",
    "build_eigenstate",
    "relative_form_amplitudes",
    "bethe_residual",
    "bound_energy_deviation",
]

TWO_PI = 2.0 * np.pi
COLLISION_TOL = 1e-9
ACCEPT_RESIDUAL = 1e-10
# Im u used for the bound pair at K = pi, where it is confined to adjacent sites
DECOUPLED_DEPTH = 40.0


class UnresolvedRootError(RuntimeError):
    pass


@dataclass(frozen=True)
class BetheRoot:
    lambda1: int
    lambda2: int
    kappa1: complex
    kappa2: complex
    theta: complex
    kind: str
    residual: float
    limit: bool = False

    @property
    def kappa_total(self) -> float:
        return float((self.kappa1 + self.kappa2).real)

    @property
    def kappa_rel(self) -> complex:
        return (self.kappa1 - self.kappa2) / 2.0


@dataclass
class SpectrumCatalog:
    params: ChainParams
    roots: list[BetheRoot] = field(default_factory=list)
    # (momentum class S, number of states missing)
    unresolved: list[tuple[int, int]] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        out = {"scattering": 0, "bound": 0, "free": 0}
        for r in self.roots:
            out[r.kind] += 1
        out["unresolved"] = sum(n for _, n in self.unresolved)
        return out

    @property
    def energies(self) -> np.ndarray:
        return np.array([two_magnon_energy(r, self.params).real for r in self.roots])

    @property
    def complete(self) -> bool:
        return len(self.roots) == self.params.N * (self.params.N - 1) // 2

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda1", "lambda2", "re_k1", "im_k1", "re_k2", "im_k2",
                    "re_theta", "im_theta", "class", "energy", "residual"])
        for r, e in zip(self.roots, self.energies):
            w.writerow([r.lambda1, r.lambda2,
                        repr(r.kappa1.real), repr(r.kappa1.imag),
                        repr(r.kappa2.real), repr(r.kappa2.imag),
                        repr(r.theta.real), repr(r.theta.imag),
                        r.kind, repr(float(e)), repr(float(r.residual))])
        return buf.getvalue()


# --- Bethe equations in (k1, k2, theta) ---------------------------------------

def _num_den(k1, k2, delta):
    ek = np.exp(1j * (k1 + k2))
    return 1 + ek - 2 * delta * np.exp(1j * k1), 1 + ek - 2 * delta * np.exp(1j * k2)


def _residual_vector(x, lam1, lam2, N, delta):
    k1, k2, th = x
    num, den = _num_den(k1, k2, delta)
    eth = np.exp(1j * th)
    # cleared form, oriented so the exponential factor has modulus <= 1
    if abs(eth) <= 1:
        f1 = num + eth * den
    else:
        f1 = num / eth + den
    return np.array([f1,
                     N * k1 - TWO_PI * lam1 - th,
                     N * k2 - TWO_PI * lam2 + th])


def _jacobian(x, N, delta):
    k1, k2, th = x
    num, den = _num_den(k1, k2, delta)
    ek = 1j * np.exp(1j * (k1 + k2))
    dnum = (ek - 2j * delta * np.exp(1j * k1), ek)
    dden = (ek, ek - 2j * delta * np.exp(1j * k2))
    eth = np.exp(1j * th)
    if abs(eth) <= 1:
        row = [dnum[0] + eth * dden[0], dnum[1] + eth * dden[1], 1j * eth * den]
    else:
        row = [dnum[0] / eth + dden[0], dnum[1] / eth + dden[1], -1j * num / eth]
    return np.array([row, [N, 0, -1], [0, N, 1]], dtype=complex)


def bethe_residual(root: BetheRoot, params: ChainParams) -> float:
    """Max absolute violation of the Bethe equations (cleared, oriented form)."""
    if root.limit:
        r = _residual_vector((root.kappa1, root.kappa2, root.theta),
                             root.lambda1, root.lambda2, params.N, params.Delta)
        return float(np.abs(r[1:]).max())
    r = _residual_vector((root.kappa1, root.kappa2, root.theta),
                         root.lambda1, root.lambda2, params.N, params.Delta)
    return float(np.abs(r).max())


def _newton(x0, lam1, lam2, N, delta, maxiter=60, tol=1e-13):
    x = np.array(x0, dtype=complex)
    f = _residual_vector(x, lam1, lam2, N, delta)
    fn = np.abs(f).max()
    for _ in range(maxiter):
        if fn < tol:
            return x, fn
        try:
            step = np.linalg.solve(_jacobian(x, N, delta), -f)
        except np.linalg.LinAlgError:
            return x, fn
        alpha = 1.0
        while alpha > 1e-4:
            xn = x + alpha * step
            fnew = _residual_vector(xn, lam1, lam2, N, delta)
            if np.abs(fnew).max() < fn or alpha < 2e-4:
                break
            alpha /= 2
        if np.abs(step).max() * alpha < 1e-15:
            x, f, fn = xn, fnew, np.abs(fnew).max()
            return x, fn
        x, f, fn = xn, fnew, np.abs(fnew).max()
    return x, fn


# --- canonical labelling ---------------------------------------------------

def _classify(delta, theta):
    if delta == 0:
        return "free"
    return "scattering" if abs(theta.imag) < 1e-8 else "bound"


def _branch_theta(k1: complex, k2: complex, delta: float) -> float | None:
    """Scattering phase on the branch continuous with the free value ``pi``.

    ``theta = pi + 2 arg(s (c - Delta e^{iu}))`` with ``s = sign(c)``; only
    defined for real roots.
    """
    if abs(k1.imag) > 1e-9 or abs(k2.imag) > 1e-9:
        return None
    K, u = (k1 + k2).real, ((k1 - k2) / 2).real
    c = math.cos(K / 2)
    s = -1.0 if c < 0 else 1.0
    return np.pi + 2.0 * float(np.angle(s * (c - delta * np.exp(1j * u))))


def _canonical(k1: complex, k2: complex, N: int, delta: float = 0.0):
    """Reduce a root to Bethe numbers ``0 <= lambda1 <= lambda2 < N``.

    Real roots take ``theta`` on the branch continuous with the free value
    ``pi``; when that branch puts the Bethe numbers out of order, and for
    complex roots, the labelling with ``Re theta`` closest to ``pi`` among both
    magnon orderings and nearby branches is kept.
    """
    best = None
    for a, b in ((k1, k2), (k2, k1)):
        pref = _branch_theta(a, b, delta)
        base = math.floor((N * a).real / TWO_PI)
        for lam1 in range(base - 2, base + 3):
            th = N * a - TWO_PI * lam1
            lam2 = round(((N * b + th) / TWO_PI).real)
            q1, q2 = lam1 % N, lam2 % N
            if q1 > q2:
                continue
            ref = np.pi if pref is None else pref
            score = abs(th.real - ref)
            if best is None or score < best[0] - 1e-12:
                best = (score, a - TWO_PI * (lam1 // N), b - TWO_PI * (lam2 // N), th, q1, q2)
    return None if best is None else best[1:]


def _make_root(k1, k2, params, limit=False):
    N = params.N
    if limit:
        lam = sorted(round((N * k).real / TWO_PI) for k in (complex(k1), complex(k2)))
        lam1, lam2 = lam[0] % N, lam[1] % N
        if lam1 > lam2:
            lam1, lam2 = lam2, lam1
        can = (TWO_PI * lam1 / N, TWO_PI * lam2 / N, 0.0, lam1, lam2)
    else:
        can = _canonical(complex(k1), complex(k2), N, params.Delta)
    if can is None:
        return None
    k1, k2, th, lam1, lam2 = can
    root = BetheRoot(lam1, lam2, complex(k1), complex(k2), complex(th),
                     _classify(params.Delta, complex(th)), 0.0, limit)
    if limit and params.Delta != 0:
        root = BetheRoot(lam1, lam2, complex(k1), complex(k2), complex(th),
                         "scattering", 0.0, True)
    return _with_residual(root, params)


def _with_residual(root, params):
    return BetheRoot(root.lambda1, root.lambda2, root.kappa1, root.kappa2, root.theta,
                     root.kind, bethe_residual(root, params), root.limit)


def _is_collision(k1, k2):
    u = complex((k1 - k2) / 2.0)
    d = (u.real + np.pi / 2) % np.pi - np.pi / 2
    return abs(complex(d, u.imag)) < COLLISION_TOL


def _near_limit(k1, k2, delta, tol=1e-4):
    """Exact ``(k1, k2)`` of the limiting state if Newton stalled next to it.

    When ``cos(K/2) = +-Delta`` the collapsed equation has a double root at
    ``u = 0`` or ``pi`` and Newton only approaches it to ~sqrt(eps).
    """
    K = complex(k1 + k2).real
    u = complex(k1 - k2) / 2
    c = math.cos(K / 2)
    for target, cval in ((0.0, delta), (np.pi, -delta)):
        if abs(c - cval) < COLLISION_TOL:
            d = complex((u.real - target + np.pi) % TWO_PI - np.pi, u.imag)
            if abs(d) < tol:
                return K / 2 + target, K / 2 - target
    return None


# --- single root by Newton -------------------------------------------------

def _free_seed(lam1, lam2, N):
    return ((TWO_PI * lam1 + np.pi) / N, (TWO_PI * lam2 - np.pi) / N, np.pi)


def _string_seeds(lam1, lam2, N, delta):
    K = TWO_PI * (lam1 + lam2) / N
    c = math.cos(K / 2)
    seeds = []
    if delta != 0 and c != 0:
        # c - Delta e^{iu} = 0 for the decaying member of the pair
        z = c / delta
        u = -1j * np.log(complex(z))
        for uu in (u, -u):
            k1, k2 = K / 2 + uu, K / 2 - uu
            seeds.append((k1, k2, N * k1 - TWO_PI * lam1))
    return seeds


def solve_root(params: ChainParams, lambda1: int, lambda2: int, seed=None,
               continuation_steps: int = 16) -> BetheRoot:
    """Newton solve of the Bethe equations for Bethe numbers ``lambda1 <= lambda2``.

    Seeds tried in order: ``seed`` (a ``(k1, k2, theta)`` triple) if given,
    the free solution ``theta = pi`` continued in Delta from 0, and the
    large-Delta string guess, then the full root set of the momentum class
    ``lambda1 + lambda2``. A root is accepted only if Newton converges, the
    state is non-null and its canonical labels match the request. Bethe
    numbers do not always identify a root uniquely; when two roots share
    labels the first one reached is returned.

    Raises
    ------
    UnresolvedRootError
        If no seed yields an acceptable root.
    """
    N, delta = params.N, params.Delta
    if not 0 <= lambda1 <= lambda2 <= N - 1:
        raise ValueError(f"need 0 <= lambda1 <= lambda2 <= N-1, got ({lambda1}, {lambda2})")

    candidates = []
    if seed is not None:
        candidates.append(("seed", seed))
    candidates.append(("free", _free_seed(lambda1, lambda2, N)))
    for s in _string_seeds(lambda1, lambda2, N, delta):
        candidates.append(("string", s))

    for how, x0 in candidates:
        if how == "free" and delta != 0:
            x = np.array(x0, complex)
            ok = True
            for d in np.linspace(0, delta, continuation_steps + 1)[1:]:
                x, fn = _newton(x, lambda1, lambda2, N, d)
                if not np.isfinite(fn):
                    ok = False
                    break
            if not ok:
                continue
        else:
            x = np.array(x0, complex)
        x, fn = _newton(x, lambda1, lambda2, N, delta)
        if not fn < ACCEPT_RESIDUAL:
            continue
        limit = _near_limit(x[0], x[1], delta)
        if limit is not None:
            root = _make_root(*limit, params, limit=True)
            if root is not None and (root.lambda1, root.lambda2) == (lambda1, lambda2):
                return root
            continue
        if _is_collision(x[0], x[1]):
            continue
        root = _make_root(x[0], x[1], params)
        if root is None or (root.lambda1, root.lambda2) != (lambda1, lambda2):
            continue
        if root.residual < ACCEPT_RESIDUAL and _state_norm(root, params) > 1e-8:
            return root
    # last resort: the complete root set of the momentum class
    for root in _class_roots(params, (lambda1 + lambda2) % N):
        if (root.lambda1, root.lambda2) == (lambda1, lambda2):
            return root
    raise UnresolvedRootError(
        f"no Bethe root found for (lambda1, lambda2)=({lambda1}, {lambda2}) at "
        f"N={N}, Delta={delta}")


# --- complete enumeration ----------------------------------------------------

def _class_dimension(N: int, S: int) -> int:
    if N % 2:
        return (N - 1) // 2
    return N // 2 if S % 2 == 0 else N // 2 - 1


def _momentum_class_roots(params: ChainParams, S: int):
    """All ``u`` solving the collapsed equation for total momentum ``2 pi S / N``.

    Returns a list of ``(u, limit)`` with one representative per reciprocal
    pair, ``Im u >= 0``.
    """
    N, delta = params.N, params.Delta
    c = math.cos(np.pi * S / N)
    sgn = -1.0 if S % 2 else 1.0
    decoupled = delta != 0 and abs(c) < 1e-12
    if decoupled:
        # K = pi: the adjacent pair decouples; z = 0 and its partner at infinity
        # drop out, leaving (-1)^S z^(N-2) + 1
        c = 0.0
        coeffs = np.zeros(N - 1)
        coeffs[0] = sgn
        coeffs[-1] = 1.0
    else:
        coeffs = np.zeros(N + 1)
        coeffs[0] = sgn * c
        coeffs[1] = -sgn * delta
        coeffs[-2] += -delta
        coeffs[-1] += c
    poly = np.poly1d(coeffs)
    # spurious roots z = +1 (S odd) and z = -1 (S + N odd) carry null states
    if S % 2:
        poly, _ = np.polydiv(poly, np.poly1d([1.0, -1.0]))
    if (S + N) % 2:
        poly, _ = np.polydiv(poly, np.poly1d([1.0, 1.0]))
    zs = list(np.roots(np.poly1d(poly).coeffs))

    def f_and_df(u):
        e_nu = np.exp(1j * N * u)
        a = c - delta * np.exp(-1j * u)
        f = sgn * e_nu * a + (c - delta * np.exp(1j * u))
        df = sgn * (1j * N * e_nu * a + e_nu * 1j * delta * np.exp(-1j * u)) \
            - 1j * delta * np.exp(1j * u)
        return f, df

    reps = []
    while zs:
        z = zs.pop(0)
        if not zs:
            reps.append(z)
            break
        j = int(np.argmin([abs(w * z - 1) for w in zs]))
        w = zs.pop(j)
        reps.append(z if abs(z) <= abs(w) else w)

    out = [(complex(0.0, DECOUPLED_DEPTH), False)] if decoupled else []
    for z in reps:
        u = -1j * np.log(complex(z))
        if u.imag < 0:
            u = -u
        if abs(u.imag) < 1e-7 and u.real < 0:
            u = -u
        # double roots at z = +-1 when c = +-Delta: the limiting (theta = 0) state
        for target, cval in ((0.0, delta), (np.pi, -delta)):
            if abs(c - cval) < COLLISION_TOL and abs(complex((u.real - target + np.pi) % TWO_PI - np.pi, u.imag)) < 1e-4:
                out.append((complex(target), True))
                break
        else:
            for _ in range(50):
                f, df = f_and_df(u)
                if df == 0:
                    break
                step = f / df
                u = u - step
                if abs(step) < 1e-15:
                    break
            if u.imag < 0:
                u = -u
            out.append((complex(u), False))
    return out


def _class_roots(params: ChainParams, S: int) -> list[BetheRoot]:
    """Polished, non-null, distinct roots of momentum class ``S``."""
    N = params.N
    K = TWO_PI * S / N
    found, seen = [], set()
    for u, limit in _momentum_class_roots(params, S):
        k1, k2 = K / 2 + u, K / 2 - u
        if limit:
            root = _make_root(k1, k2, params, limit=True)
        else:
            if _is_collision(k1, k2):
                continue
            root = _make_root(k1, k2, params)
            if root is None:
                continue
            x, fn = _newton((root.kappa1, root.kappa2, root.theta),
                            root.lambda1, root.lambda2, N, params.Delta)
            if fn < ACCEPT_RESIDUAL and not _is_collision(x[0], x[1]):
                polished = _make_root(x[0], x[1], params)
                if polished is not None:
                    root = polished
        if root is None or root.residual >= ACCEPT_RESIDUAL:
            continue
        if _state_norm(root, params) < 1e-8:
            continue
        key = (round(root.kappa1.real % TWO_PI, 7), round(root.kappa1.imag, 7),
               round(root.kappa2.real % TWO_PI, 7), round(root.kappa2.imag, 7))
        if key in seen or key[2:] + key[:2] in seen:
            continue
        seen.add(key)
        found.append(root)
    return found


def enumerate_spectrum(params: ChainParams) -> SpectrumCatalog:
    """Every two-magnon Bethe root of the ring, classified.

    Each total-momentum class is solved completely through its collapsed
    polynomial, then every root is polished by Newton on ``(k1, k2, theta)``
    with its canonical Bethe numbers. Classes where fewer distinct non-null
    roots than states are found are recorded in ``unresolved``.
    """
    N = params.N
    if N > 64:
        raise ValueError("enumerate_spectrum is limited to N <= 64")
    cat = SpectrumCatalog(params)
    for S in range(N):
        found = _class_roots(params, S)
        missing = _class_dimension(N, S) - len(found)
        if missing > 0:
            cat.unresolved.append((S, missing))
        cat.roots.extend(found)
    cat.roots.sort(key=lambda r: (r.lambda1, r.lambda2, r.kappa1.real))
    return cat


# --- energies and eigenstates -----------------------------------------------------

def two_magnon_energy(root: BetheRoot, params: ChainParams) -> complex:
    """``E - E0 = 4B + J (2 Delta - cos k1 - cos k2)``.

    Evaluated as ``2 cos(K/2) cos(u)`` so conjugate pairs give a real value up
    to rounding.
    """
    K = (root.kappa1 + root.kappa2).real
    u = root.kappa_rel
    c = np.cos(K / 2)
    if abs(c) < 1e-12 and params.Delta != 0:
        # c cos(u) -> Delta / 2 for the adjacent pair, 0 for the rest
        ccos = params.Delta / 2 if abs(u.imag) > 1 else 0.0
    else:
        ccos = c * np.cos(u)
    return complex(4 * params.B + params.J * (2 * params.Delta - 2 * ccos))


def bound_band_energy(kappa_total, params: ChainParams):
    """Infinite-chain bound-pair dispersion ``4B + J Delta - J/(2 Delta) (1 + cos K)``."""
    if params.Delta <= 0:
        raise ValueError("bound-pair dispersion requires Delta > 0")
    K = np.asarray(kappa_total, dtype=float)
    return 4 * params.B + params.J * params.Delta - params.J / (2 * params.Delta) * (1 + np.cos(K))


def bound_energy_deviation(root: BetheRoot, params: ChainParams) -> float:
    """``|E_N - E_band|`` for a bound root, free of cancellation.

    With ``z = e^{iu}`` the Bethe equation gives
    ``Delta z - c = (-1)^S z^N (c - Delta / z)``, a product of small factors
    computed directly; the energy gap then follows from
    ``cos u - cos u_inf = delta (1 - 1/(z z_inf)) / 2`` with ``z_inf = c/Delta``.
    Plain subtraction of the two energies floors at round-off once the gap
    drops below ~1e-14.
    """
    if root.kind != "bound":
        raise ValueError("deviation from the bound band is defined for bound roots only")
    N, delta, J = params.N, params.Delta, params.J
    K = root.kappa_total
    c = math.cos(K / 2)
    if abs(c) < 1e-12:
        return 0.0
    S = round(K * N / TWO_PI)
    u = root.kappa_rel
    # representative with |z| < 1
    if u.imag < 0:
        u = -u
    z = np.exp(1j * u)
    sgn = -1.0 if S % 2 else 1.0
    eps = sgn * np.exp(1j * N * u) * (c - delta / z)
    d = eps / delta
    dcos = d * (1 - 1 / (z * (c / delta))) / 2
    return float(abs(2 * J * c * dcos))


def _raw_amplitudes(root: BetheRoot, N: int) -> np.ndarray:
    n1, n2 = pair_arrays(N)
    K = (root.kappa1 + root.kappa2).real
    u = root.kappa_rel
    r = n2 - n1
    g = 1j * (-u * r + root.theta / 2)
    # rescale before exponentiating: bound roots have terms growing like e^{N v / 2}
    shift = np.abs(g.real).max()
    f = np.exp(g - shift) + np.exp(-g - shift)
    return np.exp(0.5j * K * (n1 + n2)) * f


def _state_norm(root: BetheRoot, params: ChainParams) -> float:
    a = _raw_amplitudes(root, params.N)
    return float(np.linalg.norm(a) / math.sqrt(a.size))


def build_eigenstate(root: BetheRoot, params: ChainParams) -> TwoExcitationState:
    """Normalised Bethe eigenstate ``a(n1, n2)`` over ordered pairs."""
    a = _raw_amplitudes(root, params.N)
    norm = np.linalg.norm(a)
    if not norm > 0 or not np.isfinite(norm):
        raise ValueError("Bethe amplitudes vanish for this root (null state)")
    return TwoExcitationState(a / norm, params.N)


def relative_form_amplitudes(root: BetheRoot, params: ChainParams) -> TwoExcitationState:
    """Scattering amplitudes in centre-of-mass / relative coordinates.

    ``a ~ exp(i Kc (n1+n2)/2) [sin(kr (n1-n2+1)) - cos(Kc/2)/Delta sin(kr (n1-n2))]``
    with ``Kc = 2 pi (lambda1+lambda2)/N`` and ``kr = (pi (lambda1-lambda2) + theta)/N``.
    """
    if params.Delta == 0:
        raise ValueError("relative form needs Delta != 0")
    N = params.N
    n1, n2 = pair_arrays(N)
    kc = TWO_PI * (root.lambda1 + root.lambda2) / N
    kr = (np.pi * (root.lambda1 - root.lambda2) + root.theta) / N
    d = n1 - n2
    a = np.exp(0.5j * kc * (n1 + n2)) * (
        np.sin(kr * (d + 1)) - np.cos(kc / 2) / params.Delta * np.sin(kr * d))
    return TwoExcitationState(a / np.linalg.norm(a), N)

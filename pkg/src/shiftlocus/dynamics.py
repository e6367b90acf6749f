"""Floating-point dynamics of a normalized polynomial.

Green's function and Böttcher angles are computed from the orbit.  Once an
iterate is past the radius ``R2`` where the principal-branch product for the
Böttcher map converges, the orbit continues in log coordinates ``L = log w``,
which never overflows.  Angles are in turns and heights are natural logs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import (
    AngleResolutionFailure,
    CriticalHit,
    NotInShiftLocus,
    RootFindingFailure,
    StepCollapse,
    UnreliableCoordinate,
)

__all__ = [
    "NormalizedPolynomial",
    "GreenEvaluation",
    "BottcherCoordinate",
    "NumericLeaf",
    "CriticalRecord",
    "ShiftLocusVerdict",
    "critical_points",
    "green_value",
    "green_array",
    "bottcher",
    "trace_flowline",
    "trace_ray",
    "is_in_shift_locus",
    "critical_leaf",
    "numeric_elamination",
    "unicritical_on_ray",
]

TWO_PI = 2 * math.pi
EPS = np.finfo(float).eps
DEFAULT_BUDGET = 1000
DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class NormalizedPolynomial:
    """``z**q + a2 z**(q-2) + ... + aq``; ``coeffs`` holds a2..aq."""

    q: int
    coeffs: tuple

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 2:
            raise ValueError("degree must be an integer >= 2")
        c = tuple(complex(a) for a in self.coeffs)
        if len(c) != self.q - 1:
            raise ValueError(f"expected {self.q - 1} coefficients a2..a{self.q}, got {len(c)}")
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_roots_form(cls, c: complex):
        """``(z - c)**2 (z + 2c)`` for q = 3."""
        return cls(3, (-3 * c * c, 2 * c**3))

    @cached_property
    def poly(self) -> np.ndarray:
        """numpy coefficient vector, highest degree first."""
        return np.array((1.0, 0.0) + self.coeffs, dtype=complex)

    @cached_property
    def dpoly(self) -> np.ndarray:
        return np.polyder(self.poly)

    def __call__(self, z):
        return np.polyval(self.poly, z)

    def derivative(self, z):
        return np.polyval(self.dpoly, z)

    @cached_property
    def coeff_mass(self) -> float:
        return float(sum(abs(a) for a in self.coeffs))

    @cached_property
    def escape_radius(self) -> float:
        """|w| > R implies |f(w)| >= 2|w|."""
        S = self.coeff_mass
        return max(2.0, 2 * S, 1 + math.sqrt(1 + S))

    @cached_property
    def bottcher_radius(self) -> float:
        """Radius past which the principal-branch product converges (|eps| <= 1/2)."""
        return max(2.0, math.sqrt(2 * self.coeff_mass))

    @cached_property
    def critical_heights(self) -> tuple:
        pts = critical_points(self)
        return tuple(green_value(self, c).value for c in pts)

    @property
    def max_critical_height(self) -> float:
        return max(self.critical_heights)

    def __repr__(self):
        terms = " + ".join(f"({a:g}) z^{self.q - i - 2}" for i, a in enumerate(self.coeffs))
        return f"NormalizedPolynomial(z^{self.q} + {terms})"


# ---------------------------------------------------------------------------
# orbits


@dataclass
class _Orbit:
    w: np.ndarray  # last iterate of the direct phase
    n_direct: np.ndarray  # iterations before passing R2
    escaped: np.ndarray
    L: np.ndarray  # log of the far iterate (valid where escaped)
    n_total: np.ndarray
    ratio: np.ndarray  # q^-n (f^n)'/f^n, i.e. the derivative of log phi

    def green(self, q: int) -> np.ndarray:
        g = np.zeros(self.w.shape)
        e = self.escaped
        g[e] = np.exp(np.log(self.L.real[e]) - self.n_total[e] * math.log(q))
        return g

    def far_theta(self, q: int) -> np.ndarray:
        """Angle of the first iterate past R2, in turns."""
        th = np.zeros(self.w.shape)
        e = self.escaped
        m = (self.n_total - self.n_direct)[e]
        th[e] = np.mod(self.L.imag[e] / TWO_PI / np.power(float(q), m), 1.0)
        return th


def _orbit(f: NormalizedPolynomial, z, budget: int = DEFAULT_BUDGET) -> _Orbit:
    z = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
    q = f.q
    R2 = f.bottcher_radius
    w = z.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = 1.0 / z
    n = np.zeros(z.shape, dtype=np.int64)
    active = np.abs(w) <= R2
    for _ in range(budget):
        if not active.any():
            break
        wa = w[active]
        fw = f(wa)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio[active] *= wa * f.derivative(wa) / (q * fw)
        w[active] = fw
        n[active] += 1
        active[active] = np.abs(fw) <= R2
    escaped = np.abs(w) > R2
    n_direct = n.copy()
    L = np.zeros(z.shape, dtype=complex)
    with np.errstate(divide="ignore"):
        L[escaped] = np.log(w[escaped])
    # log phase: L <- qL + log(1 + eps), eps = sum a_i e^{-iL}
    idx = np.nonzero(escaped)[0]
    a = np.array(f.coeffs)
    powers = np.arange(2, q + 1)
    weights = (q - powers) / q
    for _ in range(64):
        if len(idx) == 0:
            break
        Li = L[idx]
        ex = np.exp(-powers[None, :] * Li[:, None])
        eps = ex @ a
        deps = ex @ (a * weights)
        ratio[idx] *= (1 + deps) / (1 + eps)
        L[idx] = q * Li + np.log1p(eps)
        n[idx] += 1
        idx = idx[np.abs(eps) > 1e-18]
    return _Orbit(w, n_direct, escaped, L, n, ratio)


@dataclass(frozen=True)
class GreenEvaluation:
    value: float
    converged: bool
    iterations: int


def green_value(f: NormalizedPolynomial, z: complex, budget: int = DEFAULT_BUDGET, tol: float = DEFAULT_TOL) -> GreenEvaluation:
    """Green's function at one point; g = 0 (unconverged) if no escape within budget."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    o = _orbit(f, z, budget)
    if not o.escaped[0]:
        return GreenEvaluation(0.0, False, int(o.n_total[0]))
    return GreenEvaluation(float(o.green(f.q)[0]), True, int(o.n_total[0]))


def green_array(f: NormalizedPolynomial, z, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Vectorised Green's function; 0 where the orbit did not escape."""
    return _orbit(f, z, budget).green(f.q)


def _log_phi_derivative(f: NormalizedPolynomial, z: complex, budget: int = DEFAULT_BUDGET):
    o = _orbit(f, z, budget)
    if not o.escaped[0]:
        raise NotInShiftLocus(f"orbit of {z} does not escape")
    return float(o.green(f.q)[0]), complex(o.ratio[0])


# ---------------------------------------------------------------------------
# flowlines


def _bs23_step(F, z, dh, k1):
    k2 = F(z + 0.5 * dh * k1)
    k3 = F(z + 0.75 * dh * k2)
    z3 = z + dh * (2 * k1 + 3 * k2 + 4 * k3) / 9
    k4 = F(z3)
    z2 = z + dh * (7 * k1 / 24 + k2 / 4 + k3 / 3 + k4 / 8)
    return z3, z2, k4


def trace_flowline(
    f: NormalizedPolynomial,
    start: complex,
    direction: str = "descending",
    stop_height: float | None = None,
    tol: float = 1e-10,
    max_steps: int = 20000,
    crit_tol: float = 1e-9,
    until=None,
    budget: int = DEFAULT_BUDGET,
) -> np.ndarray:
    """Follow the gradient of g, parametrised by the Green height itself.

    Along a flowline ``dz/dh = 1/G'(z)`` where ``G' = (log phi)'``.  Steps are
    Bogacki-Shampine 3(2) with an extra acceptance test on the Green height of
    the new point, followed by a one-step Newton correction back onto the
    intended height.  ``until(z, h)`` can end the trace early.

    Returns the polyline as a complex array.  A descending trace that runs
    into a critical point of g raises :class:`CriticalHit` carrying the path.
    """
    if direction not in ("ascending", "descending"):
        raise ValueError("direction must be 'ascending' or 'descending'")
    sign = 1.0 if direction == "ascending" else -1.0
    h, Gp = _log_phi_derivative(f, start, budget)
    if stop_height is None:
        stop_height = h * f.q**2 if sign > 0 else 0.0
    if not (0 < stop_height < h * f.q**2) and until is None:
        raise ValueError("stop_height must lie in (0, q^2 g(start))")
    if sign * (stop_height - h) <= 0:
        return np.array([start])
    g0 = abs(Gp)

    def F(z):
        return 1.0 / _log_phi_derivative(f, z, budget)[1]

    z = complex(start)
    path = [z]
    dh = sign * min(abs(stop_height - h), 1e-3 * max(h, 1e-3))
    k1 = 1.0 / Gp
    for _ in range(max_steps):
        if sign * (h + dh - stop_height) > 0:
            dh = stop_height - h
        try:
            z3, z2, k4 = _bs23_step(F, z, dh, k1)
            g_new, Gp_new = _log_phi_derivative(f, z3, budget)
        except (ZeroDivisionError, FloatingPointError, NotInShiftLocus):
            err = np.inf
        else:
            err_z = abs(z3 - z2) / (tol * (1 + abs(z)))
            err_h = abs(g_new - (h + dh)) / (tol * max(1.0, abs(h)) * 1e3)
            err = max(err_z, err_h)
        if err <= 1.0:
            h_target = h + dh
            # pull back onto the intended level set
            z = z3 + (h_target - g_new) / Gp_new
            g_new, Gp_new = _log_phi_derivative(f, z, budget)
            h = h_target
            path.append(z)
            k1 = 1.0 / Gp_new
            if sign * (h - stop_height) >= -tol or (until is not None and until(z, h)):
                return np.array(path)
            if sign < 0 and abs(Gp_new) < crit_tol * g0:
                raise CriticalHit("descending flowline reached a critical point", np.array(path), z)
            fac = 4.0 if err == 0 else min(4.0, max(0.2, 0.9 * err ** (-1 / 3)))
        else:
            fac = 0.25 if not np.isfinite(err) else max(0.1, 0.9 * err ** (-1 / 3))
        dh *= fac
        if abs(dh) < 1e-15 * max(abs(h), 1e-300):
            if sign < 0:
                raise CriticalHit("step collapsed near a critical point", np.array(path), z)
            raise StepCollapse(f"adaptive step underflow at h={h}")
    raise StepCollapse("flowline did not reach its stop height within max_steps")


def _ascent_angle(f: NormalizedPolynomial, z: complex, tol: float = 1e-8) -> float:
    """External angle of the ascending flowline through z.

    The flowline only has to land within 1/(2 q^N) of the truth, N being the
    number of iterates below the Böttcher radius; the angle is then recovered
    exactly from the orbit as (theta(f^N z) + k) / q^N.
    """
    R2 = f.bottcher_radius
    o = _orbit(f, z)
    if not o.escaped[0]:
        raise NotInShiftLocus(f"orbit of {z} does not escape")
    N = int(o.n_direct[0])
    theta_N = float(o.far_theta(f.q)[0])
    if N == 0:
        return theta_N
    path = trace_flowline(
        f, z, "ascending", stop_height=math.inf, tol=tol, until=lambda w, h: abs(w) > 1.05 * R2
    )
    top = _orbit(f, path[-1])
    if top.n_direct[0] != 0:
        raise StepCollapse("ascent stopped below the Böttcher radius")
    approx = float(top.far_theta(f.q)[0])
    qN = f.q**N
    k = round(approx * qN - theta_N) % qN
    return ((theta_N + k) / qN) % 1.0


@dataclass(frozen=True)
class BottcherCoordinate:
    h: float
    theta: float


def bottcher(f: NormalizedPolynomial, z: complex, budget: int = DEFAULT_BUDGET, tol: float = DEFAULT_TOL) -> BottcherCoordinate:
    """(log|phi(z)|, arg phi(z) in turns) for z above every critical height."""
    ev = green_value(f, z, budget, tol)
    if not ev.converged:
        raise UnreliableCoordinate(f"{z} does not escape within budget")
    if abs(z) <= f.bottcher_radius and ev.value <= f.max_critical_height:
        raise UnreliableCoordinate(f"g({z}) = {ev.value} is not above the critical heights")
    return BottcherCoordinate(ev.value, _ascent_angle(f, z))


def _theta_mod(theta, m: int) -> float:
    """m * theta mod 1, exactly when theta is a Fraction."""
    if isinstance(theta, Fraction):
        return float((m * theta) % 1)
    return (m * theta) % 1.0


def trace_ray(
    f: NormalizedPolynomial,
    thetas: Sequence,
    h_stop: float,
    points_per_halving: int = 16,
    newton_iter: int = 30,
) -> np.ndarray:
    """Points of the external rays at ``thetas`` at Green height ``h_stop``.

    Heights descend geometrically from above the Böttcher radius.  At each
    height Newton solves ``f^n(z) = exp(q^n (h + 2 pi i theta))`` with n so
    large that ``phi`` is the identity to machine precision there.
    """
    q = f.q
    thetas = list(thetas)
    h0 = math.log(f.bottcher_radius) + 2.0
    if h_stop >= h0:
        heights = [h_stop]
    else:
        count = max(1, math.ceil(points_per_halving * math.log2(h0 / h_stop)))
        heights = list(h0 * (h_stop / h0) ** (np.arange(1, count + 1) / count))
    th = np.array([float(t) % 1.0 for t in thetas])
    z = np.exp(h0 + 1j * TWO_PI * th)
    for h in heights:
        n = max(0, math.ceil(math.log(20.0 / h, q))) if h < 20 else 0
        ang = np.array([_theta_mod(t, q**n) for t in thetas])
        W = np.exp(q**n * h + 1j * TWO_PI * ang)
        with np.errstate(all="ignore"):
            for _ in range(newton_iter):
                w = z.copy()
                d = np.ones_like(z)
                for _ in range(n):
                    d = d * f.derivative(w)
                    w = f(w)
                step = (w - W) / d
                z = z - step
                if np.all(np.abs(step) < 1e-14 * (1 + np.abs(z))):
                    break
        if not np.all(np.isfinite(z)):
            raise AngleResolutionFailure(f"ray continuation lost at height {h:g}")
    return z


# ---------------------------------------------------------------------------
# critical points and the shift locus


def critical_points(f: NormalizedPolynomial, tol: float = DEFAULT_TOL) -> list:
    """The q-1 roots of f' with multiplicity; clustered roots are merged to their centroid."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    try:
        roots = np.roots(f.dpoly)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - numpy rarely fails here
        raise RootFindingFailure(str(exc)) from exc
    if len(roots) != f.q - 1 or not np.all(np.isfinite(roots)):
        raise RootFindingFailure("root finder did not return q-1 finite roots")
    radius = tol ** (1.0 / max(1, f.q - 1))
    clusters: list = []
    for r in roots:
        for cl in clusters:
            if abs(cl[0] - r) <= radius * (1 + abs(r)):
                cl.append(r)
                break
        else:
            clusters.append([r])
    out = []
    scale = np.abs(f.dpoly)
    for cl in clusters:
        c = complex(np.mean(cl))
        bound = 1e4 * EPS * float(np.polyval(scale, abs(c))) + tol
        if abs(f.derivative(c)) > bound ** (1 / len(cl)) * (1 + abs(c)):
            raise RootFindingFailure(f"residual too large at {c}")
        out.extend([c] * len(cl))
    return sorted(out, key=lambda c: (round(c.real, 12), round(c.imag, 12)))


@dataclass(frozen=True)
class CriticalRecord:
    point: complex
    escaped: bool
    height: float | None
    bounded: bool = False


@dataclass(frozen=True)
class ShiftLocusVerdict:
    status: str  # inside | outside | undecided
    records: tuple

    @property
    def inside(self) -> bool:
        return self.status == "inside"


def _certify_bounded(f: NormalizedPolynomial, c: complex, budget: int) -> bool:
    """True when the orbit of c is caught by an attracting (or superattracting) cycle."""
    w = complex(c)
    R = f.escape_radius
    hist = []
    for _ in range(budget):
        hist.append(w)
        w = complex(f(w))
        if abs(w) > R:
            return False
        for p in range(1, min(16, len(hist)) + 1):
            if abs(w - hist[-p]) < 1e-13 * (1 + abs(w)):
                # multiplier of the cycle through w
                m = 1.0 + 0j
                x = w
                for _ in range(p):
                    m *= f.derivative(x)
                    x = complex(f(x))
                if abs(m) < 1:
                    return True
    return False


def is_in_shift_locus(f: NormalizedPolynomial, budget: int = DEFAULT_BUDGET) -> ShiftLocusVerdict:
    recs = []
    for c in critical_points(f):
        o = _orbit(f, c, budget)
        if o.escaped[0]:
            recs.append(CriticalRecord(c, True, float(o.green(f.q)[0])))
        else:
            recs.append(CriticalRecord(c, False, None, _certify_bounded(f, c, budget)))
    if all(r.escaped for r in recs):
        status = "inside"
    elif any(r.bounded for r in recs):
        status = "outside"
    else:
        status = "undecided"
    return ShiftLocusVerdict(status, tuple(recs))


# ---------------------------------------------------------------------------
# numeric leaves


@dataclass(frozen=True)
class NumericLeaf:
    height: float
    tips: tuple
    point: complex = 0j
    depth: int = 0
    family: int = 0  # index of the critical leaf this one descends from

    @property
    def multiplicity(self) -> int:
        return len(self.tips) - 1

    def to_dict(self) -> dict:
        return {"height": self.height, "tips": list(self.tips)}


def critical_leaf(f: NormalizedPolynomial, c: complex, tol: float = 1e-6, multiplicity: int | None = None) -> NumericLeaf:
    """Leaf of the critical point c: its height and the angles of its ascending flowlines.

    Every tip is one of the q preimages of the angle of f(c).  The external
    ray at each candidate is followed down to just above g(c); the rays that
    end next to c, rather than next to another preimage of f(c), are the tips.
    """
    if multiplicity is None:
        multiplicity = sum(1 for x in critical_points(f) if abs(x - c) < 1e-6 * (1 + abs(c)))
        multiplicity = max(1, multiplicity)
    ev = green_value(f, c)
    if not ev.converged:
        raise NotInShiftLocus(f"critical point {c} does not escape")
    q = f.q
    fc = complex(f(c))
    base = _ascent_angle(f, fc)
    cands = [(base + j) / q % 1.0 for j in range(q)]
    ends = trace_ray(f, cands, ev.value * (1 + 1e-3))
    others = [p for p in _preimages(f, fc) if abs(p - c) > 1e-4 * (1 + abs(c))]
    pts = np.array([c] + others)
    owner = np.argmin(np.abs(ends[:, None] - pts[None, :]), axis=1)
    tips = sorted(t for t, o in zip(cands, owner) if o == 0)
    if len(tips) != multiplicity + 1:
        raise AngleResolutionFailure(f"{len(tips)} rays land at {c}, expected {multiplicity + 1}")
    gaps = np.diff(tips + [tips[0] + 1])
    if np.any(gaps < tol):
        raise AngleResolutionFailure("two tips agree within tolerance")
    return NumericLeaf(ev.value, tuple(tips), complex(c), 0)


def _preimages(f: NormalizedPolynomial, w: complex) -> np.ndarray:
    p = f.poly.copy()
    p[-1] -= w
    r = np.roots(p)
    for _ in range(3):  # Newton polish, skipped at (near) double roots
        d = f.derivative(r)
        ok = np.abs(d) > 1e-8 * (1 + np.abs(r))
        r[ok] = r[ok] - (f(r[ok]) - w) / d[ok]
    return r


def numeric_elamination(f: NormalizedPolynomial, depth: int = 2, tol: float = 1e-6) -> list:
    """Critical leaves and their preimages down to ``depth``.

    The tips of a depth-k leaf are preimages of its image leaf's tips.  Each
    candidate preimage angle is followed down its external ray to just above
    the sibling height and assigned to the nearest sibling point.
    """
    verdict = is_in_shift_locus(f)
    if not verdict.inside:
        raise NotInShiftLocus(f"critical points do not all escape ({verdict.status})")
    distinct = []
    for c in critical_points(f):
        for d in distinct:
            if abs(d[0] - c) < 1e-6 * (1 + abs(c)):
                d[1] += 1
                break
        else:
            distinct.append([c, 1])
    q = f.q
    levels = [[replace(critical_leaf(f, c, tol, m), family=i) for i, (c, m) in enumerate(distinct)]]
    for k in range(1, depth + 1):
        nxt = []
        for parent in levels[-1]:
            sibs = _preimages(f, parent.point)
            height = parent.height / q
            cands = [(t + j) / q for t in parent.tips for j in range(q)]
            ends = trace_ray(f, cands, height * (1 + 1e-3))
            owner = np.argmin(np.abs(ends[:, None] - sibs[None, :]), axis=1)
            r = len(parent.tips)
            for i, s in enumerate(sibs):
                tips = sorted(t % 1.0 for t, o in zip(cands, owner) if o == i)
                if len(tips) != r:
                    raise AngleResolutionFailure(f"sibling {s} collected {len(tips)} tips, expected {r}")
                nxt.append(NumericLeaf(height, tuple(tips), complex(s), k, parent.family))
        nxt.sort(key=lambda leaf: (leaf.family, leaf.tips))
        levels.append(nxt)
    return [leaf for lv in levels for leaf in lv]


def unicritical_on_ray(q: int, theta, height: float = 1.5, tol: float = 1e-14) -> NormalizedPolynomial:
    """``z**q + a`` whose critical value has Böttcher coordinate ``(height, theta)``.

    For this family ``a -> phi_a(a)`` is conformal off the connectedness
    locus, so Newton on ``log phi_a(a)`` converges from ``a ~ e^(h + 2 pi i theta)``.
    Needs ``height > log 2`` so that the critical value sits past the
    Böttcher radius.
    """
    if height <= math.log(2):
        raise ValueError("height must exceed log 2")
    target = height + 1j * TWO_PI * _theta_mod(theta, 1)

    def F(a: complex) -> complex:
        f = NormalizedPolynomial(q, (0,) * (q - 2) + (a,))
        o = _orbit(f, a)
        v = complex(o.L[0]) / float(q) ** int(o.n_total[0])
        # match the branch of the imaginary part to the target
        k = round((target.imag - v.imag) / TWO_PI)
        return v + 1j * TWO_PI * k - target

    a = complex(np.exp(target))
    for _ in range(60):
        r = F(a)
        if abs(r) < tol:
            break
        da = 1e-7 * (1 + abs(a))
        J = (F(a + da) - r) / da
        a -= r / J
    else:
        raise RootFindingFailure("parameter Newton did not converge")
    return NormalizedPolynomial(q, (0,) * (q - 2) + (a,))

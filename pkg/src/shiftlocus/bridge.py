"""Numeric-to-exact bridge: snap float angles to rationals and compare a
polynomial's numeric elamination with the exact pullback of its snapped
critical set."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .dynamics import NormalizedPolynomial, is_in_shift_locus, numeric_elamination
from .elamination import CriticalSet, Leaf, build_dynamical
from .errors import AngleResolutionFailure, NonGeneric, SnapFailure

__all__ = ["SnapPolicy", "DEFAULT_POLICY", "snap_angle", "LeafMatch", "ConsistencyReport", "consistency_check"]


@dataclass(frozen=True)
class SnapPolicy:
    max_denominator: int = 3**8 * 4
    tol: float = 1e-8

    def __post_init__(self):
        if self.max_denominator < 1 or self.tol <= 0:
            raise ValueError("max_denominator must be >= 1 and tol > 0")

    @property
    def unambiguous(self) -> bool:
        """Whether tol alone rules out two rationals within reach."""
        return self.tol < 1 / (2 * self.max_denominator**2)


DEFAULT_POLICY = SnapPolicy()


def _farey_neighbours(r: Fraction, D: int) -> tuple:
    """Left and right neighbours of r among fractions with denominator <= D."""
    a, b = r.numerator, r.denominator
    if b == 1:
        return Fraction(a * D - 1, D), Fraction(a * D + 1, D)
    inv = pow(a, -1, b)
    # right neighbour c/d: b*c - a*d = 1, i.e. d = -a^-1 mod b
    d = (-inv) % b
    d += (D - d) // b * b
    right = Fraction((1 + a * d) // b, d)
    d = inv % b
    d += (D - d) // b * b
    left = Fraction((a * d - 1) // b, d)
    return left, right


def _circ(x: float, y) -> float:
    return abs((x - float(y) + 0.5) % 1.0 - 0.5)


def snap_angle(x: float, policy: SnapPolicy = DEFAULT_POLICY) -> Fraction:
    """Nearest rational with denominator <= policy.max_denominator, or SnapFailure.

    Snapping fails when the best approximation is farther than ``tol`` or
    when a Farey neighbour is also within ``tol``.
    """
    x = float(x) % 1.0
    r = Fraction(x).limit_denominator(policy.max_denominator)
    if _circ(x, r) > policy.tol:
        raise SnapFailure(f"{x!r} has no rational with denominator <= {policy.max_denominator} within {policy.tol}")
    for nb in _farey_neighbours(r, policy.max_denominator):
        # with tiny denominators a neighbour can wrap onto r itself
        if (nb - r) % 1 and _circ(x, nb) <= policy.tol:
            raise SnapFailure(f"{x!r} is within tolerance of both {r} and {nb}")
    return r % 1


@dataclass(frozen=True)
class LeafMatch:
    depth: int
    family: int
    tips: tuple  # exact, as snapped
    angle_error: float
    height_ratio_error: float


@dataclass
class ConsistencyReport:
    q: int
    depth: int
    precondition: bool
    critical_set: CriticalSet | None = None
    generic: bool = True
    matches: list = field(default_factory=list)
    unmatched_numeric: list = field(default_factory=list)
    unmatched_exact: list = field(default_factory=list)
    angle_tol: float = 1e-6
    height_tol: float = 1e-9
    note: str = ""

    @property
    def max_angle_error(self) -> float:
        return max((m.angle_error for m in self.matches), default=0.0)

    @property
    def max_height_error(self) -> float:
        return max((m.height_ratio_error for m in self.matches), default=0.0)

    @property
    def consistent(self) -> bool:
        return (
            self.precondition
            and self.generic
            and not self.unmatched_numeric
            and not self.unmatched_exact
            and self.max_angle_error < self.angle_tol
            and self.max_height_error < self.height_tol
        )

    @property
    def verdict(self) -> str:
        if not self.precondition:
            return "precondition-failed"
        if not self.generic:
            return "non-generic"
        return "consistent" if self.consistent else "inconsistent"

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "depth": self.depth,
            "verdict": self.verdict,
            "note": self.note,
            "max_angle_error": self.max_angle_error,
            "max_height_ratio_error": self.max_height_error,
            "critical_set": None
            if self.critical_set is None
            else [[str(t) for t in leaf.tips] for leaf in self.critical_set.leaves],
            "matches": [
                {
                    "depth": m.depth,
                    "family": m.family,
                    "tips": [str(t) for t in m.tips],
                    "angle_error": m.angle_error,
                    "height_ratio_error": m.height_ratio_error,
                }
                for m in self.matches
            ],
            "unmatched_numeric": self.unmatched_numeric,
            "unmatched_exact": self.unmatched_exact,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def consistency_check(
    f: NormalizedPolynomial, depth: int = 3, policy: SnapPolicy = DEFAULT_POLICY, tol: float = 1e-6
) -> ConsistencyReport:
    """Snap the numeric elamination of f and compare it with the exact pullback.

    Critical heights are replaced by rationals only to fix their order; the
    comparison itself uses height ratios, which are exactly q^-k within a
    family.
    """
    q = f.q
    verdict = is_in_shift_locus(f)
    if not verdict.inside:
        return ConsistencyReport(q, depth, False, note=f"not in the shift locus ({verdict.status})")
    crit = numeric_elamination(f, 0)
    top = max(leaf.height for leaf in crit)
    exact_crit = []
    for leaf in crit:
        tips = tuple(snap_angle(t, policy) for t in leaf.tips)
        h = Fraction(leaf.height / top).limit_denominator(10**6)
        exact_crit.append(Leaf(tips, h))
    C = CriticalSet(q, tuple(exact_crit))
    try:
        lam = build_dynamical(C, depth=depth)
    except NonGeneric as exc:
        return ConsistencyReport(q, depth, True, C, generic=False, note=f"exact pullback: {exc}")
    try:
        numeric = numeric_elamination(f, depth)
    except AngleResolutionFailure as exc:
        return ConsistencyReport(q, depth, True, C, generic=False, note=f"numeric pullback: {exc}")
    # CriticalSet orders its leaves by height; map numeric families onto it
    index = {leaf.tips: j for j, leaf in enumerate(C.leaves)}
    fam_map = {leaf.family: index[e.tips] for leaf, e in zip(crit, exact_crit)}

    exact = {}
    for leaf, fam, k, _, _ in lam.records():
        exact[(fam, k, leaf.tips)] = leaf
    report = ConsistencyReport(q, depth, True, C, angle_tol=tol)
    crit_h = {fam_map[leaf.family]: leaf.height for leaf in crit}
    seen = set()
    for leaf in numeric:
        fam = fam_map[leaf.family]
        try:
            tips = tuple(sorted(snap_angle(t, policy) for t in leaf.tips))
        except SnapFailure as exc:
            report.unmatched_numeric.append({"depth": leaf.depth, "tips": list(leaf.tips), "error": str(exc)})
            continue
        key = (fam, leaf.depth, tips)
        if key not in exact:
            report.unmatched_numeric.append({"depth": leaf.depth, "tips": [str(t) for t in tips]})
            continue
        seen.add(key)
        err = max(_circ(x, t) for x, t in zip(sorted(leaf.tips), tips))
        ratio = leaf.height / crit_h[fam]
        report.matches.append(LeafMatch(leaf.depth, fam, tips, err, abs(ratio - q ** (-leaf.depth))))
    for key in exact:
        if key not in seen:
            fam, k, tips = key
            report.unmatched_exact.append({"depth": k, "family": fam, "tips": [str(t) for t in tips]})
    return report

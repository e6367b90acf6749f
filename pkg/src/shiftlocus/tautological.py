"""Finite tautological elaminations of a degree-3 critical leaf.

Fix a simple critical leaf ``C`` of height 1.  A second critical leaf ``C'``
lower down is recorded by the angle ``alpha`` of its critical value; ``C'``
is then the pair of cube roots of ``alpha`` lying on the long arc of ``C``.
With both critical leaves present, the precritical leaves of ``C`` are fixed
by the rule that siblings share a face of ``C u C'``.

``Lambda_n`` collects, for every depth ``k <= n``, the cubes of depth-k
precritical leaves ``P`` that ``C'`` can run into while staying below
``P``.  The cube of ``P`` has the tips of ``f(P)`` and the height of ``P``.
Which ``P`` occur depends on where ``alpha`` sits, so level ``k`` is found by
sampling ``alpha`` on every elementary arc of the circle cut at the tips of
``Lambda_{k-1}`` and at the candidate new tips; a leaf is kept when one of
its tips is an endpoint of the arc it was sampled on.

Everything runs on integer numerators over one denominator, and the partner
of a tip is found by following its forward orbit back from ``C``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .elamination import Leaf, quotient_faces
from .errors import DegenerateCube, InvariantBreach, NonGeneric, NonPowerOfTwoLength

__all__ = [
    "DEFAULT_C",
    "TautLamination",
    "ComponentRecord",
    "CountTable",
    "SeriesCoefficients",
    "cube_leaf",
    "taut_lamination",
    "component_spectrum",
    "count_table",
    "n30_recursion",
    "beta_series",
    "PUBLISHED_N3",
]

DEFAULT_C = Leaf((Fraction(1, 6), Fraction(5, 6)), Fraction(1))
MAX_N = 14

# Published component counts N3(n, m), rows n = 0..12.
PUBLISHED_N3 = (
    (1,),
    (1, 1),
    (3, 1, 1),
    (7, 6, 0, 1),
    (21, 16, 3, 0, 1),
    (57, 51, 13, 0, 0, 1),
    (171, 149, 39, 5, 0, 0, 1),
    (499, 454, 117, 23, 0, 0, 0, 1),
    (1497, 1348, 360, 66, 9, 0, 0, 0, 1),
    (4449, 4083, 1061, 207, 41, 0, 0, 0, 0, 1),
    (13347, 12191, 3252, 591, 126, 17, 0, 0, 0, 0, 1),
    (39927, 36658, 9738, 1799, 370, 81, 0, 0, 0, 0, 0, 1),
    (119781, 109898, 29292, 5351, 1125, 240, 33, 0, 0, 0, 0, 0, 1),
)


def cube_leaf(P: Leaf) -> Leaf:
    """Tips tripled mod 1, height kept."""
    if len(P.tips) != 2:
        raise ValueError("cube_leaf expects a two-tip leaf")
    tips = {(3 * t) % 1 for t in P.tips}
    if len(tips) < 2:
        raise DegenerateCube(f"{P} is critical; its cube is a single point")
    return Leaf(tuple(tips), P.height)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TautLamination:
    """``Lambda_n`` on integer numerators.

    ``tips`` has shape (N, 2) over ``denominator``; ``level[i] = k`` means leaf
    i is the cube of a depth-k precritical leaf and has height ``3**-k``.
    """

    C: Leaf
    n: int
    denominator: int
    tips: np.ndarray
    level: np.ndarray

    def __len__(self):
        return len(self.tips)

    def counts(self) -> list:
        return np.bincount(self.level, minlength=self.n + 1)[1:].tolist()

    def leaves(self) -> list:
        D = self.denominator
        return [
            Leaf((Fraction(int(a), D), Fraction(int(b), D)), Fraction(1, 3 ** int(k)))
            for (a, b), k in zip(self.tips, self.level)
        ]


def _check_base(C: Leaf) -> Leaf:
    if len(C.tips) != 2:
        raise ValueError("the base leaf must have two tips")
    gap = (C.tips[1] - C.tips[0]) % 1
    if gap not in (Fraction(1, 3), Fraction(2, 3)):
        raise ValueError(f"{C} is not a degree-3 critical leaf")
    if C.height != 1:
        raise ValueError("the base leaf is normalised to height 1")
    return C


def taut_lamination(C: Leaf = DEFAULT_C, n: int = 3) -> TautLamination:
    """Build ``Lambda_n`` for the critical leaf ``C``."""
    C = _check_base(C)
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > MAX_N:
        raise ValueError(f"n > {MAX_N} is beyond the resource guard")
    c0, c1 = C.tips
    D0 = math.lcm(c0.denominator, c1.denominator)
    # factor 2 * 3 keeps arc midpoints and their cube roots integral
    D = 2 * D0 * 3 ** (n + 1)
    if D.bit_length() > 62:
        raise OverflowError("denominator exceeds int64")
    ctips = np.array([int(c0 * D), int(c1 * D)], dtype=np.int64)
    # long arc of C runs counter-clockwise from b0 for 2D/3
    b0 = ctips[0] if (c1 - c0) % 1 == Fraction(2, 3) else ctips[1]
    value = int((3 * c0) % 1 * D)

    tips = np.zeros((0, 2), dtype=np.int64)
    level = np.zeros(0, dtype=np.int64)
    for k in range(1, n + 1):
        new = _new_level(k, D, ctips, b0, value, tips)
        if len(new) != 3 ** (k - 1):
            raise InvariantBreach(f"level {k}: {len(new)} leaves, expected {3 ** (k - 1)}")
        tips = np.concatenate([tips, new])
        level = np.concatenate([level, np.full(len(new), k, dtype=np.int64)])
    return TautLamination(C, n, D, tips, level)


def _depth_points(j: int, D: int, ctips: np.ndarray) -> np.ndarray:
    # angles x with 3**j x on a tip of C
    m = np.arange(3**j, dtype=np.int64)
    pts = [(t + m * D) // 3**j for t in ctips]
    return np.concatenate(pts)


def _new_level(k, D, ctips, b0, value, tips):
    cand = _depth_points(k - 1, D, ctips)
    grid = np.unique(np.concatenate([tips.ravel(), cand, [value]]))
    if np.any(np.isin(cand, tips.ravel())):
        raise NonGeneric("a candidate tip coincides with an existing leaf")
    left = grid
    right = np.roll(grid, -1)
    gap = (right - left) % D
    alpha = (left + gap // 2) % D
    # C' tips: cube roots of alpha on the long arc of C, in long-arc coordinates
    roots = ((alpha[:, None] + D * np.arange(3)[None, :]) // 3 - b0) % D
    if np.any(roots % (D // 3) == 0):
        raise NonGeneric("second critical leaf touches the first")
    roots.sort(axis=1)
    p1, p2 = roots[:, 0], roots[:, 1]
    if np.any(p2 >= 2 * D // 3):
        raise InvariantBreach("expected two cube roots on the long arc")

    is_cand = np.isin(grid, cand)
    out = []
    for ends, other in ((left, right), (right, left)):
        mask = is_cand[np.searchsorted(grid, ends)]
        if not np.any(mask):
            continue
        a = ends[mask]
        partner = _partner(a, k - 1, D, ctips, b0, p1[mask], p2[mask])
        out.append(np.sort(np.stack([a, partner], axis=1), axis=1))
    if not out:
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(np.concatenate(out), axis=0)


def _label(x, b0, D, p1, p2):
    y = (x - b0) % D
    on_long = (y > 0) & (y < 2 * D // 3)
    inner = (y > p1) & (y < p2)
    return on_long.astype(np.int64) + inner


def _partner(a, depth, D, ctips, b0, p1, p2):
    """Other tip of the depth-``depth`` leaf through ``a`` in each configuration."""
    orbit = [a % D]
    for _ in range(depth):
        orbit.append((3 * orbit[-1]) % D)
    top = orbit[-1]
    if not np.all(np.isin(top, ctips)):
        raise InvariantBreach("orbit does not land on the critical leaf")
    y = np.where(top == ctips[0], ctips[1], ctips[0])
    for x in reversed(orbit[:-1]):
        want = _label(x, b0, D, p1, p2)
        cands = (y[:, None] + D * np.arange(3)[None, :]) // 3
        lab = _label(cands, b0, D, p1[:, None], p2[:, None])
        hit = lab == want[:, None]
        if not np.all(hit.sum(axis=1) == 1):
            raise InvariantBreach("face rule did not single out a partner")
        y = cands[np.arange(len(y)), np.argmax(hit, axis=1)]
    return y


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComponentRecord:
    """One component of the circle quotient of ``Lambda_n``."""

    arcs: tuple  # ((start, end), ...) as Fractions, in cycle order
    length: Fraction
    ell: int
    m: int


def component_spectrum(C: Leaf = DEFAULT_C, n: int = 3, lam: TautLamination | None = None) -> list:
    """Components of the circle cut and reglued along ``Lambda_n``."""
    lam = taut_lamination(C, n) if lam is None else lam
    n, D = lam.n, lam.denominator
    N = len(lam.tips)
    pos = lam.tips.ravel()
    prev = np.arange(2 * N).reshape(N, 2)[:, ::-1].ravel()
    spos, face, lengths = quotient_faces(pos, prev, D)
    arcs = {}
    if len(spos):
        ends = np.roll(spos, -1)
        for s, e, f in zip(spos.tolist(), ends.tolist(), face.tolist()):
            arcs.setdefault(f, []).append((Fraction(s, D), Fraction(e, D)))
    out = []
    for label, L in sorted(lengths.items()):
        ell = Fraction(L * 3**n, D)
        if ell.denominator != 1 or ell.numerator & (ell.numerator - 1):
            raise NonPowerOfTwoLength(f"component of length {Fraction(L, D)} has ell = {ell}")
        e = ell.numerator
        out.append(ComponentRecord(tuple(arcs.get(label, [])), Fraction(L, D), e, e.bit_length() - 1))
    return out


def _spectrum_counts(lam: TautLamination) -> list:
    # fast path of component_spectrum: only the m histogram
    N, D, n = len(lam.tips), lam.denominator, lam.n
    prev = np.arange(2 * N).reshape(N, 2)[:, ::-1].ravel()
    _, _, lengths = quotient_faces(lam.tips.ravel(), prev, D)
    row = [0] * (n + 1)
    for L in lengths.values():
        ell, rem = divmod(L * 3**n, D)
        if rem or ell & (ell - 1):
            raise NonPowerOfTwoLength(f"ell = {Fraction(L * 3**n, D)}")
        m = ell.bit_length() - 1
        if m > n:
            raise InvariantBreach("component longer than the circle")
        row[m] += 1
    return row


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CountTable:
    """Triangular table ``rows[n][m] = N3(n, m)``."""

    rows: tuple

    @property
    def n_max(self) -> int:
        return len(self.rows) - 1

    def __getitem__(self, nm):
        n, m = nm
        row = self.rows[n]
        return row[m] if m < len(row) else 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n"] + [f"2^{m}" for m in range(self.n_max + 1)])
        for n, row in enumerate(self.rows):
            w.writerow([n] + list(row))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CountTable":
        rows = list(csv.reader(io.StringIO(text)))[1:]
        return cls(tuple(tuple(int(x) for x in r[1:] if x != "") for r in rows if r))

    def to_json(self) -> str:
        return json.dumps({"n_max": self.n_max, "rows": [list(r) for r in self.rows]}, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "CountTable":
        return cls(tuple(tuple(r) for r in json.loads(text)["rows"]))


def count_table(n_max: int = 12, C: Leaf = DEFAULT_C) -> CountTable:
    """Enumerate ``N3(n, m)`` for ``0 <= n <= n_max``.

    One build of ``Lambda_{n_max}`` serves every row, since ``Lambda_n`` is
    the part of it at levels ``<= n`` (computed over a finer denominator).
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if n_max > MAX_N:
        raise ValueError(f"n_max > {MAX_N} is beyond the resource guard")
    lam = taut_lamination(C, n_max)
    rows = []
    for n in range(n_max + 1):
        keep = lam.level <= n
        sub = TautLamination(lam.C, n, lam.denominator, lam.tips[keep], lam.level[keep])
        rows.append(tuple(_spectrum_counts(sub)))
    return CountTable(tuple(rows))


def n30_recursion(n_max: int) -> list:
    """``N3(n, 0)`` for ``n <= n_max`` from the two-term recursion."""
    N = [1, 1]
    for n in range(2, n_max + 1):
        if n % 2 == 0:
            N.append(3 * N[n - 1])
        else:
            N.append(3 * N[n - 1] - 2 * N[n // 2])
    return N[: n_max + 1]


@dataclass(frozen=True)
class SeriesCoefficients:
    h: tuple
    beta: tuple
    reduced: tuple  # coefficients of (beta - 1) / (3t)


def _h(n: int) -> int:
    if n == 0:
        return 1
    k = (n & -n).bit_length() - 1
    s = bin(n).count("1")
    return (-3) ** s * (1 - (-2) ** k)


def beta_series(order: int) -> SeriesCoefficients:
    """Exact coefficients of beta(t) through ``t**order``.

    ``reduced`` holds ``order`` coefficients of ``(beta(t) - 1) / (3t)``.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    L = order + 1
    h = [_h(n) for n in range(L)]
    series = list(h)
    j = 0
    while 2**j < L:
        step = 2**j
        # multiply by 1/(1 - 3 t^step): running recurrence
        for i in range(step, L):
            series[i] += 3 * series[i - step]
        j += 1
    if series[0] != 1:
        raise InvariantBreach("beta(0) must be 1")
    reduced = []
    for c in series[1:]:
        r = Fraction(c, 3)
        reduced.append(int(r) if r.denominator == 1 else r)
    return SeriesCoefficients(tuple(h), tuple(series), tuple(reduced))

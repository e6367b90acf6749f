"""Exact combinatorics of elaminations on the circle R/Z.

Angles are :class:`fractions.Fraction` values in ``[0, 1)`` measured in turns.
Heights are positive fractions.  A critical set is pulled back under angle
q-tupling to a depth-truncated dynamical elamination by :func:`build_dynamical`.

The hot path of the pullback works on integer numerators over one common
denominator; see :func:`quotient_faces` for the face-label trick that makes
the link test against a large context cheap.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    HeightCollision,
    InvariantBreach,
    MultipleValidMatchings,
    NonGeneric,
    NoValidMatching,
    SharedAngle,
)

__all__ = [
    "Leaf",
    "Elamination",
    "CriticalSet",
    "DynamicalElamination",
    "ValidationReport",
    "as_angle",
    "angle_image",
    "angle_preimages",
    "unlinked",
    "is_critical_tips",
    "leaf_image",
    "pullback_leaf",
    "build_dynamical",
    "stretch",
    "validate_elamination",
    "validate_critical_set",
    "is_generic_height",
    "log_band",
    "quotient_faces",
    "noncrossing_strata",
]

# Beyond this many candidate matchings a multi-tip pullback only tries the
# cyclically-consecutive groupings.
MAX_EXHAUSTIVE_TEMPLATES = 20000


def as_angle(x) -> Fraction:
    """Coerce ``x`` (int, str, Fraction) to a Fraction reduced mod 1."""
    if isinstance(x, float):
        raise TypeError("angles must be exact; snap floats with bridge.snap_angle")
    return Fraction(x) % 1


def _as_height(h) -> Fraction:
    if isinstance(h, float):
        raise TypeError("heights must be exact rationals")
    h = Fraction(h)
    if h <= 0:
        raise ValueError(f"height must be positive, got {h}")
    return h


@dataclass(frozen=True)
class Leaf:
    """A leaf: two or more distinct tip angles sharing one height.

    Tips are stored sorted ascending in ``[0, 1)``, which is a circular order.
    """

    tips: tuple
    height: Fraction

    def __post_init__(self):
        tips = tuple(sorted(as_angle(t) for t in self.tips))
        if len(tips) < 2:
            raise ValueError("a leaf needs at least two tips")
        if len(set(tips)) != len(tips):
            raise ValueError(f"leaf tips must be distinct: {tips}")
        object.__setattr__(self, "tips", tips)
        object.__setattr__(self, "height", _as_height(self.height))

    @property
    def multiplicity(self) -> int:
        return len(self.tips) - 1

    def with_height(self, h) -> "Leaf":
        return Leaf(self.tips, h)

    def __repr__(self):
        tips = ",".join(str(t) for t in self.tips)
        return f"Leaf({{{tips}}}, h={self.height})"


def angle_image(theta, q: int) -> Fraction:
    return (q * as_angle(theta)) % 1


def angle_preimages(theta, q: int) -> list:
    """The q angles mapping to ``theta`` under t -> q t, sorted ascending."""
    if q < 2:
        raise ValueError("q must be at least 2")
    theta = as_angle(theta)
    return [(theta + j) / q for j in range(q)]


def _arc_index(tips: Sequence, x) -> int:
    """Index of the complementary arc of sorted ``tips`` that contains ``x``.

    Arc k is (tips[k-1], tips[k]); arc 0 wraps through 0.
    """
    k = 0
    for t in tips:
        if x > t:
            k += 1
    return k % len(tips)


def unlinked(A: Iterable, B: Iterable) -> bool:
    """True iff the angle set B lies in a single complementary arc of A.

    Raises SharedAngle when A and B have a point in common.
    """
    A = sorted(as_angle(a) for a in A)
    B = [as_angle(b) for b in B]
    shared = set(A).intersection(B)
    if shared:
        raise SharedAngle(f"angle sets share {sorted(shared)}")
    return len({_arc_index(A, b) for b in B}) <= 1


def is_critical_tips(tips: Sequence, q: int) -> bool:
    t0 = as_angle(tips[0])
    return all(((as_angle(t) - t0) * q).denominator == 1 for t in tips)


def leaf_image(leaf: Leaf, q: int):
    """Image leaf under angle q-tupling, or None when the leaf is critical."""
    if is_critical_tips(leaf.tips, q):
        return None
    tips = sorted({(q * t) % 1 for t in leaf.tips})
    return Leaf(tuple(tips), leaf.height * q)


def is_generic_height(h, q: int) -> bool:
    """False iff log_q(h) lies in 1/2 + Z; decided exactly."""
    s = Fraction(h) ** 2
    if s.denominator == 1:
        n = s.numerator
    elif s.numerator == 1:
        n = s.denominator
    else:
        return True
    e = 0
    while n % q == 0:
        n //= q
        e += 1
    return not (n == 1 and e % 2 == 1)


def log_band(h, q: int) -> int:
    """The integer n with log_q(h) in (n - 1/2, n + 1/2).

    Raises NonGeneric when h sits on a band boundary.
    """
    h = Fraction(h)
    if not is_generic_height(h, q):
        raise NonGeneric(f"log_{q}({h}) is a half-integer")
    approx = (math.log(h.numerator) - math.log(h.denominator)) / math.log(q)
    n = round(approx)
    s = h * h
    # exact correction: need q^(2n-1) < h^2 < q^(2n+1)
    for _ in range(4):
        if s <= Fraction(q) ** (2 * n - 1):
            n -= 1
        elif s >= Fraction(q) ** (2 * n + 1):
            n += 1
        else:
            return n
    raise InvariantBreach(f"could not place height {h} in a band")


@dataclass(frozen=True)
class Elamination:
    """A finite collection of leaves.  Validity is checked on demand."""

    leaves: tuple = ()

    def __post_init__(self):
        leaves = tuple(sorted(self.leaves, key=_leaf_key))
        object.__setattr__(self, "leaves", leaves)

    def __len__(self):
        return len(self.leaves)

    def __iter__(self):
        return iter(self.leaves)


def _leaf_key(leaf: Leaf):
    return (-leaf.height, leaf.tips)


@dataclass(frozen=True)
class CriticalSet:
    """Leaves whose tips pairwise differ by multiples of 1/q."""

    q: int
    leaves: tuple

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("q must be at least 2")
        object.__setattr__(self, "leaves", tuple(sorted(self.leaves, key=_leaf_key)))

    @property
    def multiplicity(self) -> int:
        return sum(leaf.multiplicity for leaf in self.leaves)

    @property
    def maximal(self) -> bool:
        return self.multiplicity == self.q - 1

    def as_elamination(self) -> Elamination:
        return Elamination(self.leaves)


@dataclass
class ValidationReport:
    crossings: list = field(default_factory=list)
    shared_angles: list = field(default_factory=list)
    spacing_failures: list = field(default_factory=list)
    nongeneric_heights: list = field(default_factory=list)
    maximal: bool | None = None

    @property
    def valid(self) -> bool:
        return not (self.crossings or self.shared_angles or self.spacing_failures)

    @property
    def generic(self) -> bool:
        return not self.nongeneric_heights

    def __bool__(self):
        return self.valid


def _noncrossing_partition(labels: Sequence[int]) -> bool:
    """Stack scan: is this circular label sequence a non-crossing partition?"""
    remaining = {}
    for lab in labels:
        remaining[lab] = remaining.get(lab, 0) + 1
    stack = []
    for lab in labels:
        if stack and stack[-1] == lab:
            pass
        elif lab in stack:
            return False
        else:
            stack.append(lab)
        remaining[lab] -= 1
        if remaining[lab] == 0:
            stack.pop()
    return True


def validate_elamination(lam, q: int | None = None, brute_force_limit: int = 4000) -> ValidationReport:
    """Report crossings, shared tips and (when q is given) nongeneric heights."""
    leaves = list(lam)
    report = ValidationReport()
    owner = {}
    for i, leaf in enumerate(leaves):
        for t in leaf.tips:
            if t in owner:
                report.shared_angles.append((owner[t], i, t))
            else:
                owner[t] = i
    if q is not None:
        report.nongeneric_heights = [
            i for i, leaf in enumerate(leaves) if not is_generic_height(leaf.height, q)
        ]
    if report.shared_angles:
        return report
    labels = [owner[t] for t in sorted(owner)]
    if not _noncrossing_partition(labels):
        if len(leaves) <= brute_force_limit:
            for i, j in itertools.combinations(range(len(leaves)), 2):
                if not unlinked(leaves[i].tips, leaves[j].tips):
                    report.crossings.append((i, j))
        else:
            report.crossings.append(("unlocated", None))
    return report


def validate_critical_set(C: CriticalSet) -> ValidationReport:
    report = validate_elamination(C.leaves, C.q)
    for i, leaf in enumerate(C.leaves):
        if not is_critical_tips(leaf.tips, C.q):
            report.spacing_failures.append(i)
    report.maximal = C.multiplicity == C.q - 1
    return report


def stretch(lam, t):
    """Multiply every height by the positive rational t."""
    t = _as_height(t)
    if isinstance(lam, CriticalSet):
        return CriticalSet(lam.q, tuple(leaf.with_height(leaf.height * t) for leaf in lam.leaves))
    if isinstance(lam, DynamicalElamination):
        return lam.stretched(t)
    return Elamination(tuple(leaf.with_height(leaf.height * t) for leaf in lam))


# ---------------------------------------------------------------------------
# pullback of a single leaf, exhaustive and exact (the reference route)


def _sibling_relations(groups: Sequence[Sequence]) -> tuple:
    """(pairwise unlinked, pairwise non-nested) for a candidate set of siblings."""
    linked_free = True
    nested_free = True
    for i, S in enumerate(groups):
        S = sorted(S)
        others = [x for j, G in enumerate(groups) if j != i for x in G]
        arcs = {_arc_index(S, x) for x in others}
        if len(arcs) > 1:
            nested_free = False
        for j, G in enumerate(groups):
            if j > i and len({_arc_index(S, x) for x in G}) > 1:
                linked_free = False
    return linked_free, nested_free


def _select(ac_valid: Sequence[bool], nonnested: Sequence[bool]) -> int:
    """Apply the sibling selection rule; returns the winning candidate index.

    The candidates satisfying (a) unlinked siblings and (c) unlinked with the
    context must be unique, or, where several survive, exactly one of them must
    have pairwise non-nested siblings.
    """
    idx = [i for i, ok in enumerate(ac_valid) if ok]
    if len(idx) == 1:
        return idx[0]
    if not idx:
        raise NoValidMatching("no sibling matching is unlinked with the context")
    flat = [i for i in idx if nonnested[i]]
    if len(flat) == 1:
        return flat[0]
    raise MultipleValidMatchings(f"{len(idx)} valid matchings, {len(flat)} non-nested")


def pullback_leaf(context: Iterable[Leaf], Q: Leaf, q: int, return_counts: bool = False):
    """The q sibling preimages of leaf Q, found by exhaustive enumeration.

    ``context`` holds leaves that must not be linked by the siblings; the
    ones consulted are those strictly higher than ``Q.height / q`` together
    with every critical leaf, whatever its height.  With
    ``return_counts`` the result is ``(siblings, n_ac, n_rule)`` where
    ``n_ac`` counts matchings passing the unlinking tests and ``n_rule``
    counts matchings accepted by the full selection rule (always 1 on
    success).
    """
    h = Q.height / q
    ctx = [leaf for leaf in context if leaf.height > h or is_critical_tips(leaf.tips, q)]
    pre = [angle_preimages(t, q) for t in Q.tips]
    r = len(Q.tips)
    ctx_tips = {t for leaf in ctx for t in leaf.tips}
    for row in pre:
        for x in row:
            if x in ctx_tips:
                raise SharedAngle(f"preimage angle {x} is already a tip")
    candidates = []
    for perms in _templates(q, r):
        groups = [tuple(pre[j][perms[j][i]] for j in range(r)) for i in range(q)]
        candidates.append(groups)
    ac, flat = [], []
    for groups in candidates:
        a, b = _sibling_relations(groups)
        c = all(unlinked(leaf.tips, G) for leaf in ctx for G in groups)
        ac.append(a and c)
        flat.append(b)
    pick = _select(ac, flat)
    siblings = [Leaf(G, h) for G in candidates[pick]]
    siblings.sort(key=lambda leaf: leaf.tips)
    if return_counts:
        n_ac = sum(ac)
        n_rule = 1 if n_ac == 1 else sum(1 for i, ok in enumerate(ac) if ok and flat[i])
        return siblings, n_ac, n_rule
    return siblings


@lru_cache(maxsize=None)
def _templates(q: int, r: int) -> tuple:
    """Candidate groupings for pulling back an r-tip leaf.

    A template is a tuple of r permutations; sibling i takes preimage
    ``perm[j][i]`` of tip j.  Tip 0 always uses the identity.
    """
    ident = tuple(range(q))
    count = math.factorial(q) ** (r - 1)
    if count <= MAX_EXHAUSTIVE_TEMPLATES:
        perms = list(itertools.permutations(range(q)))
        return tuple((ident,) + rest for rest in itertools.product(perms, repeat=r - 1))
    out = []
    for s in range(r):
        shifted = tuple((i - 1) % q for i in range(q))
        out.append(tuple(ident if j < s else shifted for j in range(r)))
    return tuple(out)


@lru_cache(maxsize=None)
def _template_flags(q: int, r: int) -> tuple:
    """Combinatorial (a)/(b) flags per template.

    Preimages of tip j are ``(t_j + i)/q``, so ranked around the circle the
    preimage (i, j) sits at position ``i * r + j`` whatever the actual angles
    are; sibling relations therefore depend on the template alone.
    """
    a_flags, b_flags = [], []
    for perms in _templates(q, r):
        groups = [tuple(perms[j][i] * r + j for j in range(r)) for i in range(q)]
        a, b = _sibling_relations(groups)
        a_flags.append(a)
        b_flags.append(b)
    return np.array(a_flags, dtype=bool), np.array(b_flags, dtype=bool)


# ---------------------------------------------------------------------------
# circle quotient on integer positions


def quotient_faces(positions: np.ndarray, prev_tip: np.ndarray, period: int):
    """Cut the circle Z/period at ``positions`` and reglue along leaves.

    Parameters
    ----------
    positions : int array, shape (M,)
        Tip positions, all distinct, in ``[0, period)``.
    prev_tip : int array, shape (M,)
        For each tip, the index of the previous tip of the same leaf in
        circular order (for a two-tip leaf, simply the other tip).
    period : int
        Positions are numerators over this denominator.

    Returns
    -------
    spos : sorted positions
    face : component label of the arc starting at ``spos[i]``
    lengths : dict label -> total integer length of the component

    The arc arriving at tip t continues with the arc leaving ``prev(t)``;
    components are the cycles of that successor permutation.  For a
    non-crossing family they are the faces of the complement of the veins.
    """
    M = len(positions)
    if M == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), {0: period}
    order = np.argsort(positions, kind="stable")
    spos = positions[order]
    if np.any(spos[1:] == spos[:-1]):
        raise SharedAngle("two tips share an angle")
    rank = np.empty(M, dtype=np.int64)
    rank[order] = np.arange(M)
    nxt = order[(np.arange(M) + 1) % M]
    succ = rank[prev_tip[nxt]]
    label = np.arange(M)
    p = succ.copy()
    # pointer doubling: label converges to the min index on each cycle
    for _ in range(max(1, int(M).bit_length())):
        label = np.minimum(label, label[p])
        p = p[p]
    arc_len = (np.roll(spos, -1) - spos) % period
    uniq, inv = np.unique(label, return_inverse=True)
    sums = np.zeros(len(uniq), dtype=np.int64)
    np.add.at(sums, inv, arc_len)
    lengths = {int(u): int(s) for u, s in zip(uniq, sums)}
    return spos, label, lengths


def _face_of(spos: np.ndarray, face: np.ndarray, pts: np.ndarray) -> np.ndarray:
    if len(spos) == 0:
        return np.zeros(pts.shape, dtype=np.int64)
    idx = np.searchsorted(spos, pts, side="right") - 1
    idx[idx < 0] = len(spos) - 1
    return face[idx]


def _hits(spos: np.ndarray, pts: np.ndarray) -> np.ndarray:
    if len(spos) == 0:
        return np.zeros(pts.shape, dtype=bool)
    idx = np.searchsorted(spos, pts, side="left")
    idx = np.minimum(idx, len(spos) - 1)
    return spos[idx] == pts


def _prev_in_leaf(n_leaves: int, r: int) -> np.ndarray:
    # tips laid out leaf-major and sorted within each leaf
    base = np.arange(n_leaves * r).reshape(n_leaves, r)
    return np.roll(base, 1, axis=1).ravel()


# ---------------------------------------------------------------------------
# dynamical elaminations


@dataclass(eq=False)
class DynamicalElamination:
    """Depth-truncated pullback closure of a critical set.

    ``strata[c][k]`` is an int array of shape (n, r_c): tip numerators over
    ``denominator`` for the depth-k preimages of critical leaf ``c`` (depth 0
    is the critical leaf itself).  ``parents[c][k][i]`` indexes the image leaf
    in ``strata[c][k-1]``.  Heights are ``critical.leaves[c].height / q**k``.
    """

    q: int
    critical: CriticalSet
    depth: int
    denominator: int
    strata: list
    parents: list
    matching_counts: list = field(default_factory=list)

    # -- views ---------------------------------------------------------
    def height(self, c: int, k: int) -> Fraction:
        return self.critical.leaves[c].height / self.q**k

    def count(self, k: int) -> int:
        return sum(len(s[k]) for s in self.strata if k < len(s))

    def depth_counts(self) -> list:
        return [self.count(k) for k in range(self.depth + 1)]

    def __len__(self):
        return sum(len(a) for s in self.strata for a in s)

    def leaves_at(self, k: int) -> list:
        out = []
        for c, s in enumerate(self.strata):
            h = self.height(c, k)
            for row in s[k]:
                out.append(Leaf(tuple(Fraction(int(p), self.denominator) for p in row), h))
        return out

    def leaves(self) -> list:
        return [leaf for k in range(self.depth + 1) for leaf in self.leaves_at(k)]

    def records(self):
        """Yield (leaf, family, depth, index, parent index or None)."""
        for c, s in enumerate(self.strata):
            for k, arr in enumerate(s):
                h = self.height(c, k)
                for i, row in enumerate(arr):
                    leaf = Leaf(tuple(Fraction(int(p), self.denominator) for p in row), h)
                    parent = None if k == 0 else int(self.parents[c][k][i])
                    yield leaf, c, k, i, parent

    def elamination(self) -> Elamination:
        return Elamination(tuple(self.leaves()))

    def truncated(self, depth: int) -> "DynamicalElamination":
        if depth > self.depth:
            raise ValueError("cannot deepen a truncation")
        return DynamicalElamination(
            self.q,
            self.critical,
            depth,
            self.denominator,
            [s[: depth + 1] for s in self.strata],
            [p[: depth + 1] for p in self.parents],
            self.matching_counts,
        )

    def stretched(self, t) -> "DynamicalElamination":
        C = stretch(self.critical, t)
        return DynamicalElamination(
            self.q, C, self.depth, self.denominator, self.strata, self.parents, self.matching_counts
        )

    def key(self):
        return (self.q, self.depth, frozenset(self.leaves()))

    def __eq__(self, other):
        if not isinstance(other, DynamicalElamination):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def _common_denominator(C: CriticalSet) -> int:
    d = 1
    for leaf in C.leaves:
        for t in leaf.tips:
            d = d * t.denominator // math.gcd(d, t.denominator)
    return d


def build_dynamical(
    C: CriticalSet, q: int | None = None, depth: int = 3, validate: bool = True
) -> DynamicalElamination:
    """Pull back the critical set under angle q-tupling down to ``depth``.

    Leaves are produced in order of decreasing height; each pullback is
    checked against every leaf already present that is strictly higher than
    the new siblings, and against all critical leaves.  Pullbacks at the
    same height are evaluated as one vectorised batch.
    """
    q = C.q if q is None else q
    if q != C.q:
        raise ValueError("q disagrees with the critical set")
    report = validate_critical_set(C)
    if not report.valid:
        raise NonGeneric(f"invalid critical set: {report}")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    nC = len(C.leaves)
    if nC == 0:
        return DynamicalElamination(q, C, depth, 1, [], [], [])

    heights = [leaf.height for leaf in C.leaves]
    floor_h = min(heights) / q**depth
    # extra strata deeper than `depth` can still be higher than some kept leaf
    kmax = []
    for h in heights:
        k = depth
        while h / q ** (k + 1) > floor_h:
            k += 1
        kmax.append(k)
    D0 = _common_denominator(C)
    D = D0 * q ** max(kmax)
    if D.bit_length() > 62:
        raise OverflowError("common denominator exceeds int64; reduce depth")

    strata = [[np.array([[int(t * D) for t in leaf.tips]], dtype=np.int64)] for leaf in C.leaves]
    parents = [[np.zeros(0, dtype=np.int64)] for _ in C.leaves]
    counts = []

    tasks = sorted(
        ((heights[c] / q**k, c, k) for c in range(nC) for k in range(0, kmax[c] + 1)),
        key=lambda t: -t[0],
    )
    # group equal target heights
    batches = []
    for h, grp in itertools.groupby(tasks, key=lambda t: t[0]):
        batches.append((h, [(c, k) for _, c, k in grp]))

    present = []  # (c, k) strata already in the context, all higher than what comes next
    for h, members in batches:
        # critical leaves constrain every pullback, lower ones included
        extra = [(c, 0) for c in range(nC) if (c, 0) not in present and (c, 0) not in members]
        ctx_pos, ctx_prev = _context_arrays(strata, present + extra)
        spos, face, _ = quotient_faces(ctx_pos, ctx_prev, D)
        new_tips = []
        for c, k in members:
            if k == 0:
                arr = strata[c][0]
                if np.any(_hits(spos, arr.ravel())):
                    raise SharedAngle("critical leaves share a tip with a higher leaf")
                if len(set(_face_of(spos, face, arr.ravel()).tolist())) > 1:
                    raise NoValidMatching(f"critical leaf {c} links a higher precritical leaf")
                new_tips.append(arr.ravel())
                continue
            arr, par, cnt = _pullback_batch(strata[c][k - 1], q, D, spos, face)
            strata[c].append(arr)
            parents[c].append(par)
            counts.append(((c, k), cnt))
            new_tips.append(arr.ravel())
        if len(members) > 1:
            allnew = np.concatenate(new_tips)
            if len(np.unique(allnew)) != len(allnew):
                raise HeightCollision(f"leaves at height {h} collide")
        present.extend(members)

    lam = DynamicalElamination(q, C, depth, D, strata, parents, counts)
    lam = lam.truncated(depth) if max(kmax) > depth else lam
    if validate and not noncrossing_strata(lam.strata):
        raise InvariantBreach("pullback produced crossing leaves")
    return lam


def noncrossing_strata(strata) -> bool:
    """Global non-crossing check on integer tip arrays (one stack scan)."""
    pos, lab = [], []
    base = 0
    for s in strata:
        for arr in s:
            n, r = arr.shape
            pos.append(arr.ravel())
            lab.append(np.repeat(np.arange(base, base + n), r))
            base += n
    if not pos:
        return True
    pos = np.concatenate(pos)
    lab = np.concatenate(lab)
    order = np.argsort(pos, kind="stable")
    if np.any(np.diff(pos[order]) == 0):
        return False
    return _noncrossing_partition(lab[order].tolist())


def _context_arrays(strata, present):
    pos, prev = [], []
    offset = 0
    for c, k in present:
        arr = strata[c][k]
        n, r = arr.shape
        pos.append(arr.ravel())
        prev.append(_prev_in_leaf(n, r) + offset)
        offset += n * r
    if not pos:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(pos), np.concatenate(prev)


def _pullback_batch(parent_arr: np.ndarray, q: int, D: int, spos, face):
    """Vectorised :func:`pullback_leaf` for every leaf of one stratum.

    Returns (children tips (n*q, r), parent index per child, counts) where
    counts is an (n, 2) array of (#(a)&(c) matchings, #rule matchings).
    """
    n, r = parent_arr.shape
    if np.any(parent_arr % q):
        raise InvariantBreach("denominator too small for another pullback")
    # pre[t, j, i] = (tip_j + i) / q in units of 1/D
    pre = (parent_arr[:, :, None] + D * np.arange(q)[None, None, :]) // q
    if np.any(_hits(spos, pre.ravel())):
        raise SharedAngle("a preimage angle is already a tip of a higher leaf")
    faces = _face_of(spos, face, pre)  # (n, r, q)
    templates = _templates(q, r)
    a_flag, b_flag = _template_flags(q, r)
    K = len(templates)
    # perm_idx[K, r, q]
    perm_idx = np.array(templates, dtype=np.int64)
    # group faces: g[n, K, q(sib), r]
    j_idx = np.arange(r)[None, :, None]
    g = faces[:, j_idx, perm_idx]  # (n, K, r, q)
    c_ok = np.all(g == g[:, :, :1, :], axis=2).all(axis=2)  # (n, K)
    ac = c_ok & a_flag[None, :]
    n_ac = ac.sum(axis=1)
    flat = ac & b_flag[None, :]
    n_flat = flat.sum(axis=1)
    choice = np.where(n_ac == 1, np.argmax(ac, axis=1), np.argmax(flat, axis=1))
    bad = (n_ac == 0) | ((n_ac > 1) & (n_flat != 1))
    if np.any(bad):
        t = int(np.argmax(bad))
        if n_ac[t] == 0:
            raise NoValidMatching(f"no valid sibling matching for stratum leaf {t}")
        raise MultipleValidMatchings(f"ambiguous sibling matching for stratum leaf {t}")
    chosen = perm_idx[choice]  # (n, r, q)
    kids = np.take_along_axis(pre, chosen, axis=2)  # (n, r, q): tip j of sibling i
    kids = np.sort(kids.transpose(0, 2, 1), axis=2).reshape(n * q, r)
    par = np.repeat(np.arange(n), q)
    n_rule = np.where(n_ac == 1, 1, n_flat)
    return kids, par, np.stack([n_ac, n_rule], axis=1)

"""Sausage trees: cut the cylinder into bands and read off a tree of spheres.

Heights are split into the bands I_n = (q^(n-1/2), q^(n+1/2)).  The circle
at the band boundary q^(j-1/2) is cut and reglued along every leaf higher
than it (:func:`circle_quotient`); each resulting circle is the top of one
band component.  Going down through a band, circles only split, so a
vertex of level n is a circle of the quotient at q^(n+1/2), and its bottom
circles are the pieces of the quotient at q^(n-1/2) that refine it.
"""
from __future__ import annotations

import bisect
import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .elamination import DynamicalElamination, Leaf, as_angle, is_generic_height, log_band
from .errors import IndexOutOfRange, InvariantBreach, NonGeneric, OutOfBand, SharedAngle, TruncationTooShallow

__all__ = [
    "nu",
    "mu",
    "QuotientComponent",
    "circle_quotient",
    "CriticalPoint",
    "SausageVertex",
    "SausageTree",
    "build_sausage_tree",
    "required_depth",
    "TagAssignment",
    "tag_choices",
    "assign_tags",
    "hurwitz_profile",
    "ModuliVertex",
    "SausagePolynomialD3",
    "d3_moduli_tree",
]


# -- band coordinates ------------------------------------------------------


def nu(n: int, h: float, q: int) -> float:
    """nu_n(h) = q^n tan(pi (log_q h - n)): the band I_n stretched onto R."""
    if h <= 0:
        raise OutOfBand(f"height must be positive, got {h}")
    x = math.log(h) / math.log(q) - n
    if not -0.5 < x < 0.5:
        raise OutOfBand(f"h={h} is not in I_{n} for q={q}")
    return q**n * math.tan(math.pi * x)


def mu(theta: float, h: float, q: int) -> tuple:
    """The band index of (theta, h) and its image exp(nu + 2 pi i theta) in C*_n."""
    n = round(math.log(h) / math.log(q))
    return n, cmath.exp(nu(n, h, q) + 2j * math.pi * theta)


# -- circle quotients ------------------------------------------------------


@dataclass(frozen=True)
class QuotientComponent:
    """One reglued circle: its arcs (start, end) in traversal order."""

    arcs: tuple
    length: Fraction


class _Quotient:
    """Cut-and-paste of the circle along a set of leaves, with point location."""

    def __init__(self, leaves: Sequence[Leaf]):
        owner = {}
        for i, leaf in enumerate(leaves):
            for t in leaf.tips:
                if t in owner:
                    raise SharedAngle(f"angle {t} is a tip of two leaves")
                owner[t] = i
        self.tips = sorted(owner)
        n = len(self.tips)
        if n == 0:
            self.comp = [0]
            self.components = [QuotientComponent(((Fraction(0), Fraction(0)),), Fraction(1))]
            return
        index = {t: k for k, t in enumerate(self.tips)}
        prev = {}
        for leaf in leaves:
            tt = leaf.tips
            for j, t in enumerate(tt):
                prev[t] = tt[j - 1]
        # arc k runs from tips[k] to tips[k+1]; arriving at t, continue from prev(t)
        succ = [index[prev[self.tips[(k + 1) % n]]] for k in range(n)]
        self.comp = [-1] * n
        self.components = []
        for k0 in range(n):
            if self.comp[k0] >= 0:
                continue
            arcs, k = [], k0
            while self.comp[k] < 0:
                self.comp[k] = len(self.components)
                arcs.append(k)
                k = succ[k]
            out = tuple((self.tips[a], self.tips[(a + 1) % n]) for a in arcs)
            length = sum(((e - s) % 1 for s, e in out), Fraction(0))
            self.components.append(QuotientComponent(out, length))

    def locate(self, x) -> int:
        """Component holding angle x; arcs are half-open [start, end)."""
        if not self.tips:
            return 0
        k = bisect.bisect_right(self.tips, x) - 1
        return self.comp[k % len(self.tips)]


def circle_quotient(leaves: Iterable[Leaf]) -> list:
    """Cut the circle at every tip and reglue: the arc arriving at a tip
    continues with the arc leaving the previous tip of the same leaf.

    Returns the resulting cycles; their lengths sum to 1.
    """
    return list(_Quotient(list(leaves)).components)


def _position(comp: QuotientComponent, x) -> Fraction:
    """Distance travelled along the component from its first arc to x."""
    run = Fraction(0)
    for s, e in comp.arcs:
        span = (e - s) % 1 or Fraction(1)
        d = (x - s) % 1
        if d < span:
            return run + d
        run += span
    raise ValueError(f"{x} is not on this component")


# -- the tree ----------------------------------------------------------------


@dataclass(frozen=True)
class CriticalPoint:
    """kind is 'genuine' (a critical leaf in the band) or 'fake' (a marked
    point whose circle maps with degree > 1).  source is the critical-leaf
    index, ('bottom', i) or 'infinity'."""

    kind: str
    multiplicity: int
    source: object


@dataclass
class SausageVertex:
    id: int
    level: int  # band index n
    depth: int  # levels below the root
    top: QuotientComponent
    bottoms: tuple  # QuotientComponents
    bottom_degrees: tuple
    degree: int
    parent: int | None = None
    children: tuple = ()
    image: int | None = None
    critical: tuple = ()

    @property
    def length(self) -> Fraction:
        return self.top.length

    @property
    def n_marked(self) -> int:
        """|Z_v|: the finite marked points, one per bottom circle."""
        return len(self.bottoms)


@dataclass
class SausageTree:
    q: int
    vertices: list
    root: int
    levels: int
    top_level: int
    generic: bool = True
    certificate: str = ""

    def __getitem__(self, vid: int) -> SausageVertex:
        return self.vertices[vid]

    def __len__(self):
        return len(self.vertices)

    def at_depth(self, k: int) -> list:
        return [v for v in self.vertices if v.depth == k]

    def depth_profile(self) -> list:
        return [len(self.at_depth(k)) for k in range(self.levels + 1)]


def _band_quotient(leaves: Sequence[Leaf], q: int, j: int) -> _Quotient:
    """Quotient by the leaves strictly above the boundary circle q^(j-1/2)."""
    bound = Fraction(q) ** (2 * j - 1)
    return _Quotient([leaf for leaf in leaves if leaf.height**2 > bound])


def _midpoint(comp: QuotientComponent) -> Fraction:
    s, e = comp.arcs[0]
    span = (e - s) % 1 or Fraction(1)
    return (s + span / 2) % 1


def _image_component(comp: QuotientComponent, q: int, above: _Quotient) -> int:
    return above.locate((q * _midpoint(comp)) % 1)


def required_depth(C, levels: int) -> int:
    """Smallest pullback depth that resolves ``levels`` bands below the root."""
    q = C.q
    if not C.leaves:
        return 0
    top = max(log_band(leaf.height, q) for leaf in C.leaves)
    bound = Fraction(q) ** (2 * (top - levels) - 1)
    depth = 0
    for leaf in C.leaves:
        k = 0
        while (leaf.height / q ** (k + 1)) ** 2 > bound:
            k += 1
        depth = max(depth, k)
    return depth


def build_sausage_tree(lam: DynamicalElamination, levels: int) -> SausageTree:
    """Sausage tree of ``lam`` down to ``levels`` bands below the root.

    The degree of a vertex is q times its top length over the top length
    of its image, which is the degree of angle q-tupling from one circle
    onto the other.
    """
    q = lam.q
    if levels < 0:
        raise ValueError("levels must be non-negative")
    leaves = lam.leaves()
    for leaf in leaves:
        if not is_generic_height(leaf.height, q):
            raise NonGeneric(f"height {leaf.height} lies on a band boundary")
    top = max((log_band(leaf.height, q) for leaf in leaves), default=0)
    bottom = top - levels
    # every omitted leaf must lie below the lowest boundary circle
    bound = Fraction(q) ** (2 * bottom - 1)
    for leaf in lam.critical.leaves:
        if (leaf.height / q ** (lam.depth + 1)) ** 2 > bound:
            raise TruncationTooShallow(f"depth {lam.depth} does not reach {levels} levels")

    Q = {j: _band_quotient(leaves, q, j) for j in range(bottom, top + 3)}
    crit = list(lam.critical.leaves)
    vertices: list = []
    by_key: dict = {}  # (level, component index) -> vertex id

    def make(n: int, comp_index: int, parent):
        tq, bq = Q[n + 1], Q[n]
        comp = tq.components[comp_index]
        img = by_key.get((n + 1, _image_component(comp, q, Q[n + 2])))
        img_len = Fraction(1) if img is None else vertices[img].length
        degree = q * comp.length / img_len
        bottoms = tuple(b for b in bq.components if tq.locate(_midpoint(b)) == comp_index)
        bdeg = []
        for b in bottoms:
            above = tq.components[_image_component(b, q, tq)]
            bdeg.append(q * b.length / above.length)
        points = []
        for i, leaf in enumerate(crit):
            if log_band(leaf.height, q) == n and tq.locate(leaf.tips[0]) == comp_index:
                points.append(CriticalPoint("genuine", leaf.multiplicity, i))
        for i, d in enumerate(bdeg):
            if d > 1:
                points.append(CriticalPoint("fake", int(d) - 1, ("bottom", i)))
        if degree > 1:
            points.append(CriticalPoint("fake", int(degree) - 1, "infinity"))
        for d in [degree, *bdeg]:
            if d.denominator != 1 or d < 1:
                raise InvariantBreach(f"non-integral degree {d} at level {n}")
        v = SausageVertex(
            len(vertices), n, top - n, comp, bottoms, tuple(int(d) for d in bdeg), int(degree), parent, image=img,
            critical=tuple(points),
        )
        vertices.append(v)
        by_key[(n, comp_index)] = v.id
        return v

    root = make(top, 0, None)
    frontier = [root]
    for n in range(top - 1, bottom - 1, -1):
        nxt = []
        for w in frontier:
            kids = []
            for b in w.bottoms:
                v = make(n, Q[n + 1].locate(_midpoint(b)), w.id)
                kids.append(v.id)
                nxt.append(v)
            w.children = tuple(kids)
        frontier = nxt

    tree = SausageTree(q, vertices, root.id, levels, top, True, "no height on a band boundary; tips distinct")
    _check_tree(tree)
    return tree


def _check_tree(tree: SausageTree) -> None:
    q = tree.q
    for k in range(tree.levels + 1):
        if sum(v.length for v in tree.at_depth(k)) != 1:
            raise InvariantBreach(f"level mass at depth {k} is not 1")
    mass = {}
    for v in tree.vertices:
        if v.image is not None:
            mass[v.image] = mass.get(v.image, 0) + v.degree
        genuine = sum(p.multiplicity for p in v.critical if p.kind == "genuine")
        fake = sum(p.multiplicity for p in v.critical if p.kind == "fake" and p.source != "infinity")
        if genuine + fake != v.degree - 1:
            raise InvariantBreach(f"vertex {v.id}: {genuine}+{fake} critical points for degree {v.degree}")
    for w, total in mass.items():
        if tree[w].depth < tree.levels and total != q:
            raise InvariantBreach(f"vertex {w} is covered with total degree {total}")
    if tree[tree.root].degree != q:
        raise InvariantBreach("root does not have degree q")


# -- tags --------------------------------------------------------------------


@dataclass(frozen=True)
class TagAssignment:
    tags: dict  # vertex id -> angle on its top circle
    choices: dict  # vertex id -> index among the candidate tags
    options: dict  # vertex id -> number of candidates (the degree)


def tag_choices(tree: SausageTree, vid: int, image_tag=Fraction(0)) -> list:
    """Angles of v's top circle mapping to ``image_tag``, in the order met
    when walking the circle from its first arc."""
    v = tree[vid]
    q = tree.q
    image_tag = as_angle(image_tag)
    out = []
    for j in range(q):
        x = (image_tag + j) / q
        try:
            out.append((_position(v.top, x), x))
        except ValueError:
            continue
    out.sort()
    if len(out) != v.degree:
        raise InvariantBreach(f"vertex {vid}: {len(out)} tag preimages for degree {v.degree}")
    return [x for _, x in out]


def assign_tags(tree: SausageTree, choices: dict | None = None) -> TagAssignment:
    """Root tag 0; every other tag is the chosen preimage of its image's tag.

    ``choices`` maps vertex ids to an index in 0..degree-1 (default 0).
    """
    choices = dict(choices or {})
    if tree.root in choices:
        raise IndexOutOfRange("the root tag is fixed at 0")
    for vid in choices:
        if not 0 <= vid < len(tree):
            raise IndexOutOfRange(f"no vertex {vid}")
    tags, used, options = {tree.root: Fraction(0)}, {tree.root: 0}, {tree.root: tree[tree.root].degree}
    for v in sorted(tree.vertices, key=lambda v: v.depth):
        if v.id == tree.root:
            continue
        cands = tag_choices(tree, v.id, tags[v.image])
        i = choices.get(v.id, 0)
        if not 0 <= i < len(cands):
            raise IndexOutOfRange(f"vertex {v.id} has {len(cands)} tag choices, got index {i}")
        tags[v.id], used[v.id], options[v.id] = cands[i], i, len(cands)
    return TagAssignment(tags, used, options)


# -- Hurwitz data and moduli --------------------------------------------------


def hurwitz_profile(tree) -> list:
    """(vertex id, degree p, |Z| of the image) for every vertex of degree > 1.

    Works for both SausageTree and the moduli skeleton; the root's image
    lies above the tree and has a single finite marked point.
    """
    out = []
    for v in tree.vertices:
        if v.degree > 1:
            z = 1 if v.image is None else tree[v.image].n_marked
            out.append((v.id, v.degree, z))
    return out


@dataclass
class ModuliVertex:
    id: int
    depth: int
    degree: int
    coeffs: tuple | None  # monic coefficients, highest first; None when free
    marked: tuple  # (point, multiplicity) pairs; () when undetermined
    parent: int | None = None
    attach: complex | None = None
    image: int | None = None
    children: tuple = ()

    @property
    def n_marked(self) -> int:
        return len(self.marked)


@dataclass
class SausagePolynomialD3:
    kind: str  # "quadratic", "generic", "degenerate"
    c: complex
    d: complex | None
    vertices: list = field(default_factory=list)
    root: int = 0
    note: str = ""

    def __getitem__(self, vid: int) -> ModuliVertex:
        return self.vertices[vid]

    def at_depth(self, k: int) -> list:
        return [v for v in self.vertices if v.depth == k]


def _fibre(coeffs: tuple, value: complex, tol: float) -> list:
    """Distinct solutions of p(z) = value with multiplicities."""
    c = np.array(coeffs, dtype=complex)
    c[-1] -= value
    roots = np.roots(c) if len(c) > 1 else np.zeros(0)
    out: list = []
    for r in roots:
        for i, (s, m) in enumerate(out):
            if abs(r - s) < tol:
                out[i] = ((s * m + r) / (m + 1), m + 1)
                break
        else:
            out.append((complex(r), 1))
    out = [(complex(s), m) for s, m in out]
    return sorted(out, key=lambda sm: (round(sm[0].real, 9), round(sm[0].imag, 9)))


def _local_degree(coeffs: tuple, z: complex, tol: float) -> int:
    value = complex(np.polyval(coeffs, z))
    for s, m in _fibre(coeffs, value, tol):
        if abs(s - z) < tol:
            return m
    raise InvariantBreach("attachment point is not in its own fibre")


def d3_moduli_tree(c: complex, d: complex | None = None, levels: int = 3, tol: float = 1e-6) -> SausagePolynomialD3:
    """Skeleton of the degree-2 (d is None) or one-critical-root degree-3 type.

    Root z^2 + c, or (z - c)^2 (z + 2c) with the degree-2 child z^2 + d
    attached at c.  A degree-2 vertex whose polynomial is not fixed by the
    parameters is left free and not expanded.
    """
    c = complex(c)
    if c == 0:
        raise ValueError("c must be nonzero")
    if d is None:
        kind, root_coeffs, note = "quadratic", (1, 0, c), ""
    else:
        d = complex(d)
        root_coeffs = tuple(complex(a) for a in np.poly([c, c, -2 * c]))
        degenerate = abs(d - c) < tol or abs(d + 2 * c) < tol
        kind = "degenerate" if degenerate else "generic"
        note = "0 is a fake critical point of the degree-2 child; its child at 0 has degree 2" if degenerate else ""
    out = SausagePolynomialD3(kind, c, d, note=note)
    V = out.vertices
    # the vertex above the root has the single marked point 0
    V.append(ModuliVertex(0, 0, len(root_coeffs) - 1, root_coeffs, tuple(_fibre(root_coeffs, 0, tol))))
    frontier = [V[0]]
    for depth in range(1, levels + 1):
        nxt = []
        for w in frontier:
            if w.coeffs is None:
                continue
            kids = []
            for zeta, _ in w.marked:
                deg = _local_degree(w.coeffs, zeta, tol)
                if w.image is None:
                    img = 0  # children of the root map onto the root
                else:
                    value = complex(np.polyval(w.coeffs, zeta))
                    img = min(V[w.image].children, key=lambda u: abs(V[u].attach - value))
                zeta = complex(zeta)
                if deg == 1:
                    coeffs = (1, 0)
                elif kind != "quadratic" and w.id == 0:
                    coeffs = (1, 0, d)
                else:
                    coeffs = None
                u = ModuliVertex(len(V), depth, deg, coeffs, (), w.id, zeta, img)
                V.append(u)
                kids.append(u.id)
                nxt.append(u)
            w.children = tuple(kids)
        for u in nxt:
            if u.coeffs is not None:
                target = V[u.image].marked
                pts: list = []
                for z, _ in target:
                    pts.extend(_fibre(u.coeffs, z, tol))
                u.marked = tuple(pts)
        frontier = nxt
    return out

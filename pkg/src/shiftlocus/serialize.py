"""JSON forms of the pipeline's artifacts.

Rationals travel as "p/r" strings and floats as Python's shortest
round-trip repr, so emitting and re-reading gives back equal objects.
Keys are written in a fixed order for byte-stable output.
"""
from __future__ import annotations

import json
from fractions import Fraction

from .dynamics import NormalizedPolynomial, NumericLeaf
from .elamination import CriticalSet, DynamicalElamination, Leaf, build_dynamical
from .errors import InvariantBreach
from .sausage import CriticalPoint, QuotientComponent, SausageTree, SausageVertex

__all__ = [
    "frac",
    "unfrac",
    "dumps",
    "polynomial_to_dict",
    "polynomial_from_dict",
    "numeric_leaf_to_dict",
    "numeric_leaf_from_dict",
    "critical_set_to_dict",
    "critical_set_from_dict",
    "elamination_to_dict",
    "elamination_from_dict",
    "tree_to_dict",
    "tree_from_dict",
    "artifact_kind",
]


def frac(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def unfrac(s) -> Fraction:
    if isinstance(s, float):
        raise TypeError(f"expected an exact rational string, got float {s!r}")
    return Fraction(s)


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False, ensure_ascii=False) + "\n"


# -- numeric side --------------------------------------------------------------


def polynomial_to_dict(f: NormalizedPolynomial) -> dict:
    return {"q": f.q, "coeffs": [[a.real, a.imag] for a in f.coeffs]}


def polynomial_from_dict(d: dict) -> NormalizedPolynomial:
    q = d["q"]
    if not isinstance(q, int):
        raise ValueError("q must be an integer")
    coeffs = []
    for a in d["coeffs"]:
        if isinstance(a, (int, float)):
            coeffs.append(complex(a))
        else:
            re, im = a
            coeffs.append(complex(float(re), float(im)))
    return NormalizedPolynomial(q, tuple(coeffs))


def numeric_leaf_to_dict(leaf: NumericLeaf) -> dict:
    return {
        "height": leaf.height,
        "tips": list(leaf.tips),
        "point": [leaf.point.real, leaf.point.imag],
        "depth": leaf.depth,
        "family": leaf.family,
    }


def numeric_leaf_from_dict(d: dict) -> NumericLeaf:
    p = d.get("point", [0.0, 0.0])
    return NumericLeaf(float(d["height"]), tuple(float(t) for t in d["tips"]), complex(*p), d.get("depth", 0), d.get("family", 0))


# -- exact side ------------------------------------------------------------------


def _leaf_from(d: dict) -> Leaf:
    return Leaf(tuple(unfrac(t) for t in d["tips"]), unfrac(d["h"]))


def critical_set_to_dict(C: CriticalSet) -> dict:
    return {"q": C.q, "leaves": [{"h": frac(l.height), "tips": [frac(t) for t in l.tips]} for l in C.leaves]}


def critical_set_from_dict(d: dict) -> CriticalSet:
    """Accepts a critical set, or an elamination from which the depth-0 leaves are taken."""
    leaves = [x for x in d["leaves"] if x.get("critical", True) and x.get("depth", 0) == 0]
    return CriticalSet(int(d["q"]), tuple(_leaf_from(x) for x in leaves))


def elamination_to_dict(lam: DynamicalElamination) -> dict:
    out = []
    for leaf, fam, k, _, _ in lam.records():
        out.append({"h": frac(leaf.height), "tips": [frac(t) for t in leaf.tips], "depth": k, "critical": k == 0, "family": fam})
    return {"q": lam.q, "depth": lam.depth, "leaves": out}


def elamination_from_dict(d: dict) -> DynamicalElamination:
    """Rebuild by pulling back the critical leaves; the listed leaves must agree."""
    C = critical_set_from_dict(d)
    depth = int(d.get("depth", max((x.get("depth", 0) for x in d["leaves"]), default=0)))
    lam = build_dynamical(C, depth=depth)
    given = {(_leaf_from(x), x.get("depth", 0)) for x in d["leaves"]}
    built = {(leaf, k) for leaf, _, k, _, _ in lam.records()}
    if given != built:
        raise InvariantBreach("listed leaves differ from the pullback of the critical leaves")
    return lam


# -- sausage trees -------------------------------------------------------------


def _comp_to(c: QuotientComponent) -> dict:
    return {"length": frac(c.length), "arcs": [[frac(s), frac(e)] for s, e in c.arcs]}


def _comp_from(d: dict) -> QuotientComponent:
    return QuotientComponent(tuple((unfrac(s), unfrac(e)) for s, e in d["arcs"]), unfrac(d["length"]))


def _source_to(src):
    return list(src) if isinstance(src, tuple) else src


def _source_from(src):
    return tuple(src) if isinstance(src, list) else src


def tree_to_dict(tree: SausageTree) -> dict:
    verts = []
    for v in tree.vertices:
        verts.append(
            {
                "id": v.id,
                "level": v.level,
                "depth": v.depth,
                "degree": v.degree,
                "top_len": frac(v.length),
                "parent": v.parent,
                "image": v.image,
                "children": list(v.children),
                "bottom_circles": len(v.bottoms),
                "bottom_degrees": list(v.bottom_degrees),
                "critical": [{"kind": p.kind, "multiplicity": p.multiplicity, "source": _source_to(p.source)} for p in v.critical],
                "top": _comp_to(v.top),
                "bottoms": [_comp_to(b) for b in v.bottoms],
            }
        )
    return {
        "q": tree.q,
        "root": tree.root,
        "levels": tree.levels,
        "top_level": tree.top_level,
        "generic": tree.generic,
        "certificate": tree.certificate,
        "vertices": verts,
    }


def tree_from_dict(d: dict) -> SausageTree:
    verts = []
    for x in d["vertices"]:
        verts.append(
            SausageVertex(
                x["id"],
                x["level"],
                x["depth"],
                _comp_from(x["top"]),
                tuple(_comp_from(b) for b in x["bottoms"]),
                tuple(x["bottom_degrees"]),
                x["degree"],
                x["parent"],
                tuple(x["children"]),
                x["image"],
                tuple(CriticalPoint(p["kind"], p["multiplicity"], _source_from(p["source"])) for p in x["critical"]),
            )
        )
    return SausageTree(d["q"], verts, d["root"], d["levels"], d["top_level"], d["generic"], d["certificate"])


def artifact_kind(d: dict) -> str:
    """Best guess at what a parsed JSON document holds."""
    if "vertices" in d:
        return "tree"
    if "verdict" in d and "critical_leaves" in d:
        return "analysis"
    if "verdict" in d:
        return "consistency"
    if "rows" in d:
        return "count"
    if "leaves" in d:
        return "elamination"
    if "coeffs" in d:
        return "polynomial"
    raise ValueError("unrecognised artifact")

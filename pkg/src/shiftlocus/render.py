"""Static SVG figures: leaves as hyperbolic geodesics in the unit disk, and
sausage trees as layered node-link diagrams."""
from __future__ import annotations

import math
from typing import Iterable, Sequence

__all__ = ["geodesic_path", "render_leaves", "render_elamination", "render_tree"]

CRITICAL = "red"


def _pt(theta: float, cx: float, cy: float, R: float) -> tuple:
    a = 2 * math.pi * theta
    return cx + R * math.cos(a), cy - R * math.sin(a)


def _fmt(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def _arc_to(a: float, b: float, cx: float, cy: float, R: float) -> str:
    """Path segment from angle a to angle b along the geodesic joining them."""
    d = (b - a) % 1.0
    sep = min(d, 1 - d) * 2 * math.pi
    x2, y2 = _pt(b, cx, cy, R)
    if abs(sep - math.pi) < 1e-9 or sep < 1e-9:
        return f"L {_fmt(x2)} {_fmt(y2)}"
    r = R * math.tan(sep / 2)
    # centre of the orthogonal circle, beyond the midpoint of the short arc
    mid = a + (d / 2 if d <= 0.5 else (d - 1) / 2)
    ox, oy = _pt(mid, cx, cy, R / math.cos(sep / 2))
    x1, y1 = _pt(a, cx, cy, R)
    cross = (x1 - ox) * (y2 - oy) - (y1 - oy) * (x2 - ox)
    sweep = 1 if cross > 0 else 0
    return f"A {_fmt(r)} {_fmt(r)} 0 0 {sweep} {_fmt(x2)} {_fmt(y2)}"


def geodesic_path(tips: Sequence[float], cx: float, cy: float, R: float) -> str:
    """Closed ideal polygon for three or more tips, a single arc for two."""
    tips = sorted(float(t) % 1.0 for t in tips)
    x0, y0 = _pt(tips[0], cx, cy, R)
    parts = [f"M {_fmt(x0)} {_fmt(y0)}"]
    ring = tips + [tips[0]] if len(tips) > 2 else tips
    for a, b in zip(ring, ring[1:]):
        parts.append(_arc_to(a, b, cx, cy, R))
    if len(tips) > 2:
        parts.append("Z")
    return " ".join(parts)


def render_leaves(leaves: Iterable[tuple], size: int = 480, title: str = "") -> str:
    """leaves: (tips, depth, critical) triples; tips in turns."""
    cx = cy = size / 2
    R = size / 2 - 12
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f"<title>{title}</title>" if title else "",
        f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(R)}" fill="none" stroke="black" stroke-width="1.2"/>',
    ]
    ordered = sorted(leaves, key=lambda t: (-t[1], t[2]))  # deep first, critical on top
    for tips, depth, critical in ordered:
        d = geodesic_path(tips, cx, cy, R)
        if critical:
            out.append(f'<path class="critical" d="{d}" fill="none" stroke="{CRITICAL}" stroke-width="2"/>')
        else:
            w = max(0.3, 1.2 * 0.7**depth)
            out.append(f'<path class="leaf" d="{d}" fill="none" stroke="black" stroke-width="{_fmt(w)}"/>')
    out.append("</svg>")
    return "\n".join(line for line in out if line) + "\n"


def render_elamination(doc: dict, size: int = 480) -> str:
    """Render an elamination or analysis JSON document."""
    if "critical_leaves" in doc:
        items = [(l["tips"], l.get("depth", 0), l.get("depth", 0) == 0) for l in doc["critical_leaves"]]
        items += [(l["tips"], l["depth"], False) for l in doc.get("leaves", [])]
    else:
        from fractions import Fraction

        items = [
            ([float(Fraction(t)) for t in l["tips"]], l.get("depth", 0), bool(l.get("critical", l.get("depth", 0) == 0)))
            for l in doc["leaves"]
        ]
    return render_leaves(items, size, title=f"q={doc.get('q', '')}")


def render_tree(doc: dict, width: int = 640, row: int = 60) -> str:
    """Layered drawing of a tree JSON document; vertices with genuine
    critical points are filled red, labels give the degree."""
    verts = {v["id"]: v for v in doc["vertices"]}
    root = doc["root"]
    span = {root: (0.0, 1.0)}
    order = [root]
    for vid in order:
        lo, hi = span[vid]
        kids = verts[vid]["children"]
        for i, k in enumerate(kids):
            span[k] = (lo + (hi - lo) * i / len(kids), lo + (hi - lo) * (i + 1) / len(kids))
            order.append(k)
    depth = max(v["depth"] for v in verts.values())
    height = row * (depth + 1) + 20
    pos = {vid: ((a + b) / 2 * (width - 20) + 10, 20 + row * verts[vid]["depth"]) for vid, (a, b) in span.items()}
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">']
    for vid in order:
        p = verts[vid]["parent"]
        if p is not None:
            (x1, y1), (x2, y2) = pos[p], pos[vid]
            out.append(f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" stroke="gray" stroke-width="0.8"/>')
    for vid in order:
        v = verts[vid]
        x, y = pos[vid]
        genuine = any(c["kind"] == "genuine" for c in v["critical"])
        fill = CRITICAL if genuine else ("black" if v["degree"] > 1 else "white")
        r = 3 + 2 * v["degree"]
        out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{r}" fill="{fill}" stroke="black" stroke-width="0.8"/>')
        if v["degree"] > 1:
            out.append(f'<text x="{_fmt(x + r + 2)}" y="{_fmt(y + 4)}" font-size="11">{v["degree"]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

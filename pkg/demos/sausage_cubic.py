"""Sausage tree of a degree-3 critical set with two critical leaves.

C = {1/6, 5/6} at height 1 and C' = {7/27, 16/27} at height 1/4.  The root
has degree 3; below it hang one degree-2 piece carrying C' and one disk.
"""
from fractions import Fraction as F

from shiftlocus import CriticalSet, Leaf, build_dynamical
from shiftlocus.sausage import assign_tags, build_sausage_tree, d3_moduli_tree, hurwitz_profile, required_depth

C = CriticalSet(3, (Leaf((F(1, 6), F(5, 6)), 1), Leaf((F(7, 27), F(16, 27)), F(1, 4))))
levels = 3
lam = build_dynamical(C, depth=required_depth(C, levels))
tree = build_sausage_tree(lam, levels)

print("vertices per depth:", tree.depth_profile())
for v in tree.vertices:
    if v.depth <= 1:
        kinds = ", ".join(f"{p.kind}x{p.multiplicity}" for p in v.critical) or "none"
        print(f"  v{v.id}: depth {v.depth}, degree {v.degree}, top length {v.length}, "
              f"{len(v.bottoms)} bottom circles, critical points: {kinds}")

print("Hurwitz data (vertex, degree, marked points of the image):", hurwitz_profile(tree))
tags = assign_tags(tree)
print("tag choices with more than one option:", {k: n for k, n in tags.options.items() if n > 1})

# the matching polynomial skeleton, root (z - c)^2 (z + 2c) and child z^2 + d
m = d3_moduli_tree(1, 5)
w1 = next(v for v in m.vertices if v.depth == 1 and v.degree == 2)
print("moduli picture:", m.kind, "with", w1.n_marked, "marked points on the degree-2 child")

"""From a polynomial to its exact elamination.

Takes f(z) = z^2 - 3, checks it is in the shift locus, reads off the
critical leaf from external rays, and compares the numeric preimage leaves
with the exact pullback of the snapped critical leaf.
"""
from shiftlocus import NormalizedPolynomial, consistency_check, critical_points, critical_leaf, is_in_shift_locus

f = NormalizedPolynomial(2, (-3,))
print("verdict:", is_in_shift_locus(f).status)

(c,) = critical_points(f)
leaf = critical_leaf(f, c)
print(f"critical leaf at height {leaf.height:.6f}, tips {[round(t, 9) for t in leaf.tips]}")

report = consistency_check(f, depth=4)
print("exact critical set:", report.critical_set.leaves)
print(f"{len(report.matches)} leaves matched, worst angle error {report.max_angle_error:.1e} turns")
print("verdict:", report.verdict)

# z^2 + 3 has its critical value on the fixed ray 0; the exact pullback is not generic
print("z^2 + 3:", consistency_check(NormalizedPolynomial(2, (3,)), depth=4).verdict)

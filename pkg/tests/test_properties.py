import math
import random
from fractions import Fraction as F

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from conftest import random_critical_set
from shiftlocus.bridge import DEFAULT_POLICY, SnapPolicy, snap_angle
from shiftlocus.dynamics import NormalizedPolynomial, green_value, is_in_shift_locus
from shiftlocus.elamination import (
    Elamination,
    angle_image,
    angle_preimages,
    build_dynamical,
    leaf_image,
    stretch,
    validate_elamination,
)
from shiftlocus.errors import MultipleValidMatchings, SnapFailure
from shiftlocus.sausage import assign_tags, build_sausage_tree, circle_quotient, nu, required_depth
from shiftlocus.tautological import cube_leaf

angles = st.fractions(min_value=0, max_value=1, max_denominator=10**5).map(lambda x: x % 1)
degrees = st.integers(2, 5)
seeds = st.integers(0, 10**6)
slow = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@given(angles, degrees)
def test_preimages_invert_image(theta, q):
    pre = angle_preimages(theta, q)
    assert len(set(pre)) == q
    assert all(angle_image(x, q) == theta for x in pre)


@given(st.integers(1, 400), st.data())
def test_snap_identity_when_unambiguous(D, data):
    b = data.draw(st.integers(1, D))
    a = data.draw(st.integers(0, b - 1))
    policy = SnapPolicy(D, 1 / (4 * D * D))
    assert policy.unambiguous
    assert snap_angle(float(F(a, b)), policy) == F(a, b)


@given(st.integers(1, DEFAULT_POLICY.max_denominator), st.data())
def test_default_snap_never_returns_a_wrong_rational(b, data):
    r = F(data.draw(st.integers(0, b - 1)), b)
    try:
        assert snap_angle(float(r)) == r
    except SnapFailure:
        pass


@given(st.floats(0, 1, exclude_max=True))
def test_snap_result_is_within_tolerance(x):
    try:
        r = snap_angle(x)
    except SnapFailure:
        return
    d = (x - float(r)) % 1
    assert min(d, 1 - d) <= DEFAULT_POLICY.tol


@given(seeds, st.sampled_from([2, 3, 4]))
@slow
def test_pullback_parents_and_crossings(seed, q):
    C = random_critical_set(q, random.Random(seed), maximal=True)
    lam = build_dynamical(C, depth=2)
    recs = {(fam, k, i): leaf for leaf, fam, k, i, _ in lam.records()}
    for leaf, fam, k, _, parent in lam.records():
        if k:
            assert leaf_image(leaf, q) == recs[(fam, k - 1, parent)]
    assert validate_elamination(lam.elamination(), q).valid
    assert lam.depth_counts() == [len(C.leaves) * q**k for k in range(3)]


@given(seeds, st.fractions(min_value=F(1, 50), max_value=50, max_denominator=60))
@slow
def test_stretch_equivariance(seed, t):
    C = random_critical_set(3, random.Random(seed), maximal=True)
    a = build_dynamical(stretch(C, t), depth=2).elamination()
    b = stretch(build_dynamical(C, depth=2).elamination(), t)
    assert a == b


@given(seeds, st.sampled_from([2, 3, 4]), st.booleans())
@slow
def test_quotient_mass_and_tree(seed, q, maximal):
    C = random_critical_set(q, random.Random(seed), maximal=maximal)
    try:
        lam = build_dynamical(C, depth=min(required_depth(C, 2), 5))
    except MultipleValidMatchings:
        assume(False)
    comps = circle_quotient(lam.leaves())
    assert sum(c.length for c in comps) == 1
    # a leaf with k tips splits off k - 1 components
    assert len(comps) == 1 + sum(len(l.tips) - 1 for l in lam.leaves())
    if required_depth(C, 2) <= 5:
        tree = build_sausage_tree(lam, 2)  # checks its own invariants
        assert len(assign_tags(tree).tags) == len(tree)


@given(degrees, st.floats(-0.45, 0.45), st.integers(-3, 3))
def test_nu_cocycle(q, x, n):
    h = float(q) ** (n + x)
    assert math.isclose(nu(n + 1, q * h, q), q * nu(n, h, q), rel_tol=1e-9, abs_tol=1e-9 * q**n)


@given(angles, angles, st.fractions(min_value=F(1, 9), max_value=1, max_denominator=50))
def test_cube_rotation(a, rho, h):
    from shiftlocus.elamination import Leaf

    b = (a + F(1, 7)) % 1
    P = Leaf((a, b), h)
    R = Leaf(((a + rho) % 1, (b + rho) % 1), h)
    assert cube_leaf(R) == Leaf(tuple((t + 3 * rho) % 1 for t in cube_leaf(P).tips), h)


@given(st.integers(2, 3), seeds)
@settings(max_examples=40, deadline=None)
def test_green_functional_equation(q, seed):
    rng = np.random.default_rng(seed)
    f = NormalizedPolynomial(q, tuple(complex(*(rng.normal(size=2) * 2)) for _ in range(q - 1)))
    z = complex(*(rng.normal(size=2) * 3))
    g, gf = green_value(f, z), green_value(f, complex(f(z)))
    assume(g.converged and g.value > 1e-3)
    assert math.isclose(gf.value, q * g.value, rel_tol=1e-9, abs_tol=1e-10)

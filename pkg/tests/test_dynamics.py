import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from shiftlocus.dynamics import (
    NormalizedPolynomial,
    bottcher,
    critical_leaf,
    critical_points,
    green_array,
    green_value,
    is_in_shift_locus,
    numeric_elamination,
    trace_flowline,
    trace_ray,
    unicritical_on_ray,
)
from shiftlocus.errors import UnreliableCoordinate

Z2M3 = NormalizedPolynomial(2, (-3,))
Z2P3 = NormalizedPolynomial(2, (3,))


def circ(a, b):
    d = (a - b) % 1.0
    return min(d, 1 - d)


def direct_green(f, z, n=60):
    """Oracle: plain iteration until the orbit is huge, then log|w| / q^k."""
    w = complex(z)
    for k in range(n):
        if abs(w) > 1e60:
            return math.log(abs(w)) / f.q**k
        w = complex(f(w))
    raise AssertionError("no escape")


def test_polynomial_validation():
    with pytest.raises(ValueError):
        NormalizedPolynomial(3, (1,))
    with pytest.raises(ValueError):
        NormalizedPolynomial(1, ())
    f = NormalizedPolynomial.from_roots_form(1)
    assert np.allclose(f.coeffs, (-3, 2))


def test_critical_points_examples():
    assert np.allclose(critical_points(NormalizedPolynomial(2, (4,))), [0])
    assert np.allclose(critical_points(NormalizedPolynomial(3, (0, 0))), [0, 0])
    c = sorted(critical_points(NormalizedPolynomial.from_roots_form(1)), key=lambda z: z.real)
    assert np.allclose(c, [-1, 1])


def test_green_examples():
    for q in (2, 3, 4):
        f = NormalizedPolynomial(q, (0,) * (q - 1))
        assert green_value(f, 2).value == pytest.approx(math.log(2), abs=1e-14)
    ev = green_value(NormalizedPolynomial(2, (4,)), 0)
    assert ev.converged and ev.value > 0
    assert ev.value == pytest.approx(direct_green(NormalizedPolynomial(2, (4,)), 0), rel=1e-12)


def test_green_no_escape():
    ev = green_value(NormalizedPolynomial(2, (0.1,)), 0, budget=200)
    assert not ev.converged and ev.value == 0.0
    with pytest.raises(ValueError):
        green_value(Z2M3, 1, budget=0)


def test_green_matches_direct_iteration():
    rng = np.random.default_rng(1)
    f = NormalizedPolynomial(3, (1 + 2j, -2.5 + 0.5j))
    zs = rng.normal(size=40) * 3 + 1j * rng.normal(size=40) * 3
    g = green_array(f, zs)
    for z, val in zip(zs, g):
        if val > 0:
            assert val == pytest.approx(direct_green(f, z), rel=1e-10, abs=1e-12)


def test_green_asymptotics():
    f = NormalizedPolynomial(3, (2 - 1j, 5))
    errs = [abs(green_value(f, r * cmath.exp(0.3j)).value - math.log(r)) for r in (1e3, 1e4, 1e6)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-4


def test_bottcher_on_power_map():
    f = NormalizedPolynomial(3, (0, 0))
    b = bottcher(f, 1.7 * cmath.exp(2j * math.pi * 0.3))
    assert b.h == pytest.approx(math.log(1.7), abs=1e-13)
    assert circ(b.theta, 0.3) < 1e-12


def test_bottcher_positive_real_axis():
    for x in (2.5, 4.0, 30.0):
        assert circ(bottcher(Z2M3, x).theta, 0.0) < 1e-12


def test_bottcher_angle_below_radius():
    # a point of z^2-3 inside the Böttcher radius, still above g(0)
    z = 0.3 + 1.9j
    b, b2 = bottcher(Z2M3, z), bottcher(Z2M3, complex(Z2M3(z)))
    assert circ(b2.theta, 2 * b.theta) < 1e-9


def test_bottcher_unreliable_below_critical_height():
    with pytest.raises(UnreliableCoordinate):
        bottcher(Z2M3, 0.01)


def test_shift_locus_verdicts():
    assert is_in_shift_locus(NormalizedPolynomial(2, (4,))).status == "inside"
    assert is_in_shift_locus(NormalizedPolynomial(2, (0,))).status != "inside"
    assert is_in_shift_locus(NormalizedPolynomial(2, (0.1,))).status == "outside"
    assert is_in_shift_locus(NormalizedPolynomial(2, (1j,)), budget=50).status == "undecided"


def test_flowline_radial_for_power_map():
    f = NormalizedPolynomial(2, (0,))
    path = trace_flowline(f, 4.0, "descending", stop_height=math.log(2))
    assert abs(path[-1] - 2.0) < 1e-8
    h = green_array(f, path)
    assert np.all(np.diff(h) < 1e-12)


def test_flowline_heights_monotone_ascending():
    z0 = 0.4 + 0.3j
    stop = 3 * green_value(Z2M3, z0).value
    path = trace_flowline(Z2M3, z0, "ascending", stop_height=stop)
    h = green_array(Z2M3, path)
    assert np.all(np.diff(h) > -1e-10)
    assert h[-1] == pytest.approx(stop, abs=1e-8)


def test_trace_ray_lands_on_level_and_angle():
    zs = trace_ray(Z2M3, [Fraction(1, 3), 0.1], 0.9)
    for z, t in zip(zs, (1 / 3, 0.1)):
        b = bottcher(Z2M3, z)
        assert b.h == pytest.approx(0.9, abs=1e-10)
        assert circ(b.theta, t) < 1e-9


def test_critical_leaf_oracles():
    leaf = critical_leaf(Z2M3, 0)
    assert circ(leaf.tips[0], 0.25) < 1e-9 and circ(leaf.tips[1], 0.75) < 1e-9
    assert leaf.height == pytest.approx(green_value(Z2M3, 0).value)
    leaf = critical_leaf(Z2P3, 0)
    assert circ(leaf.tips[0], 0.0) < 1e-9 and circ(leaf.tips[1], 0.5) < 1e-9


def test_critical_leaf_multiplicity_two():
    f = NormalizedPolynomial(3, (0, 2 * cmath.exp(0.6j)))
    leaf = critical_leaf(f, 0)
    assert len(leaf.tips) == 3 and leaf.multiplicity == 2
    t = sorted(leaf.tips)
    assert circ(t[1] - t[0], 1 / 3) < 1e-9 and circ(t[2] - t[1], 1 / 3) < 1e-9


def test_numeric_elamination_z2m3():
    leaves = numeric_elamination(Z2M3, 3)
    g0 = green_value(Z2M3, 0).value
    for k in range(4):
        at = [l for l in leaves if l.depth == k]
        assert len(at) == 2**k
        assert all(l.height == pytest.approx(g0 / 2**k, rel=1e-12) for l in at)
    (d1a, d1b) = sorted(tuple(sorted(l.tips)) for l in leaves if l.depth == 1)
    assert np.allclose(d1a, (1 / 8, 7 / 8), atol=1e-9) and np.allclose(d1b, (3 / 8, 5 / 8), atol=1e-9)


def test_real_polynomial_symmetry():
    for f in (Z2M3, NormalizedPolynomial(2, (-5.5,))):
        # conjugation maps the leaf set onto itself
        leaves = numeric_elamination(f, 3)
        for leaf in leaves:
            mirrored = sorted((-t) % 1.0 for t in leaf.tips)
            assert any(
                all(circ(a, b) < 1e-8 for a, b in zip(sorted(other.tips), mirrored))
                for other in leaves
                if other.depth == leaf.depth
            )


def test_unicritical_on_ray():
    # the critical value sits on the ray of angle 1/6 at Green height 1
    f = unicritical_on_ray(2, Fraction(1, 6), height=1.0)
    (c,) = critical_points(f)
    b = bottcher(f, complex(f(c)))
    assert b.h == pytest.approx(1.0, abs=1e-9)
    assert circ(b.theta, 1 / 6) < 1e-9

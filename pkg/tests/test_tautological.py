from fractions import Fraction as F

import numpy as np
import pytest

from conftest import DATA
from shiftlocus.elamination import Leaf, validate_elamination, Elamination
from shiftlocus.errors import DegenerateCube, NonPowerOfTwoLength
from shiftlocus.tautological import (
    DEFAULT_C,
    PUBLISHED_N3,
    CountTable,
    TautLamination,
    beta_series,
    component_spectrum,
    count_table,
    cube_leaf,
    n30_recursion,
    taut_lamination,
)


def test_cube_leaf_examples():
    assert cube_leaf(Leaf((F(5, 18), F(7, 18)), F(1, 3))) == Leaf((F(1, 6), F(5, 6)), F(1, 3))
    siblings = [(F(17, 18), F(1, 18)), (F(5, 18), F(7, 18)), (F(11, 18), F(13, 18))]
    cubes = {cube_leaf(Leaf(t, F(1, 3))) for t in siblings}
    assert cubes == {Leaf((F(1, 6), F(5, 6)), F(1, 3))}


def test_cube_leaf_rotation():
    P = Leaf((F(5, 18), F(7, 18)), F(1, 3))
    rho = F(2, 11)
    rotated = Leaf(tuple((t + rho) % 1 for t in P.tips), P.height)
    expected = Leaf(tuple((t + 3 * rho) % 1 for t in cube_leaf(P).tips), P.height)
    assert cube_leaf(rotated) == expected


def test_cube_leaf_errors():
    with pytest.raises(DegenerateCube):
        cube_leaf(DEFAULT_C)
    with pytest.raises(ValueError):
        cube_leaf(Leaf((F(1, 9), F(4, 9), F(7, 9)), 1))


def test_taut_lamination_small():
    assert taut_lamination(DEFAULT_C, 0).leaves() == []
    assert taut_lamination(DEFAULT_C, 1).leaves() == [Leaf((F(1, 6), F(5, 6)), F(1, 3))]
    lam2 = taut_lamination(DEFAULT_C, 2).leaves()
    assert len(lam2) == 4
    low = sorted(l.tips for l in lam2 if l.height == F(1, 9))
    assert low == [(F(1, 18), F(17, 18)), (F(5, 18), F(7, 18)), (F(11, 18), F(13, 18))]


@pytest.mark.parametrize("n", range(7))
def test_taut_strata(n):
    lam = taut_lamination(DEFAULT_C, n)
    assert len(lam) == (3**n - 1) // 2
    assert lam.counts() == [3 ** (k - 1) for k in range(1, n + 1)]
    assert all(l.height == F(1, 3**k) for l, k in zip(lam.leaves(), lam.level))


def test_taut_is_an_elamination():
    lam = taut_lamination(DEFAULT_C, 5)
    assert len(lam) == 121
    assert validate_elamination(Elamination(tuple(lam.leaves())), 3).valid


def test_base_leaf_checks():
    with pytest.raises(ValueError):
        taut_lamination(Leaf((F(0), F(1, 4)), 1), 2)
    with pytest.raises(ValueError):
        taut_lamination(Leaf((F(1, 6), F(5, 6)), F(1, 2)), 2)
    with pytest.raises(ValueError):
        taut_lamination(DEFAULT_C, 15)


def test_component_spectrum_examples():
    (only,) = component_spectrum(DEFAULT_C, 0)
    assert only.length == 1 and only.ell == 1 and only.m == 0
    assert sorted(r.length for r in component_spectrum(DEFAULT_C, 1)) == [F(1, 3), F(2, 3)]
    spec2 = component_spectrum(DEFAULT_C, 2)
    assert sorted(r.length for r in spec2) == [F(1, 9)] * 3 + [F(2, 9), F(4, 9)]
    assert sorted(r.ell for r in spec2) == [1, 1, 1, 2, 4]
    for r in spec2:
        assert sum((e - s) % 1 for s, e in r.arcs) == r.length


def test_non_power_of_two_length():
    # a hand-made leaf {0, 1/5} gives ell = 3/5
    bad = TautLamination(DEFAULT_C, 1, 30, np.array([[0, 6]], dtype=np.int64), np.array([1]))
    with pytest.raises(NonPowerOfTwoLength):
        component_spectrum(lam=bad)


def test_count_table_rows(table12):
    assert table12.rows[4] == (21, 16, 3, 0, 1)
    assert table12.rows[7] == (499, 454, 117, 23, 0, 0, 0, 1)
    assert table12[12, 0] == 119781
    assert table12[3, 9] == 0


def test_golden_file_matches_constant():
    golden = CountTable.from_csv((DATA / "n3_counts.csv").read_text())
    assert golden.rows == PUBLISHED_N3


def test_count_table_serialization(table12):
    assert CountTable.from_csv(table12.to_csv()) == table12
    assert CountTable.from_json(table12.to_json()) == table12
    assert table12.to_csv().splitlines()[0].startswith("n,2^0,2^1")


@pytest.mark.parametrize("a", [F(5, 18), F(1, 9), F(127, 2700), F(7, 30)])
def test_rotation_invariance(a):
    C = Leaf((a, a + F(1, 3)), 1)
    assert count_table(7, C).rows == PUBLISHED_N3[:8]


def test_recursion_examples():
    N = n30_recursion(12)
    assert N[4] == 21 and N[9] == 4449 == 3 * 1497 - 2 * 21 and N[12] == 119781
    assert n30_recursion(0) == [1]


def test_beta_series():
    s = beta_series(12)
    assert s.h[0] == 1
    assert all(s.h[n] == 0 for n in range(1, 13, 2))
    assert s.h[2] == (-3) * (1 - (-2))
    assert s.beta[0] == 1
    # coefficient of t^n in (beta - 1)/(3t) is N3(n, 0)
    assert s.reduced[4] == 21 and s.reduced[5] == 57
    assert list(s.reduced) == n30_recursion(11)
    with pytest.raises(ValueError):
        beta_series(0)

import math
from fractions import Fraction as F

import pytest

from shiftlocus.elamination import CriticalSet, Leaf, build_dynamical
from shiftlocus.errors import IndexOutOfRange, NonGeneric, OutOfBand, TruncationTooShallow
from shiftlocus.sausage import (
    assign_tags,
    build_sausage_tree,
    circle_quotient,
    d3_moduli_tree,
    hurwitz_profile,
    mu,
    nu,
    required_depth,
    tag_choices,
)

C2 = CriticalSet(2, (Leaf((F(1, 4), F(3, 4)), 1),))
C3 = CriticalSet(3, (Leaf((F(1, 6), F(5, 6)), 1), Leaf((F(7, 27), F(16, 27)), F(1, 4))))


def tree_for(C, levels):
    return build_sausage_tree(build_dynamical(C, depth=required_depth(C, levels)), levels)


@pytest.fixture(scope="module")
def t2():
    return tree_for(C2, 4)


@pytest.fixture(scope="module")
def t3():
    return tree_for(C3, 3)


def test_nu_examples():
    for q in (2, 3, 5):
        assert nu(0, 1, q) == 0
        assert nu(1, q, q) == pytest.approx(0, abs=1e-12)
        for h in (q**-0.4, q**0.1, q**0.3):
            assert abs(nu(1, q * h, q) - q * nu(0, h, q)) < 1e-12


def test_nu_out_of_band():
    with pytest.raises(OutOfBand):
        nu(0, 3.5, 3)
    with pytest.raises(OutOfBand):
        nu(0, -1, 2)


def test_mu_lands_in_band():
    n, w = mu(0.25, 2.2, 2)
    assert n == 1
    assert abs(w) == pytest.approx(math.exp(nu(1, 2.2, 2)))
    assert w.imag > 0 and abs(w.real) < 1e-9 * abs(w)


def test_circle_quotient_examples():
    (one,) = circle_quotient([])
    assert one.length == 1
    assert sorted(c.length for c in circle_quotient([Leaf((F(1, 6), F(5, 6)), 1)])) == [F(1, 3), F(2, 3)]
    leaves = [Leaf(t, F(1, 3)) for t in ((F(1, 6), F(5, 6)), (F(17, 18), F(1, 18)), (F(5, 18), F(7, 18)), (F(11, 18), F(13, 18)))]
    comps = circle_quotient(leaves)
    assert sorted(c.length for c in comps) == [F(1, 9)] * 3 + [F(2, 9), F(4, 9)]
    arcs = sorted(a for c in comps for a in c.arcs)
    assert len(arcs) == 8 and sum(c.length for c in comps) == 1


def test_empty_elamination_is_a_line():
    t = build_sausage_tree(build_dynamical(CriticalSet(3, ()), depth=0), 4)
    assert t.depth_profile() == [1] * 5
    assert all(v.degree == 3 for v in t.vertices)
    assert all(len(v.children) == 1 for v in t.vertices if v.depth < 4)


def test_q2_dyadic_tree(t2):
    root = t2[t2.root]
    assert root.level == 0 and root.degree == 2 and len(root.bottoms) == 2
    assert t2.depth_profile() == [1, 2, 4, 8, 16]
    for v in t2.vertices:
        if v.id != t2.root:
            assert v.degree == 1
        if v.depth < 4:
            assert len(v.children) == 2
    assert [p.kind for p in root.critical] == ["genuine", "fake"]


def test_q3_two_critical_leaves(t3):
    root = t3[t3.root]
    assert root.degree == 3
    kids = sorted((t3[c] for c in root.children), key=lambda v: -v.degree)
    assert [v.degree for v in kids] == [2, 1]
    w1 = kids[0]
    assert w1.n_marked == 4 and len(w1.children) == 4
    assert any(p.kind == "genuine" for p in w1.critical)
    assert t3.depth_profile() == [1, 2, 6, 18]


def test_tree_invariants(t2, t3):
    for t in (t2, t3):
        for k in range(t.levels + 1):
            assert sum(v.length for v in t.at_depth(k)) == 1
        for v in t.vertices:
            assert v.degree == t.q * v.length / (1 if v.image is None else t[v.image].length)
            assert len(v.children) == (len(v.bottoms) if v.depth < t.levels else 0)
            if v.parent is not None:
                assert v.id in t[v.parent].children
        # genuine critical points, counted with multiplicity, number q - 1
        genuine = sum(p.multiplicity for v in t.vertices for p in v.critical if p.kind == "genuine")
        assert genuine == t.q - 1


def test_truncation_too_shallow():
    with pytest.raises(TruncationTooShallow):
        build_sausage_tree(build_dynamical(C2, depth=1), 4)


def test_non_generic_height():
    C = CriticalSet(4, (Leaf((F(0), F(1, 4)), 2),))  # log_4 2 = 1/2
    with pytest.raises(NonGeneric):
        build_sausage_tree(build_dynamical(C, depth=1), 1)


def test_tags(t2):
    assert tag_choices(t2, t2.root) == [F(0), F(1, 2)]
    tags = assign_tags(t2)
    assert tags.tags[t2.root] == 0 and tags.options[t2.root] == 2
    for v in t2.vertices:
        if v.id != t2.root:
            assert tags.options[v.id] == 1
            assert (2 * tags.tags[v.id]) % 1 == tags.tags[v.image]
    assert assign_tags(t2) == tags


def test_tag_choices_on_degree_two_child(t3):
    w1 = max((t3[c] for c in t3[t3.root].children), key=lambda v: v.degree)
    a = assign_tags(t3, {w1.id: 0})
    b = assign_tags(t3, {w1.id: 1})
    assert a.options[w1.id] == 2 and a.tags[w1.id] != b.tags[w1.id]
    assert assign_tags(t3, {w1.id: 1}) == b
    with pytest.raises(IndexOutOfRange):
        assign_tags(t3, {w1.id: 2})
    with pytest.raises(IndexOutOfRange):
        assign_tags(t3, {t3.root: 1})


def test_hurwitz_profiles(t2, t3):
    assert hurwitz_profile(t2) == [(t2.root, 2, 1)]
    w1 = max((t3[c] for c in t3[t3.root].children), key=lambda v: v.degree)
    assert hurwitz_profile(t3) == [(t3.root, 3, 1), (w1.id, 2, 2)]
    # all critical points in the root
    allroot = tree_for(CriticalSet(3, (Leaf((F(1, 9), F(4, 9), F(7, 9)), 1),)), 2)
    assert hurwitz_profile(allroot) == [(allroot.root, 3, 1)]


def test_moduli_quadratic():
    m = d3_moduli_tree(1, levels=3)
    assert m.kind == "quadratic"
    root = m[m.root]
    assert root.degree == 2 and root.coeffs == (1, 0, 1)
    kids = [m[c] for c in root.children]
    assert sorted(round(k.attach.imag) for k in kids) == [-1, 1]
    for v in m.vertices:
        if v.depth < 3:
            assert len(v.children) == 2
    assert hurwitz_profile(m) == [(0, 2, 1)]


def test_moduli_generic_cubic():
    m = d3_moduli_tree(1, 5)
    assert m.kind == "generic"
    w1 = next(v for v in m.vertices if v.depth == 1 and v.degree == 2)
    assert w1.coeffs == (1, 0, 5)
    assert w1.n_marked == 4
    expected = sorted([1j * 2, -2j, 1j * math.sqrt(7), -1j * math.sqrt(7)], key=lambda z: z.imag)
    got = sorted((z for z, _ in w1.marked), key=lambda z: z.imag)
    assert all(abs(a - b) < 1e-9 for a, b in zip(got, expected))
    assert hurwitz_profile(m) == [(0, 3, 1), (w1.id, 2, 2)]


@pytest.mark.parametrize("d", [1, -2])
def test_moduli_degenerate(d):
    m = d3_moduli_tree(1, d)
    assert m.kind == "degenerate" and m.note
    w1 = next(v for v in m.vertices if v.depth == 1 and v.degree == 2)
    assert any(abs(z) < 1e-6 and k == 2 for z, k in w1.marked)
    child = next(m[c] for c in w1.children if abs(m[c].attach) < 1e-6)
    assert child.degree == 2


def test_moduli_rejects_zero():
    with pytest.raises(ValueError):
        d3_moduli_tree(0)

"""Classifier on invariants."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from nilrad.classifier import (
    A_I,
    A_II,
    B_A,
    B_B_K,
    B_B_L,
    B_NILPOTENT_L,
    GENERIC,
    SUBSINGULAR,
    case3_to_case2,
    classify,
    s_values,
    subsingular_groups,
)
from nilrad.invariants import PencilInvariants

F = Fraction


def inv(real=(), cplx=(), ks=(), ckd=0):
    return PencilInvariants(tuple((F(a), l) for a, l in real),
                            tuple((F(m), F(n), k) for m, n, k in cplx), tuple(ks), ckd)


def test_three_distinct_roots_einstein():
    v = classify(inv([(0, 1), (1, 1), (2, 1)]))
    assert v.is_einstein and v.case == GENERIC
    assert v.to_json() == {"is_einstein": True, "case": "Generic", "failed_condition": None}


def test_generic_failures():
    assert classify(inv([(0, 2), (1, 1), (2, 1)])).failed_condition == A_I
    assert classify(inv([(0, 1)], [(0, 1, 2)])).failed_condition == A_I
    v = classify(inv([(0, 1), (0, 1), (0, 1), (1, 1), (2, 1)]))
    assert v.failed_condition == A_II
    assert v.witness_hint == {"root": 0, "multiplicity": 3}


def test_multiplicity_bound_is_strict():
    # u = 4, m = 2 = u/2 fails; a complex pair lifts the bound
    assert not classify(inv([(0, 1), (0, 1), (1, 1), (2, 1)])).is_einstein
    assert classify(inv([(0, 1), (0, 1), (1, 1), (2, 1)], [(0, 1, 1)])).is_einstein


def test_subsingular_s_values():
    S1, S2 = s_values((2,), (), (1,))
    assert (S1, S2) == (2, 5)
    v = classify(inv([(0, 2)], ks=[1]))
    assert v.case == SUBSINGULAR and v.is_einstein and v.S1 == 2 and v.S2 == 5


def test_subsingular_failures():
    # group 2 has a power above one
    assert classify(inv([(0, 3), (1, 2)])).failed_condition == B_NILPOTENT_L
    # group 1 = (2,), group 2 = (1, 1, 1): S1 = -1
    v = classify(inv([(0, 2), (1, 1), (1, 1), (1, 1)]))
    assert v.S1 == -1 and v.failed_condition == B_A
    # S1 = 4, S2 = 17, 2 k^2 = 18 >= 2 S2 / S1
    v = classify(inv([(0, 1), (0, 1), (0, 1), (0, 1)], ks=[3]))
    assert (v.S1, v.S2) == (4, 17) and v.failed_condition == B_B_K
    assert classify(inv([(0, 5)])).is_einstein
    v = classify(inv([(0, 3), (0, 1), (0, 1)]))
    assert (v.S1, v.S2) == (5, F(23, 2)) and v.failed_condition == B_B_L


def test_heisenberg_like_specs():
    # L1/R1: S1 = 0, no group-1 powers -> Einstein
    assert classify(inv(ks=[1])).is_einstein
    # x^1 y^1 twice each: S1 = 0 with simple powers
    assert classify(inv([(0, 1), (1, 1)])).is_einstein


def test_group_ordering():
    g1, g2, roots = subsingular_groups(inv([(1, 1), (0, 2), (0, 1)]))
    assert g1 == (2, 1) and g2 == (1,) and roots == (0, 1)
    g1, g2, roots = subsingular_groups(inv([(3, 1), (1, 1)]))
    assert roots == (1, 3)


def test_case3_reduction():
    c3 = inv(cplx=[(1, 2, 1), (1, 2, 1)], ks=[1])
    c2 = case3_to_case2(c3)
    assert sorted(c2.real_divisors) == [(0, 1), (0, 1), (1, 1), (1, 1)]
    assert c2.minimal_indices == (1,)
    assert classify(c3).is_einstein == classify(c2).is_einstein
    c3b = inv(cplx=[(1, 2, 2)])
    assert classify(c3b).is_einstein == classify(case3_to_case2(c3b)).is_einstein is False


@given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.lists(st.integers(1, 3), max_size=3))
def test_case3_agrees_with_complexification(ns, ks):
    c3 = inv(cplx=[(0, 1, n) for n in ns], ks=ks)
    assert classify(c3).is_einstein == classify(case3_to_case2(c3)).is_einstein


@given(st.lists(st.integers(-2, 2), min_size=3, max_size=8))
def test_generic_simple_roots_rule(roots):
    v = inv([(a, 1) for a in roots])
    if len(set(roots)) < 3:
        return
    mult = max(roots.count(a) for a in set(roots))
    assert classify(v).is_einstein == (mult < len(roots) / 2)

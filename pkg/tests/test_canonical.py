"""Canonical blocks, spec validation and synthesis."""

from fractions import Fraction

import numpy as np
import pytest

from nilrad.canonical import (
    CanonicalSpec,
    Ic,
    L,
    N,
    R,
    apply_equivalence,
    random_spec,
    random_transform,
    sk,
    subsingular_pencil,
    synthesize,
)
from nilrad.errors import SpecInvalid
from nilrad.invariants import CASE1, CASE2, CASE3, compute_invariants, independent

F = Fraction


def test_block_shapes_and_values():
    assert L(2).shape == (2, 3) and R(2).shape == (2, 3)
    assert list(L(2)[0]) == [1, 0, 0] and list(R(2)[0]) == [0, 1, 0]
    assert all(v == 0 for v in (N(3) @ N(3) @ N(3)).flat)
    Icm = Ic(4)
    assert all(v == (-1 if i == j else 0) for (i, j), v in np.ndenumerate(Icm @ Icm))
    S = sk(L(1))
    assert S.shape == (3, 3)
    assert all(a == -b for a, b in zip(S.flat, S.T.flat))


@pytest.mark.parametrize("kwargs", [
    {},
    {"real_divisors": [(0, 0)]},
    {"minimal_indices": [0]},
    {"complex_divisors": [(0, 0, 1)]},
    {"minimal_indices": [1], "padding": -1},
])
def test_invalid_specs(kwargs):
    with pytest.raises(SpecInvalid):
        CanonicalSpec(**kwargs)


def test_single_simple_divisor_is_dependent():
    # x * sk(I_1) and y * 0 -> J2 = 0, not a pencil of rank two
    with pytest.raises(SpecInvalid):
        synthesize(CanonicalSpec([(F(0), 1)]))


@pytest.mark.parametrize("kind", [CASE1, CASE2, CASE3])
def test_random_specs_synthesize(kind):
    rng = np.random.default_rng(7)
    for _ in range(10):
        spec = random_spec(rng, 10, kind=kind)
        assert spec.case_tag == kind
        p = synthesize(spec)
        assert p.q == spec.q
        assert independent(p.J1, p.J2)


def test_case2_roots_are_placed():
    spec = CanonicalSpec([(F(2), 2), (F(-1), 1)], [], [1])
    inv = compute_invariants(synthesize(spec))
    from nilrad.invariants import transform_invariants
    W = inv.variable_change
    det = W[0][0] * W[1][1] - W[0][1] * W[1][0]
    back = ((W[1][1] / det, -W[0][1] / det), (-W[1][0] / det, W[0][0] / det))
    assert transform_invariants(inv, back).same_invariants(spec.invariants())


def test_subsingular_layout():
    p = subsingular_pencil((2,), (1,), (1,))
    assert p.q == 4 + 2 + 3


def test_spec_json_roundtrip():
    spec = CanonicalSpec([(F(1, 2), 1)], [(F(1), F(3), 2)], [1, 2], 1)
    again = CanonicalSpec.from_json(spec.to_json())
    assert again == spec


def test_equivalence_preserves_skewness():
    p = synthesize(CanonicalSpec([(F(0), 1), (F(1), 1), (F(3), 1)]))
    P, V = random_transform(p.q, 3)
    p2 = apply_equivalence(p, P, V)
    assert all(a == -b for a, b in zip(p2.J1.flat, p2.J1.T.flat))
    assert all(a == -b for a, b in zip(p2.J2.flat, p2.J2.T.flat))

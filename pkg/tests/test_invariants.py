"""Pencil invariants.

Oracles: elementary divisors from gcds of minors (invariant factors split
into prime powers), minimal indices from the dimensions of polynomial kernel
solutions, and the Mobius action of the recorded variable change.
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nilrad.arith import BinaryForm, root_data
from nilrad.canonical import (
    CanonicalSpec,
    apply_equivalence,
    random_spec,
    random_transform,
    synthesize,
)
from nilrad.errors import Degenerate, Unsupported
from nilrad.invariants import (
    CASE1,
    CASE2,
    CASE3,
    PencilInvariants,
    SkewPencil,
    case_of,
    compute_invariants,
    matmul2,
    minimal_indices,
    mobius_complex,
    mobius_real,
    split_common_kernel,
    transform_invariants,
)
from nilrad.linalg import F1, FormMatrix, generic_rank, minors_gcd

F = Fraction


def divisors_from_minors(p: SkewPencil):
    """Reduced elementary divisors via D_r = gcd of r x r minors.

    Invariant factors are D_r / D_(r-1); each prime-power part appears twice
    for a skew pencil, so the multiset is halved.
    """
    J1, J2, _ = split_common_kernel(p)
    M = FormMatrix.pencil(J1, J2)
    r = generic_rank(M)
    prev = BinaryForm.one()
    found = {}
    for k in range(1, r + 1):
        D = minors_gcd(M, k)
        inv_factor, rem = D.divmod(prev)
        assert rem.is_zero()
        prev = D
        if inv_factor.degree == 0:
            continue
        for tag, m in root_data(inv_factor):
            found[(tag, m)] = found.get((tag, m), 0) + 1
    real, cplx = [], []
    for (tag, m), count in found.items():
        assert count % 2 == 0
        for _ in range(count // 2):
            if tag[0] == "real":
                real.append((tag[1], m))
            elif tag[0] == "complex":
                cplx.append((tag[1], tag[2], m))
            else:
                real.append(("inf", m))
    return sorted(real, key=str), sorted(cplx, key=str)


def small_specs():
    @st.composite
    def build(draw):
        rng = np.random.default_rng(draw(st.integers(0, 10 ** 6)))
        kind = draw(st.sampled_from([CASE1, CASE2, CASE3]))
        return random_spec(rng, q_max=7, kind=kind), draw(st.integers(0, 10 ** 6))
    return build()


def test_identity_block_pencil():
    spec = CanonicalSpec([(F(0), 1), (F(1), 1), (F(2), 1)])
    inv = compute_invariants(synthesize(spec))
    assert inv.case_tag == CASE1
    assert inv.same_invariants(spec.invariants())
    assert inv.q == 6


def test_l1_r1_pencil():
    spec = CanonicalSpec([], [], [1])
    inv = compute_invariants(synthesize(spec))
    assert inv.minimal_indices == (1,)
    assert inv.real_divisors == () and inv.case_tag == CASE2


def test_case_tags():
    assert case_of([(F(0), 1), (F(1), 2)], []) == CASE2
    assert case_of([(F(0), 1), (F(1), 1), (F(2), 1)], []) == CASE1
    assert case_of([], [(F(0), F(1), 2)]) == CASE3
    assert case_of([], [(F(0), F(1), 1), (F(1), F(1), 1)]) == CASE1
    assert case_of([(F(0), 1)], [(F(0), F(1), 1)]) == CASE1


def test_mobius_composition():
    W1 = ((F(1), F(2)), (F(0), F(1)))
    W2 = ((F(2), F(0)), (F(1), F(1)))
    a = F(3, 5)
    assert mobius_real(W2, mobius_real(W1, a)) == mobius_real(matmul2(W1, W2), a)
    mu, nu = mobius_complex(W1, F(1), F(2))
    assert mobius_complex(W2, mu, nu) == mobius_complex(matmul2(W1, W2), F(1), F(2))


@given(small_specs())
@settings(max_examples=20)
def test_roundtrip_under_equivalence(data):
    spec, seed = data
    p = synthesize(spec)
    P, V = random_transform(p.q, seed)
    inv = compute_invariants(apply_equivalence(p, P, V))
    expected = transform_invariants(spec.invariants(), matmul2(V, inv.variable_change))
    expected = PencilInvariants(expected.real_divisors, expected.complex_divisors,
                                expected.minimal_indices, spec.padding)
    assert inv.same_invariants(expected)
    assert inv.case_tag == spec.case_tag
    assert inv.q == p.q


@given(small_specs())
@settings(max_examples=15)
def test_divisors_match_minors_oracle(data):
    spec, seed = data
    p = synthesize(spec)
    P, V = random_transform(p.q, seed)
    p2 = apply_equivalence(p, P, V)
    inv = compute_invariants(p2)
    shifted = apply_equivalence(p2, np.eye(p2.q, dtype=int).astype(object) * F1, inv.variable_change)
    real, cplx = divisors_from_minors(shifted)
    assert sorted(inv.real_divisors, key=str) == real
    assert sorted(((m, n * n, k) for m, n, k in inv.complex_divisors), key=str) == cplx


@given(small_specs())
@settings(max_examples=15)
def test_minimal_indices_match_kernel_dimensions(data):
    spec, seed = data
    p = synthesize(spec)
    P, V = random_transform(p.q, seed)
    p2 = apply_equivalence(p, P, V)
    ks, ckd = minimal_indices(p2)
    inv = compute_invariants(p2)
    assert ks == inv.minimal_indices
    assert ckd == inv.common_kernel_dim == spec.padding


@given(small_specs())
@settings(max_examples=15)
def test_dimension_identity(data):
    spec, _ = data
    inv = compute_invariants(synthesize(spec))
    total = (2 * sum(l for _, l in inv.real_divisors) + 4 * sum(n for *_, n in inv.complex_divisors)
             + sum(2 * k + 1 for k in inv.minimal_indices) + inv.common_kernel_dim)
    assert total == spec.q


def test_numeric_mode_agrees():
    spec = CanonicalSpec([(F(1, 2), 1), (F(-1), 2)], [(F(1), F(2), 1)], [2])
    p = synthesize(spec)
    ex = compute_invariants(p)
    nu = compute_invariants(p, mode="numeric", tol=1e-9)
    assert nu.tol is not None
    for (a, l), (b, m) in zip(sorted(ex.real_divisors), sorted(nu.real_divisors)):
        assert l == m and float(a) == pytest.approx(b, abs=1e-7)
    (mu, n_, k), = ex.complex_divisors
    (mu2, n2, k2), = nu.complex_divisors
    assert k == k2 and float(mu) == pytest.approx(mu2, abs=1e-7) and float(n_) == pytest.approx(n2, abs=1e-7)
    assert nu.minimal_indices == ex.minimal_indices


def test_irrational_roots_raise_unsupported():
    J1 = np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=object) * F1
    J2 = np.array([[0, 0, 2, 0], [0, 0, 0, 1], [-2, 0, 0, 0], [0, -1, 0, 0]], dtype=object) * F1
    p = SkewPencil(J1, J2)
    with pytest.raises(Unsupported):
        compute_invariants(p)
    inv = compute_invariants(p, mode="numeric")
    assert sorted(abs(a) for a, _ in inv.real_divisors) == pytest.approx([2 ** 0.5, 2 ** 0.5])


def test_dependent_matrices_rejected():
    J1 = np.array([[0, 1], [-1, 0]], dtype=object) * F1
    with pytest.raises(Degenerate):
        SkewPencil(J1, 2 * J1)


def test_json_roundtrip():
    inv = compute_invariants(synthesize(CanonicalSpec([(F(1, 3), 1)], [(F(0), F(2), 1)], [1], 1)))
    again = PencilInvariants.from_json(inv.to_json())
    assert again.same_invariants(inv) and again.case_tag == inv.case_tag
    p = synthesize(CanonicalSpec([(F(1), 1), (F(2), 1), (F(3), 1)]))
    p2 = SkewPencil.from_json(p.to_json())
    assert all(a == b for a, b in zip(p.J1.flat, p2.J1.flat))

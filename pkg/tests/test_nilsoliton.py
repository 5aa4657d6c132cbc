"""Nilsoliton constructions.

Oracles: scipy's linprog for the max-min program over alpha, the analytic
critical point for three real roots, the representation identities behind
the block rescaling, and the residual of the Ricci equation itself.
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from nilrad.algebra import from_pencil
from nilrad.canonical import L, R, random_equivalence, subsingular_pencil
from nilrad.errors import ConditionHolds, NotNice, WrongCase
from nilrad.invariants import PencilInvariants, SkewPencil, compute_invariants
from nilrad.nilsoliton import (
    NoMinimum,
    P_k,
    SL2State,
    _max_min_alpha,
    alpha_closed_form_case2,
    assemble_case1_metric,
    build_nice_Y,
    case2_nice_algebra,
    construct_dual_heisenberg,
    degeneration_witness,
    dual_heisenberg_constants,
    geodesic_log_F,
    nice_basis_certificate,
    sl2_minimize,
    solve_alpha,
    witness_curve,
)

F = Fraction


def inv(real=(), cplx=(), ks=(), ckd=0):
    return PencilInvariants(tuple((F(a), l) for a, l in real),
                            tuple((F(m), F(n), k) for m, n, k in cplx), tuple(ks), ckd)


def sl2(a, b, c):
    h = np.array([[a, b], [c, (1 + b * c) / a]])
    return h


# ---------------------------------------------------------------------------
# nice bases

def test_l1_r1_nice_basis():
    n = from_pencil(subsingular_pencil((), (), (1,)))
    nice = build_nice_Y(n)
    assert nice.Y.tolist() == [[1, 1, 0, -1, 0], [1, 0, 1, 0, -1]]
    sol, cert = nice_basis_certificate(n)
    assert sol.alpha == (F(1, 4), F(1, 4)) and sol.unique and sol.positive
    assert cert.exact and cert.ricci_residual == 0 and cert.derivation_residual == 0


def test_not_nice_detected():
    n = from_pencil(random_equivalence(subsingular_pencil((1,), (1,), (1,)), 5))
    with pytest.raises(NotNice):
        build_nice_Y(n)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=20)
def test_max_min_matches_linprog(seed):
    rng = np.random.default_rng(seed)
    m, r = int(rng.integers(2, 6)), int(rng.integers(1, 3))
    K = np.empty((m, r), dtype=object)
    for (i, j), _ in np.ndenumerate(K):
        K[i, j] = F(int(rng.integers(-3, 4)))
    alpha0 = [F(int(rng.integers(-4, 5)), int(rng.integers(1, 3))) for _ in range(m)]
    best, alpha = _max_min_alpha(alpha0, K)
    assert min(alpha) == best
    # linprog: maximize s subject to s <= alpha0 + K t and the same cap s <= 1
    Kf = np.array(K, dtype=float)
    c = np.zeros(r + 1)
    c[-1] = -1
    A = np.hstack([-Kf, np.ones((m, 1))])
    b = np.array([float(a) for a in alpha0])
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * r + [(None, 1)])
    assert res.status == 0
    assert min(float(best), 1.0) == pytest.approx(-res.fun, abs=1e-9)


@pytest.mark.parametrize("g1,g2,ks", [
    ((1,), (1,), (1,)),
    ((2,), (), (1,)),
    ((2, 1), (1,), ()),
    ((1, 1), (1, 1), (2,)),
    ((3,), (1,), (1, 1)),
])
def test_closed_form_matches_solve(g1, g2, ks):
    v = inv([(0, l) for l in g1] + [(1, l) for l in g2], ks=ks)
    closed = alpha_closed_form_case2(v)
    solved = solve_alpha(build_nice_Y(case2_nice_algebra(v)))
    assert closed.alpha == solved.alpha
    assert closed.nu1 > 0 and closed.nu2 > 0 and closed.delta > 0


def test_positive_alpha_certifies():
    n = from_pencil(subsingular_pencil((2,), (1,), (1,)))
    sol, cert = nice_basis_certificate(n)
    assert sol.positive and cert.certified(1e-12)


def test_nonpositive_alpha_has_no_metric():
    sol = solve_alpha(build_nice_Y(from_pencil(subsingular_pencil((5,), (), (5,)))))
    assert not sol.positive and sol.metric is None


# ---------------------------------------------------------------------------
# SL(2) route

def test_three_root_benchmark():
    v = inv([(0, 1), (1, 1), (-1, 1)])
    st_ = sl2_minimize(v)
    assert isinstance(st_, SL2State) and st_.grad_norm <= 1e-10
    assert np.allclose(st_.S, np.diag([3 ** -0.5, 3 ** 0.5]), atol=1e-8)
    cert = assemble_case1_metric(v, st_)
    assert cert.ricci_residual <= 1e-8 and cert.eigenvalue_type == ((1, 2), (6, 2))


@given(st.floats(0.5, 2), st.floats(-1, 1), st.floats(-1, 1))
def test_representation_identity(a, b, c):
    h = sl2(a, b, c)
    (h11, h12), (h21, h22) = h
    for k in (1, 2, 3):
        left = np.linalg.inv(P_k(k, h))  # P_k(h^-1)
        right = P_k(k + 1, h)
        Lf, Rf = np.array(L(k), dtype=float), np.array(R(k), dtype=float)
        assert np.allclose(left @ (h11 * Lf + h12 * Rf) @ right, Lf, atol=1e-9)
        assert np.allclose(left @ (h21 * Lf + h22 * Rf) @ right, Rf, atol=1e-9)


@given(st.lists(st.integers(-3, 3), min_size=3, max_size=6, unique=True),
       st.floats(0.5, 2), st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=15)
def test_objective_geodesically_convex(roots, a, b, c):
    v = inv([(r, 1) for r in roots])
    t = np.linspace(-4, 4, 41)
    f = geodesic_log_F(v, sl2(a, b, c), t)
    assert np.all(f[:-2] - 2 * f[1:-1] + f[2:] >= -1e-9)


@pytest.mark.parametrize("real,cplx,ks", [
    ([(0, 1), (2, 1), (5, 1), (-3, 1)], [], [1]),
    ([(1, 1)], [(1, 2, 1)], [2, 1]),
    ([], [(0, 1, 1), (1, 3, 1)], []),
    ([(0, 1), (1, 1), (2, 1)], [], [1, 2, 3]),
    ([], [(0, 1, 1)], [1]),
])
def test_generic_pipeline(real, cplx, ks):
    v = inv(real, cplx, ks)
    st_ = sl2_minimize(v)
    assert isinstance(st_, SL2State) and st_.grad_norm <= 1e-10
    cert = assemble_case1_metric(v, st_)
    assert cert.certified(1e-8)
    if not ks:
        assert cert.eigenvalue_type == ((1, 2), (v.q, 2))


def test_common_kernel_is_carried():
    v = inv([(0, 1), (1, 1), (-1, 1)], ks=[1], ckd=2)
    cert = assemble_case1_metric(v, sl2_minimize(v))
    assert cert.certified(1e-8)


@pytest.mark.parametrize("real", [
    [(0, 1), (0, 1), (1, 1), (2, 1)],
    [(0, 1), (0, 1), (0, 1), (1, 1), (2, 1)],
])
def test_no_minimum_when_bound_fails(real):
    assert isinstance(sl2_minimize(inv(real)), NoMinimum)


def test_optimizer_needs_generic_case():
    with pytest.raises(WrongCase):
        sl2_minimize(inv(ks=[1]))


# ---------------------------------------------------------------------------
# degeneration witness

def test_witness_limit_and_curve():
    v = inv([(0, 1), (0, 1), (0, 1), (1, 1), (2, 1)])
    w = degeneration_witness(v)
    assert w.root == 0 and w.multiplicity == 3
    assert w.limit_invariants.key() != v.key()
    assert compute_invariants(SkewPencil(w.J1, w.J2)).q == v.q
    for t in (10.0, 30.0):
        c = witness_curve(v, t)
        assert c["det_product"] == pytest.approx(1.0)
    gap = [max(np.abs(witness_curve(v, t)["J"][0] - np.array(w.J1, dtype=float)).max(),
               np.abs(witness_curve(v, t)["J"][1] - np.array(w.J2, dtype=float)).max())
           for t in (5.0, 20.0, 40.0)]
    assert gap[0] > gap[1] > gap[2] and gap[2] < 1e-6


def test_witness_with_complex_pair_and_singular_block():
    v = inv([(1, 1), (1, 1), (1, 1), (0, 1)], [(0, 1, 1)], [1])
    w = degeneration_witness(v)
    assert w.limit_invariants.key() != v.key()
    # the singular blocks carry h(t) entries of size exp(t/2), so float
    # cancellation limits how far out the curve can be followed
    gaps = []
    for t in (5.0, 10.0, 20.0):
        c = witness_curve(v, t)
        gaps.append(max(np.abs(c["J"][a] - np.array(M, dtype=float)).max() for a, M in enumerate((w.J1, w.J2))))
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-3


def test_witness_refused_when_condition_holds():
    with pytest.raises(ConditionHolds):
        degeneration_witness(inv([(0, 1), (1, 1), (2, 1)]))


# ---------------------------------------------------------------------------
# type (D - 1, q)

@pytest.mark.parametrize("q,d", [(3, 1), (4, 2), (5, 1), (6, 3), (7, 2)])
def test_dual_heisenberg(q, d):
    res = construct_dual_heisenberg(q, d)
    assert res.algebra.p == q * (q - 1) // 2 - 1
    assert res.r_squared == (F(d * (q - 1)), F(q * d - d - 1), F(q * d - d - 2))
    assert res.certificate.ricci_residual <= 1e-10
    assert res.certificate.derivation_residual <= 1e-10
    l1, l2, l3, l4, l5 = res.lambdas
    assert 2 * l1 == l3 and l1 + l2 == l4
    if q - 2 * d >= 2:
        assert 2 * l2 == l5


def test_dual_heisenberg_constant_c():
    _, c, _ = dual_heisenberg_constants(5, 2)
    assert c == -F((5 + 50 - 15) * 2 + 2 - 20, 4)

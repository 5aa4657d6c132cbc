"""Two-step algebras, derivations, Ricci operators and nilsoliton residuals.

Oracles: the Ricci formula for nilpotent metric Lie algebras evaluated on
full structure constants in a symmetric-square-root orthonormal frame, and
derivations from sympy on the derivation equations written with full
structure constants.
"""

from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from nilrad.algebra import (
    MetricData,
    TwoStepAlgebra,
    derivation_basis,
    dualize,
    free_two_step,
    from_pencil,
    heisenberg,
    is_derivation,
    nilsoliton_residual,
    orthonormal_frame,
    q_inner,
    ricci,
    ricci_exact,
)
from nilrad.canonical import CanonicalSpec, random_spec, subsingular_pencil, synthesize
from nilrad.errors import FullType, MetricInvalid
from nilrad.linalg import rank

F = Fraction


def structure_constants(n: TwoStepAlgebra) -> np.ndarray:
    """c[i, j, k] with [E_i, E_j] = sum_k c[i, j, k] E_k on (X, Z)."""
    q, d = n.q, n.dim
    c = np.zeros((d, d, d), dtype=object)
    c[...] = F(0)
    for a, M in enumerate(n.J):
        for i in range(q):
            for j in range(q):
                c[i, j, q + a] = F(M[i, j])
    return c


def ricci_oracle(n: TwoStepAlgebra, G: np.ndarray) -> np.ndarray:
    """Ricci operator in the (X, Z) basis via a symmetric square-root frame."""
    w, U = np.linalg.eigh(G)
    T = (U / np.sqrt(w)) @ U.T  # columns: orthonormal frame in (X, Z)
    Tinv = np.linalg.inv(T)
    c = structure_constants(n).astype(float)
    # structure constants in the frame
    ce = np.einsum("ia,jb,ijk,ck->abc", T, T, c, Tinv)
    d = n.dim
    Ric = np.zeros((d, d))
    for x in range(d):
        for y in range(d):
            Ric[x, y] = (-0.5 * np.sum(ce[x, :, :] * ce[y, :, :])
                         + 0.25 * np.sum(ce[:, :, x] * ce[:, :, y]))
    return T @ Ric @ Tinv


def derivation_dim_oracle(n: TwoStepAlgebra) -> int:
    c = structure_constants(n)
    d = n.dim
    syms = sympy.symbols(f"d0:{d * d}")
    D = sympy.Matrix(d, d, syms)  # D[k, i]: coefficient of E_k in D(E_i)
    eqs = []
    for i in range(d):
        for j in range(i + 1, d):
            for k in range(d):
                lhs = sum(sympy.Rational(c[i, j, m].numerator, c[i, j, m].denominator) * D[k, m]
                          for m in range(d) if c[i, j, m] != 0)
                rhs = sum(D[m, i] * sympy.Rational(c[m, j, k].numerator, c[m, j, k].denominator)
                          for m in range(d) if c[m, j, k] != 0)
                rhs += sum(D[m, j] * sympy.Rational(c[i, m, k].numerator, c[i, m, k].denominator)
                           for m in range(d) if c[i, m, k] != 0)
                e = sympy.expand(lhs - rhs)
                if e != 0:
                    eqs.append(e)
    if not eqs:
        return d * d
    A, _ = sympy.linear_eq_to_matrix(eqs, syms)
    return d * d - A.rank()


def test_heisenberg_certificate():
    n = heisenberg()
    for exact in (True, False):
        cert = nilsoliton_residual(n, MetricData.identity(3), exact=exact)
        assert float(cert.C) == pytest.approx(-1.5)
        assert np.allclose(np.array(cert.Phi, dtype=float), np.diag([1, 1, 2]))
        assert cert.ricci_residual == pytest.approx(0, abs=1e-14)
        assert cert.certified()
    assert nilsoliton_residual(n, MetricData.identity(3)).exact


def test_l1_r1_ricci():
    n = from_pencil(subsingular_pencil((), (), (1,)))
    R = ricci(n, MetricData.identity(5))
    assert np.allclose(np.diag(R.ric_b), [-1, -0.5, -0.5])
    assert np.allclose(R.ric_m, 0.5 * np.eye(2))


@given(st.integers(0, 10 ** 6))
@settings(max_examples=10)
def test_ricci_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, 6)
    n = from_pencil(synthesize(spec))
    d = n.dim
    Ab = rng.normal(size=(n.q, n.q))
    Am = rng.normal(size=(2, 2))
    G = np.zeros((d, d))
    G[:n.q, :n.q] = Ab @ Ab.T + n.q * np.eye(n.q)
    G[n.q:, n.q:] = Am @ Am.T + np.eye(2)
    g = MetricData(full=G)
    _, S = orthonormal_frame(n, g)
    R = S @ ricci(n, g).operator() @ np.linalg.inv(S)
    assert np.allclose(R, ricci_oracle(n, G), atol=1e-9)


def test_exact_ricci_matches_float():
    n = from_pencil(synthesize(CanonicalSpec([(F(0), 1), (F(1), 1), (F(2), 1)], [], [1])))
    diag = tuple(F(i % 3 + 1, 2) for i in range(n.dim))
    g = MetricData(diagonal=diag)
    exact = np.array(ricci_exact(n, g), dtype=float)
    assert np.allclose(exact, ricci_oracle(n, g.gram()), atol=1e-12)
    c1 = nilsoliton_residual(n, g, exact=True)
    c2 = nilsoliton_residual(n, g, exact=False)
    assert float(c1.C) == pytest.approx(c2.C)
    assert c1.ricci_residual == pytest.approx(c2.ricci_residual, rel=1e-8)


@pytest.mark.parametrize("spec", [
    CanonicalSpec([], [], [1]),
    CanonicalSpec([(F(0), 1), (F(1), 1), (F(2), 1)]),
    CanonicalSpec([(F(0), 2)], [], [1]),
    CanonicalSpec([], [(F(0), F(1), 1)]),
])
def test_derivation_dimension_matches_oracle(spec):
    n = from_pencil(synthesize(spec))
    basis = derivation_basis(n, exact=True)
    assert len(basis) == derivation_dim_oracle(n)
    assert all(is_derivation(n, D) for D in basis)
    assert len(derivation_basis(n, exact=False)) == len(basis)


def test_l1_r1_derivation_dimension():
    n = from_pencil(subsingular_pencil((), (), (1,)))
    assert len(derivation_basis(n)) == 13


def test_dualize_is_orthogonal_complement():
    n = from_pencil(synthesize(CanonicalSpec([(F(0), 1), (F(1), 1)], [], [1])))
    dual = dualize(n)
    assert dual.p == n.q * (n.q - 1) // 2 - 2
    for A in n.J:
        for K in dual.J:
            assert q_inner(A, K) == 0
    back = dualize(dual)
    stack = np.empty((4, n.q * n.q), dtype=object)
    for i, M in enumerate(list(n.J) + list(back.J)):
        stack[i] = M.ravel()
    assert rank(stack) == 2


def test_free_algebra_has_no_dual():
    with pytest.raises(FullType):
        dualize(free_two_step(3))


def test_metric_validation():
    with pytest.raises(MetricInvalid):
        MetricData(diagonal=(F(1), F(0)))
    with pytest.raises(MetricInvalid):
        MetricData(full=np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(MetricInvalid):
        nilsoliton_residual(heisenberg(), MetricData.identity(4))


def test_algebra_json_roundtrip():
    n = free_two_step(3, 1)
    again = TwoStepAlgebra.from_json(n.to_json())
    assert again.q == 4 and again.p == 3

"""Two-step nilpotent Lie algebras, their derivations, Ricci operators and duals.

An algebra of type (p, q) is stored as p skew q x q matrices J_alpha with
[X_i, X_j] = sum_alpha (J_alpha)_ij Z_alpha. Endomorphisms act on column
vectors in the basis (X_1..X_q, Z_1..Z_p), so a derivation has the block
shape [[A1, 0], [U, M]] with J_a A1 + A1^t J_a = sum_b M_ab J_b.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import is_exact
from .errors import Degenerate, FullType, MetricInvalid
from .invariants import SkewPencil
from .linalg import (
    F0,
    F1,
    identity,
    matrix_from_json,
    matrix_to_json,
    nullspace_sparse,
    rank,
    solve,
    to_float,
    zeros,
)

DERIVATION_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class TwoStepAlgebra:
    J: tuple
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "J", tuple(self.J))
        if not self.J:
            raise Degenerate("at least one bracket matrix is required")
        q = self.J[0].shape[0]
        for M in self.J:
            if M.shape != (q, q):
                raise ValueError("bracket matrices must all be q x q")
        if not self.check:
            return
        for M in self.J:
            if any(M[i, j] != -M[j, i] for i in range(q) for j in range(i, q)):
                raise ValueError("bracket matrices must be skew-symmetric")
        if _span_rank(self.J) != len(self.J):
            raise Degenerate("bracket matrices are linearly dependent")

    @property
    def q(self) -> int:
        return self.J[0].shape[0]

    @property
    def p(self) -> int:
        return len(self.J)

    @property
    def dim(self) -> int:
        return self.p + self.q

    @property
    def exact(self) -> bool:
        return all(M.dtype == object for M in self.J)

    def floats(self) -> list[np.ndarray]:
        return [to_float(M) for M in self.J]

    def bracket(self, i: int, j: int) -> list:
        """Coordinates of [X_i, X_j] in the basis Z_1..Z_p."""
        return [M[i, j] for M in self.J]

    def to_json(self) -> dict:
        return {"q": self.q, "p": self.p, "matrices": [matrix_to_json(M) for M in self.J]}

    @classmethod
    def from_json(cls, data: dict) -> "TwoStepAlgebra":
        mats = [matrix_from_json(M) for M in data["matrices"]]
        alg = cls(tuple(mats))
        if "q" in data and data["q"] != alg.q or "p" in data and data["p"] != alg.p:
            raise ValueError("declared q, p do not match the matrices")
        return alg


def _span_rank(mats) -> int:
    if all(M.dtype == object for M in mats):
        stack = np.empty((len(mats), mats[0].size), dtype=object)
        for k, M in enumerate(mats):
            stack[k] = M.ravel()
        return rank(stack)
    return int(np.linalg.matrix_rank(np.array([np.ravel(to_float(M)) for M in mats])))


def from_pencil(p: SkewPencil) -> TwoStepAlgebra:
    return TwoStepAlgebra((p.J1, p.J2))


def from_tuple(mats) -> TwoStepAlgebra:
    return TwoStepAlgebra(tuple(mats))


def heisenberg() -> TwoStepAlgebra:
    J = zeros(2)
    J[0, 1], J[1, 0] = F1, -F1
    return TwoStepAlgebra((J,))


# ---------------------------------------------------------------------------
# derivations

def _derivation_rows(n: TwoStepAlgebra) -> list[dict]:
    """Sparse linear equations for (A1, M): unknown A1[k, l] has index
    k*q + l and M[a, b] has index q*q + a*p + b."""
    q, p = n.q, n.p
    base = q * q
    rows = []
    for a, Ja in enumerate(n.J):
        for i in range(q):
            for j in range(i + 1, q):
                row: dict = {}
                # (Ja A1)_ij + (A1^t Ja)_ij
                for k in range(q):
                    if Ja[i, k] != 0:
                        row[k * q + j] = row.get(k * q + j, F0) + Ja[i, k]
                    if Ja[k, j] != 0:
                        row[k * q + i] = row.get(k * q + i, F0) + Ja[k, j]
                for b, Jb in enumerate(n.J):
                    if Jb[i, j] != 0:
                        row[base + a * p + b] = -Jb[i, j]
                row = {c: v for c, v in row.items() if v != 0}
                if row:
                    rows.append(row)
    return rows


def _assemble(q: int, p: int, vec, exact: bool) -> np.ndarray:
    n = q + p
    out = zeros(n) if exact else np.zeros((n, n))
    for idx, v in (vec.items() if isinstance(vec, dict) else enumerate(vec)):
        if idx < q * q:
            out[idx // q, idx % q] = v
        else:
            r = idx - q * q
            out[q + r // p, q + r % p] = v
    return out


def u_blocks(n: TwoStepAlgebra, exact: bool = True) -> list[np.ndarray]:
    out = []
    for a in range(n.p):
        for i in range(n.q):
            E = zeros(n.dim) if exact else np.zeros((n.dim, n.dim))
            E[n.q + a, i] = 1
            out.append(E)
    return out


def block_derivations(n: TwoStepAlgebra) -> list[np.ndarray]:
    """Exact basis of the derivations of the form A1 ⊕ M (no U-block)."""
    q, p = n.q, n.p
    basis = nullspace_sparse(_derivation_rows(n), q * q + p * p)
    return [_assemble(q, p, vec, True) for vec in basis]


def block_derivations_float(n: TwoStepAlgebra, rtol: float = DERIVATION_RTOL) -> list[np.ndarray]:
    q, p = n.q, n.p
    ncols = q * q + p * p
    rows = _derivation_rows(n) if n.exact else _derivation_rows_float(n)
    A = np.zeros((len(rows), ncols))
    for r, row in enumerate(rows):
        for c, v in row.items():
            A[r, c] = float(v)
    if A.shape[0] == 0:
        null = np.eye(ncols)
    else:
        _, s, vt = np.linalg.svd(A)
        cutoff = rtol * (s[0] if s.size else 1.0)
        r = int(np.sum(s > cutoff))
        null = vt[r:].T
    return [_assemble(q, p, null[:, k], False) for k in range(null.shape[1])]


def _derivation_rows_float(n: TwoStepAlgebra, tol: float = 0.0) -> list[dict]:
    q, p = n.q, n.p
    base = q * q
    mats = n.floats()
    rows = []
    for a, Ja in enumerate(mats):
        for i in range(q):
            for j in range(i + 1, q):
                row: dict = {}
                for k in range(q):
                    if Ja[i, k] != 0:
                        row[k * q + j] = row.get(k * q + j, 0.0) + Ja[i, k]
                    if Ja[k, j] != 0:
                        row[k * q + i] = row.get(k * q + i, 0.0) + Ja[k, j]
                for b, Jb in enumerate(mats):
                    if Jb[i, j] != 0:
                        row[base + a * p + b] = -Jb[i, j]
                row = {c: v for c, v in row.items() if abs(v) > tol}
                if row:
                    rows.append(row)
    return rows


def derivation_basis(n: TwoStepAlgebra, exact: bool | None = None) -> list[np.ndarray]:
    """Basis of Der(n): the p*q U-blocks followed by the A1 ⊕ M solutions."""
    exact = n.exact if exact is None else exact
    if exact:
        return u_blocks(n, True) + block_derivations(n)
    return u_blocks(n, False) + block_derivations_float(n)


def derivation_defect(n: TwoStepAlgebra, D: np.ndarray) -> float:
    """Frobenius norm of J_a A1 + A1^t J_a - sum_b M_ab J_b over all a
    (relative to the size of D); zero exactly for derivations."""
    q = n.q
    A1 = np.array(D[:q, :q], dtype=float)
    M = np.array(D[q:, q:], dtype=float)
    mats = n.floats()
    total = 0.0
    for a, Ja in enumerate(mats):
        rhs = sum(M[a, b] * Jb for b, Jb in enumerate(mats))
        total += float(np.sum((Ja @ A1 + A1.T @ Ja - rhs) ** 2))
    scale = max(1.0, float(np.linalg.norm(np.array(D, dtype=float))))
    return float(np.sqrt(total)) / scale


def is_derivation(n: TwoStepAlgebra, D: np.ndarray) -> bool:
    """Exact check of the derivation identity on all bracket pairs."""
    q = n.q
    if any(D[i, q + a] != 0 for i in range(q) for a in range(n.p)):
        return False
    A1, M = D[:q, :q], D[q:, q:]
    for a, Ja in enumerate(n.J):
        rhs = sum((M[a, b] * Jb for b, Jb in enumerate(n.J)), zeros(q))
        if any(v != 0 for v in (Ja @ A1 + A1.T @ Ja - rhs).flat):
            return False
    return True


# ---------------------------------------------------------------------------
# metrics and Ricci

@dataclass(frozen=True, eq=False)
class MetricData:
    """Inner product on the algebra: ``diagonal`` Gram entries or a ``full``
    symmetric positive-definite Gram matrix (block diagonal across b ⊕ m)."""

    diagonal: tuple | None = None
    full: np.ndarray | None = None

    def __post_init__(self):
        if (self.diagonal is None) == (self.full is None):
            raise MetricInvalid("give exactly one of diagonal or full")
        if self.diagonal is not None:
            object.__setattr__(self, "diagonal", tuple(self.diagonal))
            if any(not v > 0 for v in self.diagonal):
                raise MetricInvalid("diagonal metric entries must be positive")
        else:
            G = np.array(self.full, dtype=float)
            if G.ndim != 2 or G.shape[0] != G.shape[1] or not np.allclose(G, G.T, atol=1e-12 * max(1.0, np.abs(G).max())):
                raise MetricInvalid("full metric must be a symmetric square matrix")
            if np.linalg.eigvalsh(G).min() <= 0:
                raise MetricInvalid("metric is not positive definite")

    @property
    def dim(self) -> int:
        return len(self.diagonal) if self.diagonal is not None else self.full.shape[0]

    @property
    def exact(self) -> bool:
        return self.diagonal is not None and all(is_exact(v) for v in self.diagonal)

    def gram(self) -> np.ndarray:
        if self.diagonal is not None:
            return np.diag([float(v) for v in self.diagonal])
        return np.array(self.full, dtype=float)

    @classmethod
    def identity(cls, n: int) -> "MetricData":
        return cls(diagonal=tuple([F1] * n))

    def to_json(self) -> dict:
        from .arith import scalar_to_json
        if self.diagonal is not None:
            return {"diagonal": [scalar_to_json(v) for v in self.diagonal]}
        return {"full": [[float(v) for v in row] for row in self.full]}

    @classmethod
    def from_json(cls, data: dict) -> "MetricData":
        from .arith import scalar_from_json
        if "diagonal" in data:
            return cls(diagonal=tuple(scalar_from_json(v) for v in data["diagonal"]))
        return cls(full=np.array(data["full"], dtype=float))


@dataclass(frozen=True, eq=False)
class RicciData:
    ric_b: np.ndarray
    ric_m: np.ndarray

    def operator(self) -> np.ndarray:
        q, p = self.ric_b.shape[0], self.ric_m.shape[0]
        out = np.zeros((q + p, q + p))
        out[:q, :q] = self.ric_b
        out[q:, q:] = self.ric_m
        return out


def _check_metric(n: TwoStepAlgebra, g: MetricData) -> None:
    if g.dim != n.dim:
        raise MetricInvalid(f"metric has dimension {g.dim}, algebra has {n.dim}")
    if g.full is not None:
        G = g.gram()
        off = np.abs(G[: n.q, n.q:]).max() if n.p else 0.0
        if off > 1e-12 * max(1.0, np.abs(G).max()):
            raise MetricInvalid("metric must be block diagonal across b and m")


def orthonormal_frame(n: TwoStepAlgebra, g: MetricData) -> tuple[list[np.ndarray], np.ndarray]:
    """Bracket matrices in a g-orthonormal basis and the change of basis.

    With G_b = Lb Lb^t and G_m = Lm Lm^t, the orthonormal basis is
    e = X Lb^{-t}, f = Z Lm^{-t}. Returns the transformed matrices and the
    full (q+p) matrix S = Lb^{-t} ⊕ Lm^{-t} (columns express e, f in X, Z).
    """
    _check_metric(n, g)
    q = n.q
    G = g.gram()
    try:
        Lb = np.linalg.cholesky(G[:q, :q])
        Lm = np.linalg.cholesky(G[q:, q:])
    except np.linalg.LinAlgError as exc:
        raise MetricInvalid("metric is not positive definite") from exc
    Lb_inv = np.linalg.inv(Lb)
    mats = n.floats()
    base = [Lb_inv @ M @ Lb_inv.T for M in mats]
    Jt = [sum(Lm.T[b, a] * base[a] for a in range(n.p)) for b in range(n.p)]
    S = np.zeros((n.dim, n.dim))
    S[:q, :q] = Lb_inv.T
    S[q:, q:] = np.linalg.inv(Lm).T
    return Jt, S


def ricci(n: TwoStepAlgebra, g: MetricData) -> RicciData:
    """Ricci operator in a g-orthonormal basis."""
    Jt, _ = orthonormal_frame(n, g)
    q, p = n.q, n.p
    ric_b = -0.5 * sum(J @ J.T for J in Jt)
    ric_m = np.array([[0.25 * np.trace(Jt[a] @ Jt[b].T) for b in range(p)] for a in range(p)])
    return RicciData(np.asarray(ric_b, dtype=float).reshape(q, q), ric_m)


def ricci_exact(n: TwoStepAlgebra, g: MetricData) -> np.ndarray:
    """Ricci operator as an exact matrix in the basis (X, Z) for a rational
    diagonal metric."""
    if not (n.exact and g.exact):
        raise MetricInvalid("exact Ricci needs rational data and a rational diagonal metric")
    _check_metric(n, g)
    q, p = n.q, n.p
    gb = g.diagonal[:q]
    h = g.diagonal[q:]
    Dinv = zeros(q)
    for i in range(q):
        Dinv[i, i] = 1 / Fraction(gb[i])
    out = zeros(q + p)
    rb = zeros(q)
    for a, Ja in enumerate(n.J):
        rb = rb + Fraction(h[a]) * (Dinv @ Ja @ Dinv @ Ja.T)
    out[:q, :q] = -rb / 2
    prods = [Dinv @ Ja @ Dinv for Ja in n.J]
    for a in range(p):
        for b in range(p):
            tr = sum((prods[a] * n.J[b]).flat, F0)
            out[q + a, q + b] = Fraction(h[b]) * tr / 4
    return out


@dataclass(frozen=True, eq=False)
class NilsolitonCertificate:
    """Outcome of testing ric = C id + Phi with Phi a derivation.

    ``Phi`` is given in the algebra's own basis (X, Z); ``ricci_residual`` is
    the Frobenius norm of ric - C id - Phi in an orthonormal frame and
    ``derivation_residual`` the relative defect of the derivation identity.
    """

    metric: MetricData
    C: float
    Phi: np.ndarray
    ricci_residual: float
    derivation_residual: float
    exact: bool = False
    eigenvalue_type: tuple | None = None
    extra: dict = field(default_factory=dict)

    def certified(self, tol: float = 1e-8) -> bool:
        return self.C < 0 and self.ricci_residual <= tol and self.derivation_residual <= tol

    def to_json(self) -> dict:
        from .arith import scalar_to_json
        data = {
            "metric": self.metric.to_json(),
            "C": scalar_to_json(self.C) if self.exact else float(self.C),
            "Phi": matrix_to_json(self.Phi) if self.exact else [[float(v) for v in row] for row in self.Phi],
            "ricci_residual": float(self.ricci_residual),
            "derivation_residual": float(self.derivation_residual),
        }
        if self.eigenvalue_type is not None:
            data["eigenvalue_type"] = {
                "eigenvalues": list(self.eigenvalue_type[0]),
                "multiplicities": list(self.eigenvalue_type[1]),
            }
        data.update(self.extra)
        return data


def _residual_exact(n: TwoStepAlgebra, g: MetricData) -> NilsolitonCertificate:
    Ric = ricci_exact(n, g)
    w = [Fraction(v) for v in g.diagonal]
    dim = n.dim
    basis = [identity(dim)] + block_derivations(n)

    # <A, B> = sum_ij (g_i / g_j) A_ij B_ij is the Frobenius product in an
    # orthonormal frame
    def inner(A, B):
        s = F0
        for i in range(dim):
            for j in range(dim):
                a, b = A[i, j], B[i, j]
                if a and b:
                    s += w[i] / w[j] * a * b
        return s

    k = len(basis)
    gram = zeros(k)
    rhs = [inner(Ric, B) for B in basis]
    for i in range(k):
        for j in range(i, k):
            gram[i, j] = gram[j, i] = inner(basis[i], basis[j])
    c = solve(gram, rhs)
    C = c[0]
    Phi = zeros(dim)
    for coef, B in zip(c[1:], basis[1:]):
        if coef:
            Phi = Phi + coef * B
    R = Ric - C * identity(dim) - Phi
    res2 = inner(R, R)
    return NilsolitonCertificate(
        metric=g,
        C=C,
        Phi=Phi,
        ricci_residual=float(res2) ** 0.5,
        derivation_residual=0.0 if is_derivation(n, Phi) else float("inf"),
        exact=True,
        extra={"ricci_residual_squared": str(res2)},
    )


def _residual_float(n: TwoStepAlgebra, g: MetricData) -> NilsolitonCertificate:
    Jt, S = orthonormal_frame(n, g)
    frame = TwoStepAlgebra(tuple(Jt), check=False)
    q, p = n.q, n.p
    Ric = np.zeros((n.dim, n.dim))
    Ric[:q, :q] = -0.5 * sum(J @ J.T for J in Jt)
    for a in range(p):
        for b in range(p):
            Ric[q + a, q + b] = 0.25 * np.trace(Jt[a] @ Jt[b].T)
    basis = [np.eye(n.dim)] + block_derivations_float(frame)
    A = np.array([B.ravel() for B in basis]).T
    coef, *_ = np.linalg.lstsq(A, Ric.ravel(), rcond=None)
    C = float(coef[0])
    Phi_e = (A[:, 1:] @ coef[1:]).reshape(n.dim, n.dim) if len(basis) > 1 else np.zeros_like(Ric)
    R = Ric - C * np.eye(n.dim) - Phi_e
    Phi = S @ Phi_e @ np.linalg.inv(S)
    return NilsolitonCertificate(
        metric=g,
        C=C,
        Phi=Phi,
        ricci_residual=float(np.linalg.norm(R)),
        derivation_residual=derivation_defect(n, Phi),
    )


def nilsoliton_residual(n: TwoStepAlgebra, g: MetricData, exact: bool | None = None) -> NilsolitonCertificate:
    """Best C and derivation Phi with ric ≈ C id + Phi, and the defect.

    Rational algebras with rational diagonal metrics are handled exactly
    (normal equations over Q); everything else goes through a float
    orthonormal frame and least squares. U-block derivations are left out of
    the projection: ric is block diagonal and they are orthogonal to it.
    """
    if exact is None:
        exact = n.exact and g.exact
    return _residual_exact(n, g) if exact else _residual_float(n, g)


# ---------------------------------------------------------------------------
# duality

def _pairs(q: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(q) for j in range(i + 1, q)]


def dualize(n: TwoStepAlgebra) -> TwoStepAlgebra:
    """Algebra of type (D - p, q) on a basis of the orthogonal complement of
    span(J_a) under Q(K1, K2) = -Tr(K1 K2).

    The complement basis is the exact nullspace basis of the upper-triangular
    coordinates, which keeps elementary bracket matrices elementary.
    """
    q, p = n.q, n.p
    pairs = _pairs(q)
    D = len(pairs)
    if p >= D:
        raise FullType("a free two-step algebra has no dual")
    if not n.exact:
        raise ValueError("dualize needs rational bracket matrices")
    rows = []
    for M in n.J:
        rows.append({k: Fraction(M[i, j]) for k, (i, j) in enumerate(pairs) if M[i, j] != 0})
    mats = []
    for vec in nullspace_sparse(rows, D):
        K = zeros(q)
        for k, v in vec.items():
            i, j = pairs[k]
            K[i, j], K[j, i] = v, -v
        mats.append(K)
    return TwoStepAlgebra(tuple(mats), check=False)


def q_inner(K1: np.ndarray, K2: np.ndarray):
    return -sum((K1 @ K2).diagonal(), F0 if K1.dtype == object else 0.0)


def free_two_step(f: int, abelian: int = 0) -> TwoStepAlgebra:
    """The free two-step algebra on f generators plus an abelian summand."""
    q = f + abelian
    mats = []
    for i, j in _pairs(f):
        K = zeros(q)
        K[i, j], K[j, i] = F1, -F1
        mats.append(K)
    return TwoStepAlgebra(tuple(mats), check=False)

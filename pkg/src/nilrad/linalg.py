"""Exact rational and polynomial matrix algebra.

Rational matrices are numpy object arrays holding Fractions. Elimination is
done on sparse rows (``dict`` column -> value) because the systems arising
from derivation equations and pencil kernels are very sparse.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .arith import (
    BinaryForm,
    gcd_forms,
    pdivmod,
    pmul,
    psub,
    ptrim,
    scalar_from_json,
    scalar_to_json,
)

MAX_Q = 20

F0 = Fraction(0)
F1 = Fraction(1)


# ---------------------------------------------------------------------------
# rational matrices

def ratmat(rows) -> np.ndarray:
    """Build an object array of Fractions from nested sequences."""
    arr = np.array(rows, dtype=object)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = v if isinstance(v, Fraction) else Fraction(v)
    return out


def zeros(n: int, m: int | None = None) -> np.ndarray:
    m = n if m is None else m
    out = np.empty((n, m), dtype=object)
    out.fill(F0)
    return out


def identity(n: int) -> np.ndarray:
    out = zeros(n)
    for i in range(n):
        out[i, i] = F1
    return out


def block_diag(*blocks: np.ndarray) -> np.ndarray:
    blocks = [b for b in blocks if b.size or b.shape != (0, 0)]
    n = sum(b.shape[0] for b in blocks)
    m = sum(b.shape[1] for b in blocks)
    out = zeros(n, m)
    i = j = 0
    for b in blocks:
        out[i:i + b.shape[0], j:j + b.shape[1]] = b
        i += b.shape[0]
        j += b.shape[1]
    return out


def is_zero_matrix(M: np.ndarray) -> bool:
    return all(v == 0 for v in M.flat)


def to_float(M: np.ndarray) -> np.ndarray:
    return np.array(M, dtype=float)


def matrix_to_json(M: np.ndarray) -> list:
    return [[scalar_to_json(v) for v in row] for row in M]


def matrix_from_json(data) -> np.ndarray:
    rows = [[scalar_from_json(v) for v in row] for row in data]
    if rows and any(isinstance(v, float) for row in rows for v in row):
        return np.array(rows, dtype=float)
    return ratmat(rows) if rows else zeros(0)


# ---------------------------------------------------------------------------
# sparse elimination

def _rows_from_dense(M) -> list[dict]:
    rows = []
    for row in M:
        d = {j: Fraction(v) for j, v in enumerate(row) if v != 0}
        rows.append(d)
    return rows


def rref_sparse(rows: Iterable[dict], ncols: int) -> tuple[list[dict], list[int]]:
    """Reduced row echelon form of sparse rows; returns (rows, pivot columns).

    Each returned row has a 1 at its pivot and zeros in the other pivots.
    """
    pivots: dict[int, dict] = {}
    for raw in rows:
        row = {j: v for j, v in raw.items() if v != 0}
        # pivot rows are zero in every other pivot column, so one pass suffices
        for c in [c for c in row if c in pivots]:
            f = row[c]
            for j, v in pivots[c].items():
                nv = row.get(j, F0) - f * v
                if nv:
                    row[j] = nv
                else:
                    row.pop(j, None)
        if not row:
            continue
        p = min(row)
        inv = 1 / row[p]
        row = {j: v * inv for j, v in row.items()}
        # back-substitute into existing pivot rows
        for c, prow in pivots.items():
            f = prow.get(p)
            if f:
                for j, v in row.items():
                    nv = prow.get(j, F0) - f * v
                    if nv:
                        prow[j] = nv
                    else:
                        prow.pop(j, None)
        pivots[p] = row
    order = sorted(pivots)
    return [pivots[c] for c in order], order


def nullspace_sparse(rows: Iterable[dict], ncols: int) -> list[dict]:
    reduced, pivcols = rref_sparse(rows, ncols)
    pivset = set(pivcols)
    basis = []
    for free in range(ncols):
        if free in pivset:
            continue
        vec = {free: F1}
        for prow, p in zip(reduced, pivcols):
            v = prow.get(free)
            if v:
                vec[p] = -v
        basis.append(vec)
    return basis


def rank(M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    return len(rref_sparse(_rows_from_dense(M), M.shape[1])[1])


def nullspace(M: np.ndarray) -> np.ndarray:
    """Columns spanning the right kernel of ``M`` (exact)."""
    n = M.shape[1]
    basis = nullspace_sparse(_rows_from_dense(M), n)
    out = zeros(n, len(basis))
    for k, vec in enumerate(basis):
        for j, v in vec.items():
            out[j, k] = v
    return out


def solve(A: np.ndarray, b: Sequence) -> np.ndarray | None:
    """A particular exact solution of ``A x = b`` or None when inconsistent."""
    n = A.shape[1]
    rows = []
    for i, row in enumerate(A):
        d = {j: Fraction(v) for j, v in enumerate(row) if v != 0}
        if b[i] != 0:
            d[n] = Fraction(b[i])
        rows.append(d)
    reduced, piv = rref_sparse(rows, n + 1)
    if piv and piv[-1] == n:
        return None
    x = np.empty(n, dtype=object)
    x.fill(F0)
    for prow, p in zip(reduced, piv):
        x[p] = prow.get(n, F0)
    return x


def inverse(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    aug = np.concatenate([A, identity(n)], axis=1)
    reduced, piv = rref_sparse(_rows_from_dense(aug), 2 * n)
    if piv[:n] != list(range(n)) or len(piv) < n:
        raise ZeroDivisionError("matrix is singular")
    out = zeros(n)
    for i, prow in enumerate(reduced[:n]):
        for j, v in prow.items():
            if j >= n:
                out[i, j - n] = v
    return out


def complement_basis(K: np.ndarray, n: int) -> np.ndarray:
    """Standard basis vectors completing the columns of ``K`` to a basis."""
    chosen = []
    rows = _rows_from_dense(K.T) if K.size else []
    reduced, piv = rref_sparse(rows, n)
    current = [dict(r) for r in reduced]
    for i in range(n):
        trial, tp = rref_sparse(current + [{i: F1}], n)
        if len(tp) > len(current):
            chosen.append(i)
            current = trial
    out = zeros(n, len(chosen))
    for k, i in enumerate(chosen):
        out[i, k] = F1
    return out


def det(M: np.ndarray) -> Fraction:
    """Exact determinant by fraction-free Bareiss elimination."""
    n = M.shape[0]
    if n == 0:
        return F1
    # clear denominators so that Bareiss stays in the integers
    from math import lcm
    den = 1
    for v in M.flat:
        den = lcm(den, Fraction(v).denominator)
    A = [[int(Fraction(v) * den) for v in row] for row in M]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k] != 0:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return F0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[k][k] * A[i][j] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return Fraction(sign * A[n - 1][n - 1], den ** n)


# ---------------------------------------------------------------------------
# polynomial matrices

def poly_det(P: list[list[list]]) -> list:
    """Determinant of a square matrix of univariate polynomials (Bareiss)."""
    n = len(P)
    if n == 0:
        return [F1]
    A = [[list(p) for p in row] for row in P]
    sign = 1
    prev = [F1]
    for k in range(n - 1):
        if not A[k][k]:
            for i in range(k + 1, n):
                if A[i][k]:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return []
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = psub(pmul(A[k][k], A[i][j]), pmul(A[i][k], A[k][j]))
                A[i][j] = pdivmod(num, prev)[0] if num else []
        prev = A[k][k]
    out = A[n - 1][n - 1]
    return [sign * c for c in out]


def diagonalize(A: list[list[list]], track_columns: bool = False):
    """Equivalence-diagonalize a polynomial matrix over Q[x].

    Returns ``(diag, V)`` where ``diag`` lists the nonzero diagonal entries of
    some ``U A V`` with ``U, V`` unimodular. When ``track_columns`` is set,
    ``V`` is returned as a matrix of polynomials; its columns past
    ``len(diag)`` form a Q[x]-basis of the right kernel of ``A``.
    """
    n = len(A)
    m = len(A[0]) if n else 0
    A = [[list(p) for p in row] for row in A]
    V = None
    if track_columns:
        V = [[[F1] if i == j else [] for j in range(m)] for i in range(m)]
    diag = []
    for k in range(min(n, m)):
        while True:
            # lowest degree first, then smallest coefficient height
            best = None
            bkey = None
            for i in range(k, n):
                row = A[i]
                for j in range(k, m):
                    p = row[j]
                    if p:
                        key = (len(p), _height(p[-1]))
                        if bkey is None or key < bkey:
                            best, bkey = (i, j), key
            if best is None:
                return diag, V
            i0, j0 = best
            if i0 != k:
                A[k], A[i0] = A[i0], A[k]
            if j0 != k:
                for row in A:
                    row[k], row[j0] = row[j0], row[k]
                if V is not None:
                    for row in V:
                        row[k], row[j0] = row[j0], row[k]
            piv = A[k][k]
            clean = True
            pivrow = A[k]
            for i in range(k + 1, n):
                if not A[i][k]:
                    continue
                q, r = pdivmod(A[i][k], piv)
                if r:
                    clean = False
                row = A[i]
                for j in range(k, m):
                    if pivrow[j]:
                        row[j] = psub(row[j], pmul(q, pivrow[j]))
            for j in range(k + 1, m):
                if not A[k][j]:
                    continue
                q, r = pdivmod(A[k][j], piv)
                if r:
                    clean = False
                for i in range(k, n):
                    if A[i][k]:
                        A[i][j] = psub(A[i][j], pmul(q, A[i][k]))
                if V is not None:
                    for row in V:
                        if row[k]:
                            row[j] = psub(row[j], pmul(q, row[k]))
            if clean:
                break
        diag.append(A[k][k])
    return diag, V


def _height(c: Fraction) -> int:
    return c.numerator.bit_length() + c.denominator.bit_length()


def column_reduce(N: list[list[list]]) -> tuple[list[list[list]], list[int]]:
    """Column-reduce a polynomial basis (columns of ``N``) to minimal degrees.

    Returns the reduced matrix and its column degrees. For a basis that is
    full rank at every finite point, the result is a minimal basis.
    """
    rows = len(N)
    cols = len(N[0]) if rows else 0
    N = [[list(p) for p in row] for row in N]
    while True:
        degs = [max((len(N[i][j]) - 1 for i in range(rows)), default=-1) for j in range(cols)]
        lead = zeros(rows, cols)
        for j in range(cols):
            d = degs[j]
            for i in range(rows):
                p = N[i][j]
                if len(p) - 1 == d:
                    lead[i, j] = p[-1]
        ker = nullspace(lead)
        if ker.shape[1] == 0:
            return N, degs
        c = ker[:, 0]
        support = [j for j in range(cols) if c[j] != 0]
        jstar = max(support, key=lambda j: degs[j])
        dstar = degs[jstar]
        newcol = [[] for _ in range(rows)]
        for j in support:
            shift = dstar - degs[j]
            for i in range(rows):
                p = N[i][j]
                if p:
                    term = [F0] * shift + [c[j] * a for a in p]
                    newcol[i] = _padd(newcol[i], term)
        scale = 1 / c[jstar]
        for i in range(rows):
            N[i][jstar] = [scale * a for a in newcol[i]]


def _padd(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, v in enumerate(b):
        out[i] += v
    return ptrim(out)


# ---------------------------------------------------------------------------
# form matrices

@dataclass(frozen=True)
class FormMatrix:
    """Matrix of binary forms, row-major."""

    rows: int
    cols: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise ValueError("entries length must equal rows * cols")

    @classmethod
    def pencil(cls, J1: np.ndarray, J2: np.ndarray) -> "FormMatrix":
        """The matrix x*J1 + y*J2."""
        n, m = J1.shape
        entries = tuple(
            BinaryForm((J1[i, j], J2[i, j])) for i in range(n) for j in range(m)
        )
        return cls(n, m, entries)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[BinaryForm]]) -> "FormMatrix":
        n = len(rows)
        m = len(rows[0]) if n else 0
        return cls(n, m, tuple(f for row in rows for f in row))

    def __getitem__(self, ij) -> BinaryForm:
        i, j = ij
        return self.entries[i * self.cols + j]

    def entry_degree(self) -> int:
        degs = {f.degree for f in self.entries if not f.is_zero()}
        if len(degs) > 1:
            raise ValueError("entries are not of a common degree")
        return degs.pop() if degs else 0

    def dehomogenized(self) -> list[list[list]]:
        return [
            [self[i, j].dehomogenize() for j in range(self.cols)]
            for i in range(self.rows)
        ]

    def to_json(self) -> list:
        return [[self[i, j].to_json() for j in range(self.cols)] for i in range(self.rows)]


def generic_rank(M: FormMatrix) -> int:
    """Rank of ``M`` over the field of rational functions in (x, y).

    Nonzero forms stay nonzero under y = 1, so the rank equals the rank of
    the dehomogenized matrix over Q(x), computed by polynomial elimination.
    """
    if M.rows == 0 or M.cols == 0:
        return 0
    diag, _ = diagonalize(M.dehomogenized())
    return len(diag)


def minors_gcd(M: FormMatrix, r: int) -> BinaryForm:
    """Normalized gcd of all r x r minors of ``M`` (zero if all vanish)."""
    if not 1 <= r <= min(M.rows, M.cols):
        raise ValueError("r out of range")
    if max(M.rows, M.cols) > MAX_Q:
        raise ValueError(f"matrix size exceeds the supported bound {MAX_Q}")
    e = M.entry_degree()
    P = M.dehomogenized()
    g = BinaryForm.zero()
    for rows in itertools.combinations(range(M.rows), r):
        for cols in itertools.combinations(range(M.cols), r):
            sub = [[P[i][j] for j in cols] for i in rows]
            d = poly_det(sub)
            if not d:
                continue
            g = gcd_forms(g, BinaryForm.from_poly(d, r * e))
            if g.degree == 0:
                return g
    return g

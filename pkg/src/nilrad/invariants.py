"""Projective invariants of a skew-symmetric pencil x*J1 + y*J2.

The pencil is reduced in four exact steps: split off the common kernel of
J1 and J2, change variables so that the x-coefficient has maximal rank (no
divisors of the form y^l survive), diagonalize the dehomogenized pencil over
Q[x] by unimodular row and column operations, and read elementary divisors
from the diagonal while the tracked column transform yields a polynomial
kernel basis whose column-reduced degrees are the minimal indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import (
    BinaryForm,
    exact_sqrt,
    is_exact,
    root_data,
    scalar_from_json,
    scalar_to_json,
)
from .errors import Degenerate, InternalInvariantViolation, Unsupported
from .linalg import (
    F0,
    F1,
    column_reduce,
    complement_basis,
    diagonalize,
    matrix_from_json,
    matrix_to_json,
    nullspace,
    nullspace_sparse,
    rank,
)

CASE1, CASE2, CASE3 = "Case1", "Case2", "Case3"


@dataclass(frozen=True, eq=False)
class SkewPencil:
    """Pair of skew-symmetric q x q matrices defining the pencil x*J1 + y*J2."""

    J1: np.ndarray
    J2: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.J1.shape != self.J2.shape or self.J1.shape[0] != self.J1.shape[1]:
            raise ValueError("J1 and J2 must be square of equal size")
        if not self.check:
            return
        for J in (self.J1, self.J2):
            if any(J[i, j] != -J[j, i] for i in range(self.q) for j in range(i, self.q)):
                raise ValueError("pencil matrices must be skew-symmetric")
        if not independent(self.J1, self.J2):
            raise Degenerate("J1 and J2 are linearly dependent")

    @property
    def q(self) -> int:
        return self.J1.shape[0]

    @property
    def exact(self) -> bool:
        return self.J1.dtype == object

    def to_json(self) -> dict:
        return {"J1": matrix_to_json(self.J1), "J2": matrix_to_json(self.J2)}

    @classmethod
    def from_json(cls, data: dict) -> "SkewPencil":
        return cls(matrix_from_json(data["J1"]), matrix_from_json(data["J2"]))


def independent(J1: np.ndarray, J2: np.ndarray) -> bool:
    if J1.dtype != object or J2.dtype != object:
        stack = np.array([np.ravel(J1), np.ravel(J2)], dtype=float)
        return np.linalg.matrix_rank(stack) == 2
    stack = np.empty((2, J1.size), dtype=object)
    stack[0] = J1.ravel()
    stack[1] = J2.ravel()
    return rank(stack) == 2


# ---------------------------------------------------------------------------
# invariant data

@dataclass(frozen=True)
class PencilInvariants:
    """Reduced elementary divisors, minimal indices and case of a pencil.

    ``real_divisors`` holds ``(a, l)`` for (x + a*y)^l and
    ``complex_divisors`` holds ``(mu, nu, n)`` for ((x + mu*y)^2 + (nu*y)^2)^n.
    Roots refer to the variables after ``variable_change`` W, meaning the
    reported invariants belong to the pencil (x, y) -> P(W (x, y)).
    """

    real_divisors: tuple = ()
    complex_divisors: tuple = ()
    minimal_indices: tuple = ()
    common_kernel_dim: int = 0
    variable_change: tuple = ((F1, F0), (F0, F1))
    case_tag: str = ""
    tol: float | None = None

    def __post_init__(self):
        if not self.case_tag:
            object.__setattr__(self, "case_tag", case_of(self.real_divisors, self.complex_divisors, self.tol))

    @property
    def u(self) -> int:
        return len(self.real_divisors)

    @property
    def w(self) -> int:
        return len(self.complex_divisors)

    @property
    def v(self) -> int:
        return len(self.minimal_indices)

    @property
    def q(self) -> int:
        return (
            2 * sum(l for _, l in self.real_divisors)
            + 4 * sum(n for _, _, n in self.complex_divisors)
            + sum(2 * k + 1 for k in self.minimal_indices)
            + self.common_kernel_dim
        )

    @property
    def exact(self) -> bool:
        return self.tol is None

    def key(self) -> tuple:
        """Order-independent comparison key."""
        return (
            tuple(sorted(self.real_divisors, key=_sort_key)),
            tuple(sorted(self.complex_divisors, key=_sort_key)),
            tuple(sorted(self.minimal_indices)),
            self.common_kernel_dim,
        )

    def same_invariants(self, other: "PencilInvariants") -> bool:
        return self.key() == other.key()

    def to_json(self) -> dict:
        return {
            "real_divisors": [[scalar_to_json(a), l] for a, l in self.real_divisors],
            "complex_divisors": [
                [scalar_to_json(m), scalar_to_json(n), k] for m, n, k in self.complex_divisors
            ],
            "minimal_indices": list(self.minimal_indices),
            "common_kernel_dim": self.common_kernel_dim,
            "variable_change": [[scalar_to_json(v) for v in row] for row in self.variable_change],
            "case_tag": self.case_tag,
        }

    @classmethod
    def from_json(cls, data: dict) -> "PencilInvariants":
        real = tuple((scalar_from_json(a), int(l)) for a, l in data.get("real_divisors", []))
        cplx = tuple(
            (scalar_from_json(m), scalar_from_json(n), int(k))
            for m, n, k in data.get("complex_divisors", [])
        )
        vc = data.get("variable_change", [["1", "0"], ["0", "1"]])
        exact = all(is_exact(a) for a, _ in real) and all(
            is_exact(m) and is_exact(n) for m, n, _ in cplx
        )
        return cls(
            real_divisors=real,
            complex_divisors=cplx,
            minimal_indices=tuple(int(k) for k in data.get("minimal_indices", [])),
            common_kernel_dim=int(data.get("common_kernel_dim", 0)),
            variable_change=tuple(tuple(scalar_from_json(v) for v in row) for row in vc),
            tol=None if exact else 1e-9,
        )


def _sort_key(item):
    return tuple(float(v) for v in item)


def _close(a, b, tol) -> bool:
    if tol is None:
        return a == b
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def distinct_values(values, tol=None) -> list:
    out = []
    for v in values:
        if not any(_close(v, o, tol) for o in out):
            out.append(v)
    return out


def case_of(real_divisors, complex_divisors, tol=None) -> str:
    reals = distinct_values([a for a, _ in real_divisors], tol)
    pairs = distinct_values([complex(m, n) for m, n, _ in complex_divisors], tol) if tol else \
        list({(m, n) for m, n, _ in complex_divisors})
    if not complex_divisors:
        return CASE2 if len(reals) <= 2 else CASE1
    if not real_divisors and len(pairs) == 1:
        return CASE3
    return CASE1


# ---------------------------------------------------------------------------
# variable changes

def mobius_real(W, a):
    """Root of x + a*y after substituting (x, y) -> W (x, y)."""
    (w11, w12), (w21, w22) = W
    den = w11 + a * w21
    if den == 0:
        raise ZeroDivisionError("root sent to infinity")
    return (w12 + a * w22) / den


def mobius_complex(W, mu, nu):
    """(mu, nu) of a conjugate pair after substituting (x, y) -> W (x, y)."""
    (w11, w12), (w21, w22) = W
    nr, ni = w12 + mu * w22, nu * w22
    dr, di = w11 + mu * w21, nu * w21
    d2 = dr * dr + di * di
    re = (nr * dr + ni * di) / d2
    im = (ni * dr - nr * di) / d2
    return re, abs(im)


def transform_invariants(inv: PencilInvariants, W) -> PencilInvariants:
    """Invariants of the pencil after the substitution (x, y) -> W (x, y)."""
    return PencilInvariants(
        real_divisors=tuple((mobius_real(W, a), l) for a, l in inv.real_divisors),
        complex_divisors=tuple(
            mobius_complex(W, m, n) + (k,) for m, n, k in inv.complex_divisors
        ),
        minimal_indices=inv.minimal_indices,
        common_kernel_dim=inv.common_kernel_dim,
        tol=inv.tol,
    )


def matmul2(A, B):
    return tuple(
        tuple(sum(A[i][k] * B[k][j] for k in range(2)) for j in range(2))
        for i in range(2)
    )


# ---------------------------------------------------------------------------
# computation

def common_kernel(p: SkewPencil) -> np.ndarray:
    stack = np.concatenate([p.J1, p.J2], axis=0)
    return nullspace(stack)


def split_common_kernel(p: SkewPencil) -> tuple[np.ndarray, np.ndarray, int]:
    """Restrict the pencil to a complement of Ker J1 ∩ Ker J2."""
    K = common_kernel(p)
    c = K.shape[1]
    if c == 0:
        return p.J1, p.J2, 0
    C = complement_basis(K, p.q)
    return C.T @ p.J1 @ C, C.T @ p.J2 @ C, c


def _shift_candidates():
    yield 0
    t = 1
    while True:
        yield t
        yield -t
        t += 1


def choose_shift(J1: np.ndarray, J2: np.ndarray) -> tuple[int, int]:
    """Smallest |t| in 0, 1, -1, 2, ... with rank(J1 + t J2) maximal.

    At most q/2 values of t drop the rank below the normal rank, so the
    maximum over the first q + 1 candidates is the normal rank exactly.
    """
    q = J1.shape[0]
    ranks = []
    gen = _shift_candidates()
    for _ in range(q + 1):
        t = next(gen)
        r = rank(J1 + t * J2)
        ranks.append((t, r))
        if r == q:
            return t, r
    best = max(r for _, r in ranks)
    for t, r in ranks:
        if r == best:
            return t, best
    raise AssertionError


def _halve(divisors: list, tol) -> list:
    """Pair up repeated elementary divisors and keep one of each pair."""
    groups: list[list] = []
    for tag, power in divisors:
        for g in groups:
            if g[1] == power and g[0][0] == tag[0] and all(
                _close(x, y, tol) for x, y in zip(g[0][1:], tag[1:])
            ):
                g[2] += 1
                break
        else:
            groups.append([tag, power, 1])
    out = []
    for tag, power, count in groups:
        if count % 2:
            raise InternalInvariantViolation(
                f"elementary divisor {tag} of power {power} repeats {count} times"
            )
        out.extend([(tag, power)] * (count // 2))
    return out


def compute_invariants(p: SkewPencil, mode: str = "exact", tol: float = 1e-9) -> PencilInvariants:
    """Reduced elementary divisors, minimal indices and case tag of ``p``."""
    if mode not in ("exact", "numeric"):
        raise ValueError(f"unknown mode {mode!r}")
    if not p.exact:
        raise ValueError("compute_invariants needs rational matrices")
    J1, J2, ckd = split_common_kernel(p)
    q = J1.shape[0]
    if q == 0:
        raise Degenerate("pencil is identically zero")
    t, nrank = choose_shift(J1, J2)
    top = J1 + t * J2
    A = [[_lin(J2[i, j], top[i, j]) for j in range(q)] for i in range(q)]
    diag, V = diagonalize(A, track_columns=True)
    if len(diag) != nrank:
        raise InternalInvariantViolation("normal rank mismatch")

    ntol = None if mode == "exact" else tol
    raw = []
    for d in diag:
        if len(d) <= 1:
            continue
        f = BinaryForm.from_poly(d, len(d) - 1)
        for tag, k in root_data(f, mode, tol):
            if tag[0] == "inf":
                raise InternalInvariantViolation("infinite divisor after variable change")
            raw.append((tag, k))
    halved = _halve(raw, ntol)

    real, cplx = [], []
    for tag, power in halved:
        if tag[0] == "real":
            real.append((tag[1], power))
        else:
            mu, nu2 = tag[1], tag[2]
            if mode == "exact":
                nu = exact_sqrt(nu2)
                if nu is None:
                    raise Unsupported(f"nu^2 = {nu2} is not a rational square")
            else:
                nu = math.sqrt(nu2)
            cplx.append((mu, nu, power))

    kernel_cols = [[V[i][j] for j in range(nrank, q)] for i in range(q)]
    if q - nrank:
        _, degs = column_reduce(kernel_cols)
    else:
        degs = []
    if any(d < 1 for d in degs):
        raise InternalInvariantViolation("constant kernel vector after splitting the common kernel")

    inv = PencilInvariants(
        real_divisors=tuple(real),
        complex_divisors=tuple(cplx),
        minimal_indices=tuple(sorted(degs)),
        common_kernel_dim=ckd,
        variable_change=((F1, F0), (Fraction(t), F1)),
        tol=ntol,
    )
    if inv.q != p.q:
        raise InternalInvariantViolation(
            f"dimension bookkeeping gives {inv.q}, pencil has q = {p.q}"
        )
    return inv


def _lin(c0, c1) -> list:
    """Polynomial c0 + c1*x with trailing zeros trimmed."""
    if c1 != 0:
        return [Fraction(c0), Fraction(c1)]
    if c0 != 0:
        return [Fraction(c0)]
    return []


def kernel_dimensions(p: SkewPencil, d: int) -> int:
    """Dimension of homogeneous degree-d solutions of (x J1 + y J2) v = 0."""
    q = p.q
    rows = []
    # coefficient of x^(d+1-i) y^i is J1 v_i + J2 v_(i-1)
    for i in range(d + 2):
        for r in range(q):
            row = {}
            if i <= d:
                for c in range(q):
                    if p.J1[r, c] != 0:
                        row[i * q + c] = Fraction(p.J1[r, c])
            if i >= 1:
                for c in range(q):
                    if p.J2[r, c] != 0:
                        row[(i - 1) * q + c] = row.get((i - 1) * q + c, F0) + Fraction(p.J2[r, c])
            if row:
                rows.append(row)
    return len(nullspace_sparse(rows, q * (d + 1)))


def minimal_indices(p: SkewPencil) -> tuple[tuple, int]:
    """Minimal indices and common kernel dimension from kernel dimensions.

    With ``s_d`` the dimension of degree-d kernel solutions, the number of
    basis elements of degree exactly d is the second difference of ``s``.
    """
    c = common_kernel(p).shape[1]
    nrank = choose_shift(p.J1, p.J2)[1]
    needed = p.q - nrank
    s = [0, 0]
    counts = []
    for d in range(p.q + 1):
        s.append(kernel_dimensions(p, d))
        counts.append(s[-1] - 2 * s[-2] + s[-3])
        if sum(counts) >= needed:
            break
    if counts[0] != c:
        raise InternalInvariantViolation("degree-0 kernel differs from the common kernel")
    indices = []
    for d, n in enumerate(counts[1:], start=1):
        indices.extend([d] * n)
    return tuple(indices), c

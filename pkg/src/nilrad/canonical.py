"""Canonical skew pencils built from invariant data, and random presentations."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import scalar_from_json, scalar_to_json
from .errors import SpecInvalid
from .invariants import (
    CASE1,
    CASE2,
    CASE3,
    PencilInvariants,
    SkewPencil,
    case_of,
    distinct_values,
    independent,
)
from .linalg import F0, F1, block_diag, identity, ratmat, zeros


# ---------------------------------------------------------------------------
# blocks

def I(n: int) -> np.ndarray:
    return identity(n)


def N(n: int) -> np.ndarray:
    """Nilpotent Jordan block with ones on the superdiagonal."""
    out = zeros(n)
    for i in range(n - 1):
        out[i, i + 1] = F1
    return out


def L(n: int) -> np.ndarray:
    """I_n followed by a zero column."""
    return np.concatenate([identity(n), zeros(n, 1)], axis=1)


def R(n: int) -> np.ndarray:
    """A zero column followed by I_n."""
    return np.concatenate([zeros(n, 1), identity(n)], axis=1)


def Ic(two_n: int) -> np.ndarray:
    """Direct sum of n copies of sk(I_1)."""
    if two_n % 2:
        raise ValueError("Ic needs an even size")
    return block_diag(*[sk(identity(1)) for _ in range(two_n // 2)]) if two_n else zeros(0)


def D(n: int) -> np.ndarray:
    return ratmat(np.diag(range(1, n + 1)))


def Dc(two_n: int) -> np.ndarray:
    return ratmat(np.diag([i // 2 + 1 for i in range(two_n)]))


def sk(A: np.ndarray) -> np.ndarray:
    """The skew matrix [[0, A], [-A^t, 0]]."""
    m, n = A.shape
    out = zeros(m + n)
    out[:m, m:] = A
    out[m:, :m] = -A.T
    return out


# ---------------------------------------------------------------------------
# specs

@dataclass(frozen=True)
class CanonicalSpec:
    """Invariant data from which a canonical pencil is synthesized.

    ``padding`` adds a common kernel of that dimension (an abelian summand).
    """

    real_divisors: tuple = ()
    complex_divisors: tuple = ()
    minimal_indices: tuple = ()
    padding: int = 0

    def __post_init__(self):
        object.__setattr__(self, "real_divisors", tuple((Fraction(a), int(l)) for a, l in self.real_divisors))
        object.__setattr__(
            self, "complex_divisors",
            tuple((Fraction(m), Fraction(n), int(k)) for m, n, k in self.complex_divisors),
        )
        object.__setattr__(self, "minimal_indices", tuple(int(k) for k in self.minimal_indices))
        if not (self.real_divisors or self.complex_divisors or self.minimal_indices):
            raise SpecInvalid("spec has no divisors and no minimal indices")
        if any(l < 1 for _, l in self.real_divisors) or any(k < 1 for *_, k in self.complex_divisors):
            raise SpecInvalid("divisor powers must be positive")
        if any(k < 1 for k in self.minimal_indices):
            raise SpecInvalid("minimal indices must be positive")
        if any(n <= 0 for _, n, _ in self.complex_divisors):
            raise SpecInvalid("nu must be positive")
        if self.padding < 0:
            raise SpecInvalid("padding must be nonnegative")

    @property
    def case_tag(self) -> str:
        return case_of(self.real_divisors, self.complex_divisors)

    @property
    def q(self) -> int:
        return self.invariants().q

    def invariants(self) -> PencilInvariants:
        return PencilInvariants(
            real_divisors=self.real_divisors,
            complex_divisors=self.complex_divisors,
            minimal_indices=self.minimal_indices,
            common_kernel_dim=self.padding,
        )

    @classmethod
    def from_invariants(cls, inv: PencilInvariants) -> "CanonicalSpec":
        return cls(inv.real_divisors, inv.complex_divisors, inv.minimal_indices, inv.common_kernel_dim)

    def to_json(self) -> dict:
        data = self.invariants().to_json()
        del data["variable_change"]
        data["common_kernel_dim"] = self.padding
        return data

    @classmethod
    def from_json(cls, data: dict) -> "CanonicalSpec":
        return cls(
            real_divisors=[(scalar_from_json(a), l) for a, l in data.get("real_divisors", [])],
            complex_divisors=[
                (scalar_from_json(m), scalar_from_json(n), k) for m, n, k in data.get("complex_divisors", [])
            ],
            minimal_indices=data.get("minimal_indices", []),
            padding=int(data.get("common_kernel_dim", data.get("padding", 0))),
        )


# ---------------------------------------------------------------------------
# synthesis

def _generic_blocks(real, cplx, ks):
    J1, J2 = [], []
    for a, l in real:
        J1.append(sk(I(l)))
        J2.append(sk(a * I(l) + N(l)))
    for mu, nu, n in cplx:
        J1.append(sk(I(2 * n)))
        J2.append(sk(mu * I(2 * n) + nu * Ic(2 * n) + N(2 * n) @ N(2 * n)))
    for k in ks:
        J1.append(sk(L(k)))
        J2.append(sk(R(k)))
    return J1, J2


def subsingular_pencil(group1, group2, ks, padding: int = 0, check: bool = True) -> SkewPencil:
    """The pencil with divisors x^l (l in group1), y^l (l in group2) and the
    given minimal indices, in the block layout used for nice bases."""
    J1 = [sk(I(l)) for l in group1] + [sk(N(l)) for l in group2] + [sk(L(k)) for k in ks]
    J2 = [sk(N(l)) for l in group1] + [sk(I(l)) for l in group2] + [sk(R(k)) for k in ks]
    if padding:
        J1.append(zeros(padding))
        J2.append(zeros(padding))
    A, B = block_diag(*J1), block_diag(*J2)
    if check and not independent(A, B):
        raise SpecInvalid("J1 and J2 are linearly dependent for this spec")
    return SkewPencil(A, B, check=False)


def synthesize(spec: CanonicalSpec) -> SkewPencil:
    """Block-diagonal canonical pencil with the invariants of ``spec``.

    Generic and complex-pair specs use the Jordan-type blocks directly. For at
    most two real root values the x^l / y^l layout is built first and the
    variables substituted so that the roots come out as prescribed.
    """
    if spec.case_tag in (CASE1, CASE3):
        J1, J2 = _generic_blocks(spec.real_divisors, spec.complex_divisors, spec.minimal_indices)
        A, B = block_diag(*J1), block_diag(*J2)
    else:
        roots = distinct_values([a for a, _ in spec.real_divisors])
        alpha = roots[0] if roots else F0
        g1 = [l for a, l in spec.real_divisors if a == alpha]
        g2 = [l for a, l in spec.real_divisors if a != alpha]
        base = subsingular_pencil(g1, g2, spec.minimal_indices, check=False)
        if not roots:
            A, B = base.J1, base.J2
        elif len(roots) == 1:
            # P0(x + alpha*y, y)
            A, B = base.J1, alpha * base.J1 + base.J2
        else:
            # P0(x + alpha*y, x + beta*y)
            beta = roots[1]
            A, B = base.J1 + base.J2, alpha * base.J1 + beta * base.J2
    if spec.padding:
        A = block_diag(A, zeros(spec.padding))
        B = block_diag(B, zeros(spec.padding))
    if not independent(A, B):
        raise SpecInvalid("J1 and J2 are linearly dependent for this spec")
    return SkewPencil(A, B, check=False)


# ---------------------------------------------------------------------------
# random presentations

def _elementary_product(n: int, count: int, rng) -> np.ndarray:
    P = identity(n)
    if n < 2:
        return P
    for _ in range(count):
        i, j = rng.choice(n, size=2, replace=False)
        c = int(rng.choice([-3, -2, -1, 1, 2, 3]))
        P[i, :] = P[i, :] + c * P[j, :]
    return P


def random_transform(q: int, seed: int, factors: int | None = None) -> tuple[np.ndarray, tuple]:
    """Seeded congruence matrix P (q x q) and variable change V (2 x 2)."""
    rng = np.random.default_rng(seed)
    P = _elementary_product(q, 4 * q if factors is None else factors, rng)
    V = _elementary_product(2, 2, rng)
    if rng.integers(2):
        V = V[::-1].copy()
    return P, tuple(tuple(row) for row in V)


def apply_equivalence(p: SkewPencil, P: np.ndarray, V) -> SkewPencil:
    """The pencil (x, y) -> P (old pencil at V (x, y)) P^t."""
    A = P @ p.J1 @ P.T
    B = P @ p.J2 @ P.T
    (v11, v12), (v21, v22) = V
    return SkewPencil(v11 * A + v21 * B, v12 * A + v22 * B, check=False)


def random_equivalence(p: SkewPencil, seed: int) -> SkewPencil:
    P, V = random_transform(p.q, seed)
    return apply_equivalence(p, P, V)


def random_spec(rng, q_max: int = 14, kind: str | None = None, max_root: int = 4) -> CanonicalSpec:
    """Random spec with q <= q_max; ``kind`` is one of Case1, Case2, Case3 or None."""
    def frac():
        return Fraction(int(rng.integers(-max_root, max_root + 1)), int(rng.integers(1, 4)))

    kind = kind or [CASE1, CASE2, CASE3][int(rng.integers(3))]
    while True:
        real, cplx, ks = [], [], []
        budget = int(rng.integers(3, q_max + 1))
        if kind == CASE3:
            mu, nu = frac(), abs(frac()) or F1
            cplx.append((mu, nu, int(rng.integers(1, 3))))
        pool = []
        if kind == CASE2:
            pool = [frac() for _ in range(int(rng.integers(0, 3)))]
        while True:
            used = 2 * sum(l for _, l in real) + 4 * sum(n for *_, n in cplx) + sum(2 * k + 1 for k in ks)
            room = budget - used
            if room < 2:
                break
            r = rng.random()
            if r < 0.5 and kind != CASE3 and (kind != CASE2 or pool):
                a = pool[int(rng.integers(len(pool)))] if kind == CASE2 else frac()
                l = int(rng.integers(1, 3))
                if 2 * l <= room:
                    real.append((a, l))
            elif r < 0.7 and kind != CASE2 and room >= 4:
                if kind == CASE3:
                    cplx.append((cplx[0][0], cplx[0][1], 1))
                else:
                    cplx.append((frac(), abs(frac()) or F1, 1))
            elif room >= 3:
                k = int(rng.integers(1, max(2, (room - 1) // 2 + 1)))
                if 2 * k + 1 <= room:
                    ks.append(k)
            if rng.random() < 0.2:
                break
        used = 2 * sum(l for _, l in real) + 4 * sum(n for *_, n in cplx) + sum(2 * k + 1 for k in ks)
        padding = int(rng.integers(0, 2)) if used < q_max else 0
        try:
            spec = CanonicalSpec(real, cplx, ks, padding)
        except SpecInvalid:
            continue
        if spec.case_tag != kind:
            continue
        try:
            synthesize(spec)
        except SpecInvalid:
            continue
        return spec

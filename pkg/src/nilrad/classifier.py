"""Einstein-nilradical decision for two-step algebras with two-dimensional center.

Input is the projective invariant of the defining pencil. The generic branch
(complex divisors present, or at least three distinct real roots) needs all
divisors simple and no root value carried by half or more of the divisors
(complex ones weighted twice). The subsingular branch splits the real
divisors into two root groups and compares the partial sums S1 and S2
against the sizes of the largest Jordan and Kronecker blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .arith import scalar_to_json
from .invariants import PencilInvariants, _close, distinct_values

GENERIC, SUBSINGULAR = "Generic", "Subsingular"

A_I, A_II = "A_i", "A_ii"
B_NILPOTENT_L, B_A, B_B_K, B_B_L = "B_nilpotent_l", "B_a", "B_b_k", "B_b_l"


@dataclass(frozen=True)
class Verdict:
    is_einstein: bool
    case: str
    labeling: tuple | None = None
    group_roots: tuple = ()
    group1: tuple = ()
    group2: tuple = ()
    S1: Fraction | None = None
    S2: Fraction | None = None
    failed_condition: str | None = None
    witness_hint: dict | None = field(default=None)

    def to_json(self) -> dict:
        data = {
            "is_einstein": self.is_einstein,
            "case": self.case,
            "failed_condition": self.failed_condition,
        }
        if self.case == SUBSINGULAR:
            data["labeling"] = {"u_prime": self.labeling[0], "u_double_prime": self.labeling[1]}
            data["group_roots"] = [scalar_to_json(r) for r in self.group_roots]
            data["group1_powers"] = list(self.group1)
            data["group2_powers"] = list(self.group2)
            data["S1"] = scalar_to_json(self.S1)
            data["S2"] = scalar_to_json(self.S2)
        if self.witness_hint is not None:
            data["witness_hint"] = {
                "root": scalar_to_json(self.witness_hint["root"]),
                "multiplicity": self.witness_hint["multiplicity"],
            }
        return data


def _is_generic(inv: PencilInvariants) -> bool:
    roots = distinct_values([a for a, _ in inv.real_divisors], inv.tol)
    return bool(inv.complex_divisors) or len(roots) >= 3


def root_multiplicities(inv: PencilInvariants) -> list[tuple]:
    """(root value, number of real divisors with that root), first-seen order."""
    out: list[list] = []
    for a, _ in inv.real_divisors:
        for item in out:
            if _close(a, item[0], inv.tol):
                item[1] += 1
                break
        else:
            out.append([a, 1])
    return [tuple(x) for x in out]


def subsingular_groups(inv: PencilInvariants) -> tuple[tuple, tuple, tuple]:
    """Split real divisors into (group1 powers, group2 powers, roots).

    Group 1 is the lexicographically larger by (max power, count); on a tie
    the group with the smaller root value is taken as group 1.
    """
    roots = distinct_values([a for a, _ in inv.real_divisors], inv.tol)
    if len(roots) > 2 or inv.complex_divisors:
        raise ValueError("not a subsingular pencil")
    groups = [
        (r, tuple(l for a, l in inv.real_divisors if _close(a, r, inv.tol)))
        for r in roots
    ]
    groups.sort(key=lambda g: (-max(g[1]), -len(g[1]), float(g[0])))
    g1 = groups[0] if groups else (None, ())
    g2 = groups[1] if len(groups) > 1 else (None, ())
    return g1[1], g2[1], tuple(g[0] for g in groups)


def s_values(group1, group2, ks) -> tuple[Fraction, Fraction]:
    S1 = Fraction(sum(group1) - len(group2))
    S2 = (
        1
        + sum(Fraction(2 * l ** 3 + l, 6) for l in group1)
        + sum(Fraction(k * (k + 1) * (2 * k + 1), 6) for k in ks)
    )
    return S1, S2


def classify(inv: PencilInvariants) -> Verdict:
    """Decide whether the algebra of ``inv`` is an Einstein nilradical.

    The common kernel is ignored: an abelian summand does not change the
    answer.
    """
    if _is_generic(inv):
        return _classify_generic(inv)
    return _classify_subsingular(inv)


def _classify_generic(inv: PencilInvariants) -> Verdict:
    mults = root_multiplicities(inv)
    if any(l != 1 for _, l in inv.real_divisors) or any(n != 1 for *_, n in inv.complex_divisors):
        return Verdict(False, GENERIC, failed_condition=A_I)
    bound = Fraction(inv.u, 2) + inv.w
    for root, m in mults:
        if m >= bound:
            return Verdict(
                False, GENERIC, failed_condition=A_II,
                witness_hint={"root": root, "multiplicity": m},
            )
    return Verdict(True, GENERIC)


def _classify_subsingular(inv: PencilInvariants) -> Verdict:
    g1, g2, roots = subsingular_groups(inv)
    ks = inv.minimal_indices
    S1, S2 = s_values(g1, g2, ks)

    def verdict(ok, failed=None):
        return Verdict(ok, SUBSINGULAR, (len(g1), len(g2)), roots, g1, g2, S1, S2, failed)

    if any(l != 1 for l in g2):
        return verdict(False, B_NILPOTENT_L)
    if S1 == 0 and all(l == 1 for l in g1):
        return verdict(True)
    if S1 <= 0:
        return verdict(False, B_A)
    bound = 2 * S2 / S1
    if any(2 * k * k >= bound for k in ks):
        return verdict(False, B_B_K)
    if any((l * l + 1) // 2 >= bound for l in g1):
        return verdict(False, B_B_L)
    return verdict(True)


def case3_to_case2(inv: PencilInvariants) -> PencilInvariants:
    """Subsingular invariants with the same complexification.

    Each conjugate pair ((x + mu y)^2 + nu^2 y^2)^n becomes the two real
    divisors x^n and y^n (roots 0 and 1 here); minimal indices are kept.
    """
    if inv.real_divisors or not inv.complex_divisors:
        raise ValueError("expected complex divisors only")
    ns = [n for *_, n in inv.complex_divisors]
    real = tuple((Fraction(0), n) for n in ns) + tuple((Fraction(1), n) for n in ns)
    return PencilInvariants(
        real_divisors=real,
        minimal_indices=inv.minimal_indices,
        common_kernel_dim=inv.common_kernel_dim,
    )

"""Pre-Einstein derivations and eigenvalue types."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .algebra import NilsolitonCertificate, TwoStepAlgebra, derivation_basis
from .arith import scalar_to_json
from .errors import NonDiagonalTorus, NotCertified, WrongCase
from .invariants import CASE1, CASE3, PencilInvariants
from .linalg import F0, nullspace_sparse, solve, zeros


@dataclass(frozen=True, eq=False)
class PreEinsteinDerivation:
    phi: np.ndarray
    eigenvalues: tuple
    sigma: Fraction | None = None

    def to_json(self) -> dict:
        data = {
            "diagonal": [scalar_to_json(self.phi[i, i]) for i in range(self.phi.shape[0])],
            "eigenvalues": [[scalar_to_json(v), m] for v, m in self.eigenvalues],
        }
        if self.sigma is not None:
            data["sigma"] = scalar_to_json(self.sigma)
        return data


def spectrum(values) -> tuple:
    counts: dict = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return tuple(sorted(counts.items()))


def diagonal_derivations(n: TwoStepAlgebra) -> list[list]:
    """Basis of the derivations that are diagonal in the given basis, as
    lists of q + p diagonal entries.

    A diagonal map (a_1..a_q, m_1..m_p) is a derivation iff
    a_i + a_j = m_alpha whenever (J_alpha)_ij != 0.
    """
    q = n.q
    rows = []
    for a, Ja in enumerate(n.J):
        for i in range(q):
            for j in range(i + 1, q):
                if Ja[i, j] != 0:
                    rows.append({i: Fraction(1), j: Fraction(1), q + a: Fraction(-1)})
    basis = nullspace_sparse(rows, n.dim)
    out = []
    for vec in basis:
        d = [F0] * n.dim
        for k, v in vec.items():
            d[k] = v
        out.append(d)
    return out


def solve_pre_einstein(n: TwoStepAlgebra) -> PreEinsteinDerivation:
    """Pre-Einstein derivation within the derivations diagonal in the basis.

    Tr(phi psi) = Tr(psi) is imposed on the diagonal derivations (a positive
    definite Gram system) and then checked exactly against a full basis of
    Der(n). The check fails when the basis is not adapted to a maximal torus.
    """
    if not n.exact:
        raise ValueError("solve_pre_einstein needs rational bracket matrices")
    diag = diagonal_derivations(n)
    k = len(diag)
    gram = zeros(k)
    rhs = [sum(d, F0) for d in diag]
    for i in range(k):
        for j in range(i, k):
            gram[i, j] = gram[j, i] = sum((a * b for a, b in zip(diag[i], diag[j])), F0)
    c = solve(gram, rhs)
    if c is None:
        raise NonDiagonalTorus("trace system on diagonal derivations is inconsistent")
    entries = [sum((c[t] * diag[t][i] for t in range(k)), F0) for i in range(n.dim)]
    phi = zeros(n.dim)
    for i, v in enumerate(entries):
        phi[i, i] = v
    for psi in derivation_basis(n, exact=True):
        tr_psi = sum((psi[i, i] for i in range(n.dim)), F0)
        tr_phipsi = sum((entries[i] * psi[i, i] for i in range(n.dim)), F0)
        if tr_psi != tr_phipsi:
            raise NonDiagonalTorus("diagonal candidate fails the trace identity on Der(n)")
    return PreEinsteinDerivation(phi, spectrum(entries))


def case1_sigma(inv: PencilInvariants) -> Fraction:
    q = inv.q - inv.common_kernel_dim
    return Fraction(-4) / (q + 8 - sum(Fraction(1, 2 * k + 1) for k in inv.minimal_indices))


def case1_pre_einstein(inv: PencilInvariants) -> PreEinsteinDerivation:
    """Closed-form pre-Einstein derivation in the generic canonical basis.

    The torus parameters are eta = 1 + sigma on b (2 eta on the center) and
    delta_j = sigma / (2 k_j + 1) on the j-th singular block, which gives
    eta + delta_j on its first k_j basis vectors and eta - delta_j on the
    remaining k_j + 1. Diagonal entries follow the block order regular part,
    singular blocks, center. A single conjugate pair (Case3) gives the same
    torus: the pre-Einstein derivation is fixed by complex conjugation.
    """
    if inv.case_tag not in (CASE1, CASE3):
        raise WrongCase(f"closed form applies to the generic canonical basis, got {inv.case_tag}")
    if inv.common_kernel_dim:
        raise WrongCase("closed form assumes no common kernel; split it off first")
    sigma = case1_sigma(inv)
    base = 1 + sigma
    qr = 2 * sum(l for _, l in inv.real_divisors) + 4 * sum(n for *_, n in inv.complex_divisors)
    entries = [base] * qr
    for k in inv.minimal_indices:
        d = sigma / (2 * k + 1)
        entries += [base + d] * k + [base - d] * (k + 1)
    entries += [2 * base] * 2
    phi = zeros(len(entries))
    for i, v in enumerate(entries):
        phi[i, i] = v
    return PreEinsteinDerivation(phi, spectrum(entries), sigma)


def integer_type(spec) -> tuple:
    """Exact spectrum ((value, mult), ...) scaled to coprime positive integers."""
    lcm = 1
    for v, _ in spec:
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    ints = [int(v * lcm) for v, _ in spec]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    return tuple(v // g for v in ints), tuple(m for _, m in spec)


def eigenvalue_type(cert: NilsolitonCertificate, tol: float = 1e-8, max_den: int = 10 ** 6) -> tuple:
    """Spectrum of the Einstein derivation scaled to coprime positive integers.

    Returns ``(eigenvalues, multiplicities)`` sorted by eigenvalue.
    """
    if not cert.certified(tol):
        raise NotCertified("certificate residual exceeds tolerance")
    ev = np.linalg.eigvals(np.array(cert.Phi, dtype=float))
    scale = max(1.0, float(np.abs(ev).max()))
    if np.abs(ev.imag).max() > 1e-6 * scale:
        raise NotCertified("Einstein derivation has non-real eigenvalues")
    vals = sorted(ev.real)
    if vals[0] <= 0:
        raise NotCertified("Einstein derivation is not positive")
    groups: list[list] = []
    for v in vals:
        if groups and abs(v - groups[-1][0]) <= 1e-6 * scale:
            groups[-1][1] += 1
        else:
            groups.append([v, 1])
    base = groups[0][0]
    ratios = []
    for v, _ in groups:
        r = Fraction(v / base).limit_denominator(max_den)
        if abs(float(r) - v / base) > 1e-9 * max(1.0, v / base):
            raise NotCertified("eigenvalues are not rationally related")
        ratios.append(r)
    return integer_type(list(zip(ratios, (m for _, m in groups))))

"""Exact scalars, univariate polynomials over Q, and homogeneous binary forms.

Rationals are plain :class:`fractions.Fraction`. Univariate polynomials are
lists of coefficients, lowest degree first, with no trailing zeros (the zero
polynomial is ``[]``). Binary forms store the coefficient of
``x^(d-t) y^t`` at index ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .errors import Unsupported

Scalar = Union[Fraction, float]


# ---------------------------------------------------------------------------
# rationals

def to_fraction(value) -> Fraction:
    """Parse an int, Fraction or ``"p/q"`` string into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        return Fraction(value)
    raise TypeError(f"cannot convert {value!r} to a rational")


def fraction_str(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def scalar_to_json(value):
    if isinstance(value, Fraction):
        return fraction_str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return float(value)


def scalar_from_json(value):
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, int):
        return Fraction(value)
    return float(value)


def is_exact(value) -> bool:
    return isinstance(value, (Fraction, int, np.integer))


def exact_sqrt(value: Fraction) -> Fraction | None:
    """Return the rational square root of ``value`` if it has one."""
    value = Fraction(value)
    if value < 0:
        return None
    n, d = value.numerator, value.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


# ---------------------------------------------------------------------------
# univariate polynomials over Q (low degree first)

def ptrim(p: list) -> list:
    while p and p[-1] == 0:
        p.pop()
    return p


def pdeg(p: Sequence) -> int:
    return len(p) - 1


def padd(a: Sequence, b: Sequence) -> list:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] = out[i] + c
    return ptrim(out)


def psub(a: Sequence, b: Sequence) -> list:
    out = list(a) + [0] * max(0, len(b) - len(a))
    for i, c in enumerate(b):
        out[i] = out[i] - c
    return ptrim(out)


def pscale(p: Sequence, c) -> list:
    if c == 0:
        return []
    return [c * a for a in p]


def pmul(a: Sequence, b: Sequence) -> list:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return ptrim(out)


def pdivmod(a: Sequence, b: Sequence) -> tuple[list, list]:
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(a)
    db = len(b) - 1
    lead = b[-1]
    if len(r) - 1 < db:
        return [], ptrim(r)
    q = [Fraction(0)] * (len(r) - db)
    for k in range(len(r) - 1 - db, -1, -1):
        c = r[k + db]
        if c == 0:
            continue
        c = Fraction(c) / lead
        q[k] = c
        for j in range(db + 1):
            r[k + j] -= c * b[j]
    return ptrim(q), ptrim(r[:db])


def pmonic(p: Sequence) -> list:
    if not p:
        return []
    lead = Fraction(p[-1])
    return [Fraction(c) / lead for c in p]


def pgcd(a: Sequence, b: Sequence) -> list:
    """Monic gcd (zero if both arguments are zero)."""
    a, b = ptrim(list(a)), ptrim(list(b))
    while b:
        a, b = b, pdivmod(a, b)[1]
        # keep coefficients small
        b = pmonic(b)
    return pmonic(a)


def pderiv(p: Sequence) -> list:
    return ptrim([i * c for i, c in enumerate(p)][1:])


def peval(p: Sequence, x):
    acc = 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def squarefree_decomposition(p: Sequence) -> list[tuple[list, int]]:
    """Yun's algorithm: monic pairwise coprime squarefree ``s_k`` with
    ``p = lc * prod s_k**k``. Constant parts are dropped."""
    p = pmonic(p)
    if len(p) <= 1:
        return []
    out = []
    dp = pderiv(p)
    a = pgcd(p, dp)
    b = pdivmod(p, a)[0]
    c = pdivmod(dp, a)[0]
    d = psub(c, pderiv(b))
    k = 1
    while len(b) > 1:
        a = pgcd(b, d)
        if len(a) > 1:
            out.append((a, k))
        b = pdivmod(b, a)[0]
        c = pdivmod(d, a)[0]
        d = psub(c, pderiv(b))
        k += 1
    return out


# ---------------------------------------------------------------------------
# binary forms

@dataclass(frozen=True)
class BinaryForm:
    """Homogeneous polynomial in (x, y); ``coeffs[t]`` multiplies x^(d-t) y^t."""

    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) == 0:
            object.__setattr__(self, "coeffs", (Fraction(0),))
        if all(c == 0 for c in self.coeffs):
            object.__setattr__(self, "coeffs", (Fraction(0),))

    @classmethod
    def zero(cls) -> "BinaryForm":
        return cls((Fraction(0),))

    @classmethod
    def one(cls) -> "BinaryForm":
        return cls((Fraction(1),))

    @classmethod
    def x(cls) -> "BinaryForm":
        return cls((Fraction(1), Fraction(0)))

    @classmethod
    def y(cls) -> "BinaryForm":
        return cls((Fraction(0), Fraction(1)))

    @classmethod
    def linear(cls, a) -> "BinaryForm":
        """The form x + a*y."""
        return cls((Fraction(1), a))

    @classmethod
    def quadratic(cls, mu, nu) -> "BinaryForm":
        """The form (x + mu*y)^2 + (nu*y)^2."""
        return cls((Fraction(1), 2 * mu, mu * mu + nu * nu))

    @classmethod
    def from_poly(cls, p: Sequence, degree: int) -> "BinaryForm":
        """Homogenize the univariate ``p(x)`` to the given total degree."""
        if not p:
            return cls.zero()
        if len(p) - 1 > degree:
            raise ValueError("degree too small for polynomial")
        coeffs = [Fraction(0)] * (degree + 1)
        for i, c in enumerate(p):
            coeffs[degree - i] = c
        return cls(tuple(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    def y_valuation(self) -> int:
        for t, c in enumerate(self.coeffs):
            if c != 0:
                return t
        return 0

    def dehomogenize(self) -> list:
        """Return f(x, 1) as a low-first coefficient list."""
        return ptrim(list(reversed(self.coeffs)))

    def leading(self):
        for c in self.coeffs:
            if c != 0:
                return c
        return self.coeffs[0]

    def normalized(self) -> "BinaryForm":
        """Divide by the coefficient of the highest power of x present."""
        if self.is_zero():
            return self
        lead = self.leading()
        return BinaryForm(tuple(c / lead for c in self.coeffs))

    def is_pure_y_power(self) -> bool:
        return not self.is_zero() and all(c == 0 for c in self.coeffs[:-1])

    def __mul__(self, other: "BinaryForm") -> "BinaryForm":
        if self.is_zero() or other.is_zero():
            return BinaryForm.zero()
        out = [0] * (self.degree + other.degree + 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return BinaryForm(tuple(out))

    def __pow__(self, k: int) -> "BinaryForm":
        out = BinaryForm.one()
        for _ in range(k):
            out = out * self
        return out

    def scale(self, c) -> "BinaryForm":
        return BinaryForm(tuple(c * a for a in self.coeffs))

    def divmod(self, other: "BinaryForm") -> tuple["BinaryForm", "BinaryForm"]:
        """Division in x with y = 1, re-homogenized; remainder zero iff exact."""
        if other.is_zero():
            raise ZeroDivisionError("division by the zero form")
        if self.is_zero():
            return BinaryForm.zero(), BinaryForm.zero()
        ya, yb = self.y_valuation(), other.y_valuation()
        if yb > ya:
            return BinaryForm.zero(), self
        q, r = pdivmod(self.dehomogenize(), other.dehomogenize())
        qdeg = self.degree - other.degree
        if r:
            return BinaryForm.from_poly(q, qdeg) if q else BinaryForm.zero(), \
                BinaryForm.from_poly(r, self.degree)
        return BinaryForm.from_poly(q, qdeg), BinaryForm.zero()

    def divides(self, other: "BinaryForm") -> bool:
        """True when ``self`` divides ``other`` exactly."""
        if self.is_zero():
            return other.is_zero()
        if other.is_zero():
            return True
        return other.divmod(self)[1].is_zero()

    def __call__(self, x, y):
        d = self.degree
        return sum(c * x ** (d - t) * y ** t for t, c in enumerate(self.coeffs))

    def to_json(self) -> list:
        return [scalar_to_json(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, data: Sequence) -> "BinaryForm":
        return cls(tuple(scalar_from_json(c) for c in data))

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        d = self.degree
        terms = []
        for t, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "*".join(
                s for s in (_power("x", d - t), _power("y", t)) if s
            )
            coef = fraction_str(c) if is_exact(c) else repr(float(c))
            if not mono:
                terms.append(coef)
            elif c == 1:
                terms.append(mono)
            elif c == -1:
                terms.append("-" + mono)
            else:
                terms.append(f"{coef}*{mono}")
        return " + ".join(terms).replace("+ -", "- ")


def _power(var: str, k: int) -> str:
    if k == 0:
        return ""
    return var if k == 1 else f"{var}^{k}"


def gcd_forms(a: BinaryForm, b: BinaryForm) -> BinaryForm:
    """Normalized gcd of two binary forms; ``gcd(0, 0) = 0``."""
    if a.is_zero():
        return b.normalized()
    if b.is_zero():
        return a.normalized()
    yv = min(a.y_valuation(), b.y_valuation())
    g = pgcd(a.dehomogenize(), b.dehomogenize())
    return BinaryForm.from_poly(g, len(g) - 1 + yv).normalized()


# ---------------------------------------------------------------------------
# factorization

def _rationalize(value: float, target) -> Fraction | None:
    """Try small-denominator rationals near ``value`` that satisfy ``target``."""
    if not math.isfinite(value):
        return None
    for bound in (1, 10, 100, 1000, 10**4, 10**6, 10**9):
        cand = Fraction(value).limit_denominator(bound)
        if target(cand):
            return cand
    return None


def _float_roots(p: Sequence) -> np.ndarray:
    coeffs = [float(c) for c in reversed(p)]
    if len(coeffs) <= 1:
        return np.array([], dtype=complex)
    return np.roots(coeffs)


def _cluster(values: list[tuple[complex, int]], tol: float) -> list[tuple[complex, int]]:
    out: list[list] = []
    for z, k in values:
        for item in out:
            if abs(item[0] - z) <= tol * max(1.0, abs(z)):
                item[0] = (item[0] * item[1] + z * k) / (item[1] + k)
                item[1] += k
                break
        else:
            out.append([z, k])
    return [(z, k) for z, k in out]


def _small_exact(rest: list) -> list[tuple[BinaryForm, tuple]]:
    """Exact split of a monic polynomial of degree at most two."""
    if len(rest) <= 1:
        return []
    if len(rest) == 2:
        r = -rest[0] / rest[1]
        return [(BinaryForm.linear(-r), ("real", -r))]
    c, b = rest[0] / rest[2], rest[1] / rest[2]
    disc = b * b - 4 * c
    if disc < 0:
        mu = b / 2
        return [(BinaryForm((Fraction(1), b, c)), ("complex", mu, c - mu * mu))]
    sq = exact_sqrt(disc)
    if sq is None:
        raise Unsupported("quadratic factor has irrational real roots; use numeric mode")
    out = []
    for z in ((-b + sq) / 2, (-b - sq) / 2):
        out.append((BinaryForm.linear(-z), ("real", -z)))
    return out


def _exact_split(s: list) -> list[tuple[BinaryForm, tuple]]:
    """Split a squarefree polynomial into verified rational linear and
    rational irreducible-quadratic factors. Raises Unsupported otherwise.

    Factors are peeled off from floating-point root guesses that are
    rationalized and verified by exact division; the last factor of degree
    at most two is split in closed form.
    """
    out = []
    rest = list(s)
    while len(rest) > 3:
        roots = _float_roots(rest)
        scale = max(1.0, max((abs(z) for z in roots), default=1.0))
        found = None
        for z in roots:
            if abs(z.imag) <= 1e-7 * scale:
                r = _rationalize(z.real, lambda c: peval(rest, c) == 0)
                if r is not None:
                    found = ([-r, Fraction(1)], (BinaryForm.linear(-r), ("real", -r)))
                    break
            elif z.imag > 0:
                for bound in (1, 10, 100, 1000, 10**4, 10**6, 10**9):
                    b = Fraction(-2 * z.real).limit_denominator(bound)
                    c = Fraction(abs(z) ** 2).limit_denominator(bound * bound)
                    if 4 * c > b * b and not pdivmod(rest, [c, b, Fraction(1)])[1]:
                        mu = b / 2
                        found = ([c, b, Fraction(1)],
                                 (BinaryForm((Fraction(1), b, c)), ("complex", mu, c - mu * mu)))
                        break
                if found:
                    break
        if found is None:
            raise Unsupported(
                f"factor of degree {len(rest) - 1} has irrational roots; use numeric mode"
            )
        rest = pdivmod(rest, found[0])[0]
        out.append(found[1])
    return out + _small_exact(rest)


def root_data(f: BinaryForm, mode: str = "exact", tol: float = 1e-9):
    """Roots of ``f`` as tagged tuples with multiplicities.

    Returns a list of ``(tag, multiplicity)`` where ``tag`` is ``("inf",)``
    for the factor y, ``("real", a)`` for x + a*y and ``("complex", mu, nu2)``
    for (x + mu*y)^2 + nu2*y^2 (nu2 > 0).
    """
    if f.is_zero():
        raise ValueError("cannot factor the zero form")
    out = []
    yv = f.y_valuation()
    if yv:
        out.append((("inf",), yv))
    p = f.dehomogenize()
    parts = squarefree_decomposition(p)
    if mode == "exact":
        for s, k in parts:
            for _, tag in _exact_split(s):
                out.append((tag, k))
        return out
    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")
    found = []
    for s, k in parts:
        for z in _float_roots(s):
            found.append((complex(z), k))
    clustered = _cluster(found, tol)
    pairs = []
    for z, k in clustered:
        scale = max(1.0, abs(z))
        if abs(z.imag) <= max(tol, 1e-7) * scale:
            out.append((("real", -z.real), k))
        elif z.imag > 0:
            pairs.append((z, k))
    for z, k in pairs:
        out.append((("complex", -z.real, z.imag ** 2), k))
    return out


def _tag_form(tag) -> BinaryForm:
    if tag[0] == "inf":
        return BinaryForm.y()
    if tag[0] == "real":
        return BinaryForm.linear(tag[1])
    mu, nu2 = tag[1], tag[2]
    return BinaryForm((1, 2 * mu, mu * mu + nu2))


def factor_form(f: BinaryForm, mode: str = "exact", tol: float = 1e-9) -> list[tuple[BinaryForm, int]]:
    """Factor a nonzero binary form into real-irreducible factors.

    In exact mode each factor is ``y``, ``x + a*y`` with rational ``a``, or
    ``x^2 + 2*mu*x*y + (mu^2 + nu^2)*y^2`` with rational ``mu`` and ``nu^2``.
    Anything else raises :class:`Unsupported`. In numeric mode roots come from
    floating point root finding, clustered with relative tolerance ``tol``.
    """
    return [(_tag_form(tag), k) for tag, k in root_data(f, mode, tol)]


def product_of_factors(factors: Sequence[tuple[BinaryForm, int]]) -> BinaryForm:
    out = BinaryForm.one()
    for g, k in factors:
        out = out * g ** k
    return out

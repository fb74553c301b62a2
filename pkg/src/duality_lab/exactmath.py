"""Exact rational polynomials in one and two variables, plus moment functionals.

Scalars are :class:`fractions.Fraction`; nothing here ever rounds.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterable, Union

Rational = Fraction
Number = Union[int, Fraction]


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and strings like ``"1/3"`` to an exact Fraction.

    Floats are rejected so that a stray ``0.1`` never leaks rounding into an
    identity check.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction("".join(value.split()))
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def rational_str(value) -> str:
    """Canonical "num/den" text for a rational, used in configs and reports."""
    q = Fraction(value)
    return f"{q.numerator}/{q.denominator}"


def pochhammer(a: Number, k: int) -> Fraction:
    """Rising factorial (a)_k = a (a+1) ... (a+k-1)."""
    out = Fraction(1)
    a = as_rational(a)
    for i in range(k):
        out *= a + i
    return out


def _trim(coeffs: Iterable[Fraction]) -> tuple[Fraction, ...]:
    out = list(coeffs)
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


@dataclass(frozen=True)
class Poly1:
    """Dense univariate polynomial; ``coeffs[i]`` multiplies ``x**i``."""

    coeffs: tuple[Fraction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim(as_rational(c) for c in self.coeffs))

    @classmethod
    def const(cls, c: Number) -> Poly1:
        return cls((c,))

    @classmethod
    def x(cls) -> Poly1:
        return cls((0, 1))

    @classmethod
    def linear(cls, c0: Number, c1: Number) -> Poly1:
        return cls((c0, c1))

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def leading(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    def __call__(self, x):
        acc = 0 * x if not isinstance(x, (int, Fraction)) else Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + (c if isinstance(x, (int, Fraction)) else float(c))
        return acc

    def __add__(self, other) -> Poly1:
        other = _lift1(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly1(tuple(self.coeff(i) + other.coeff(i) for i in range(n)))

    __radd__ = __add__

    def __neg__(self) -> Poly1:
        return Poly1(tuple(-c for c in self.coeffs))

    def __sub__(self, other) -> Poly1:
        return self + (-_lift1(other))

    def __rsub__(self, other) -> Poly1:
        return _lift1(other) - self

    def __mul__(self, other) -> Poly1:
        if isinstance(other, (int, Fraction)):
            return Poly1(tuple(c * other for c in self.coeffs))
        other = _lift1(other)
        if self.is_zero() or other.is_zero():
            return Poly1()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly1(tuple(out))

    __rmul__ = __mul__

    def __truediv__(self, c: Number) -> Poly1:
        c = as_rational(c)
        return Poly1(tuple(a / c for a in self.coeffs))

    def __pow__(self, k: int) -> Poly1:
        out = Poly1.const(1)
        for _ in range(k):
            out = out * self
        return out

    def shift(self, c: Number) -> Poly1:
        return poly_shift(self, c)

    def derivative(self, order: int = 1) -> Poly1:
        return poly_derivative(self, order)

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            terms.append(f"{c}" if i == 0 else f"{c}*x^{i}")
        return " + ".join(terms)


def _lift1(value) -> Poly1:
    if isinstance(value, Poly1):
        return value
    return Poly1.const(as_rational(value))


def poly_shift(f: Poly1, c: Number) -> Poly1:
    """Return f(x + c), expanded with the binomial theorem."""
    c = as_rational(c)
    if c == 0:
        return f
    n = len(f.coeffs)
    out = [Fraction(0)] * n
    for a, fa in enumerate(f.coeffs):
        if fa == 0:
            continue
        cpow = Fraction(1)
        for i in range(a, -1, -1):
            out[i] += comb(a, i) * cpow * fa
            cpow *= c
    return Poly1(tuple(out))


def poly_derivative(f: Poly1, order: int = 1) -> Poly1:
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    coeffs = list(f.coeffs)
    for _ in range(order):
        coeffs = [i * c for i, c in enumerate(coeffs)][1:]
    return Poly1(tuple(coeffs))


def poly_divmod(f: Poly1, g: Poly1) -> tuple[Poly1, Poly1]:
    """Quotient and remainder of f by nonzero g."""
    if g.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    rem = list(f.coeffs)
    quo = [Fraction(0)] * max(len(rem) - g.degree, 0)
    for shift in range(len(rem) - 1 - g.degree, -1, -1):
        c = rem[shift + g.degree] / g.leading
        quo[shift] = c
        if c:
            for i, gc in enumerate(g.coeffs):
                rem[shift + i] -= c * gc
    return Poly1(tuple(quo)), Poly1(tuple(rem))


def falling_factorial(k: int) -> Poly1:
    """x (x-1) ... (x-k+1) as a polynomial."""
    out = Poly1.const(1)
    for i in range(k):
        out = out * Poly1.linear(-i, 1)
    return out


@dataclass(frozen=True)
class Poly2:
    """Dense bivariate polynomial; ``coeffs[a][b]`` multiplies ``x1**a * x2**b``.

    The matrix is rectangular and trimmed: no trailing all-zero rows or columns.
    """

    coeffs: tuple[tuple[Fraction, ...], ...] = ()

    def __post_init__(self):
        rows = [[as_rational(c) for c in row] for row in self.coeffs]
        width = max((len(r) for r in rows), default=0)
        rows = [r + [Fraction(0)] * (width - len(r)) for r in rows]
        while rows and not any(rows[-1]):
            rows.pop()
        while width and not any(r[width - 1] for r in rows):
            width -= 1
        object.__setattr__(self, "coeffs", tuple(tuple(r[:width]) for r in rows))

    @classmethod
    def const(cls, c: Number) -> Poly2:
        return cls(((c,),))

    @classmethod
    def x1(cls) -> Poly2:
        return cls(((0,), (1,)))

    @classmethod
    def x2(cls) -> Poly2:
        return cls(((0, 1),))

    @classmethod
    def outer(cls, f: Poly1, g: Poly1) -> Poly2:
        """The separable product f(x1) g(x2)."""
        return cls(tuple(tuple(a * b for b in g.coeffs) for a in f.coeffs))

    @classmethod
    def from_dict(cls, terms: dict) -> Poly2:
        if not terms:
            return cls()
        d1 = max(a for a, _ in terms) + 1
        d2 = max(b for _, b in terms) + 1
        rows = [[Fraction(0)] * d2 for _ in range(d1)]
        for (a, b), c in terms.items():
            rows[a][b] += as_rational(c)
        return cls(tuple(tuple(r) for r in rows))

    @property
    def shape(self) -> tuple[int, int]:
        if not self.coeffs:
            return (0, 0)
        return (len(self.coeffs), len(self.coeffs[0]))

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, a: int, b: int) -> Fraction:
        d1, d2 = self.shape
        if 0 <= a < d1 and 0 <= b < d2:
            return self.coeffs[a][b]
        return Fraction(0)

    def terms(self) -> dict[tuple[int, int], Fraction]:
        """Nonzero coefficients keyed by exponent pair."""
        return {
            (a, b): c
            for a, row in enumerate(self.coeffs)
            for b, c in enumerate(row)
            if c != 0
        }

    def __call__(self, x1, x2):
        exact = isinstance(x1, (int, Fraction)) and isinstance(x2, (int, Fraction))
        acc = Fraction(0) if exact else 0.0
        for row in reversed(self.coeffs):
            inner = Fraction(0) if exact else 0.0
            for c in reversed(row):
                inner = inner * x2 + (c if exact else float(c))
            acc = acc * x1 + inner
        return acc

    def __add__(self, other) -> Poly2:
        other = _lift2(other)
        d1 = max(self.shape[0], other.shape[0])
        d2 = max(self.shape[1], other.shape[1])
        return Poly2(
            tuple(
                tuple(self.coeff(a, b) + other.coeff(a, b) for b in range(d2))
                for a in range(d1)
            )
        )

    __radd__ = __add__

    def __neg__(self) -> Poly2:
        return Poly2(tuple(tuple(-c for c in row) for row in self.coeffs))

    def __sub__(self, other) -> Poly2:
        return self + (-_lift2(other))

    def __rsub__(self, other) -> Poly2:
        return _lift2(other) - self

    def __mul__(self, other) -> Poly2:
        if isinstance(other, (int, Fraction)):
            return Poly2(tuple(tuple(c * other for c in row) for row in self.coeffs))
        other = _lift2(other)
        if self.is_zero() or other.is_zero():
            return Poly2()
        (p1, p2), (q1, q2) = self.shape, other.shape
        out = [[Fraction(0)] * (p2 + q2 - 1) for _ in range(p1 + q1 - 1)]
        other_terms = other.terms()
        for (a, b), c in self.terms().items():
            for (a2, b2), c2 in other_terms.items():
                out[a + a2][b + b2] += c * c2
        return Poly2(tuple(tuple(r) for r in out))

    __rmul__ = __mul__

    def shift(self, c1: Number, c2: Number) -> Poly2:
        """Return F(x1 + c1, x2 + c2)."""
        c1, c2 = as_rational(c1), as_rational(c2)
        d1, d2 = self.shape
        rows = [list(r) for r in self.coeffs]
        if c1 != 0:
            new = [[Fraction(0)] * d2 for _ in range(d1)]
            for a in range(d1):
                for i in range(a + 1):
                    w = comb(a, i) * c1 ** (a - i)
                    for b in range(d2):
                        if rows[a][b]:
                            new[i][b] += w * rows[a][b]
            rows = new
        if c2 != 0:
            new = [[Fraction(0)] * d2 for _ in range(d1)]
            for b in range(d2):
                for j in range(b + 1):
                    w = comb(b, j) * c2 ** (b - j)
                    for a in range(d1):
                        if rows[a][b]:
                            new[a][j] += w * rows[a][b]
            rows = new
        return Poly2(tuple(tuple(r) for r in rows))

    def partial(self, axis: int, order: int = 1) -> Poly2:
        """Formal partial derivative in x1 (axis 0) or x2 (axis 1)."""
        out = self
        for _ in range(order):
            if axis == 0:
                out = Poly2(
                    tuple(
                        tuple(a * c for c in row) for a, row in enumerate(out.coeffs)
                    )[1:]
                )
            elif axis == 1:
                out = Poly2(
                    tuple(tuple(b * c for b, c in enumerate(row))[1:] for row in out.coeffs)
                )
            else:
                raise ValueError("axis must be 0 or 1")
        return out

    def reduce(self, axis: int, modulus: Poly1) -> Poly2:
        """Remainder of F, viewed as a polynomial in x1 (axis 0) or x2 (axis 1), by ``modulus``."""
        F = self if axis == 0 else self.swap()
        d1, d2 = F.shape
        cols = []
        for b in range(d2):
            _, rem = poly_divmod(Poly1(tuple(F.coeffs[a][b] for a in range(d1))), modulus)
            cols.append(rem.coeffs)
        height = max((len(c) for c in cols), default=0)
        rows = tuple(
            tuple(cols[b][a] if a < len(cols[b]) else 0 for b in range(d2)) for a in range(height)
        )
        out = Poly2(rows)
        return out if axis == 0 else out.swap()

    def swap(self) -> Poly2:
        """Exchange the roles of x1 and x2."""
        if self.is_zero():
            return self
        return Poly2(tuple(zip(*self.coeffs)))

    def __str__(self) -> str:
        terms = self.terms()
        if not terms:
            return "0"
        return " + ".join(f"{c}*x1^{a}*x2^{b}" for (a, b), c in sorted(terms.items()))


def _lift2(value) -> Poly2:
    if isinstance(value, Poly2):
        return value
    return Poly2.const(as_rational(value))


# ---------------------------------------------------------------------------
# moment functionals of the stationary marginals

MEASURE_KINDS = ("Poisson", "Binomial", "NegativeBinomial", "GaussianHalf", "Gamma", "BetaSym")


@dataclass(frozen=True)
class MomentFunctional:
    """A normalized measure known through its exact raw moments.

    ``params`` holds the measure parameters as Fractions, in the order used by
    the constructor helpers below (e.g. ``(two_j, p)`` for Binomial).
    """

    kind: str
    params: tuple[Fraction, ...] = ()

    def __post_init__(self):
        if self.kind not in MEASURE_KINDS:
            raise ValueError(f"unknown measure kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(as_rational(p) for p in self.params))
        _validate_measure(self.kind, self.params)

    def moment(self, r: int) -> Fraction:
        return measure_moments(self, r)

    def moments(self, upto: int) -> list[Fraction]:
        return [measure_moments(self, r) for r in range(upto + 1)]


def _check_prob(p: Fraction) -> None:
    if not 0 < p < 1:
        raise ValueError("p must lie in (0,1)")


def _validate_measure(kind: str, params: tuple[Fraction, ...]) -> None:
    expected = {"Poisson": 1, "Binomial": 2, "NegativeBinomial": 2,
                "GaussianHalf": 0, "Gamma": 1, "BetaSym": 1}[kind]
    if len(params) != expected:
        raise ValueError(f"{kind} takes {expected} parameter(s), got {len(params)}")
    if kind == "Poisson" and params[0] <= 0:
        raise ValueError("lambda must be positive")
    if kind == "Binomial":
        two_j, p = params
        if two_j.denominator != 1 or two_j <= 0:
            raise ValueError("two_j must be a positive integer")
        _check_prob(p)
    if kind == "NegativeBinomial":
        if params[0] <= 0:
            raise ValueError("two_k must be positive")
        _check_prob(params[1])
    if kind in ("Gamma", "BetaSym") and params[0] <= 0:
        raise ValueError("two_k must be positive")


def Poisson(lam: Number) -> MomentFunctional:
    return MomentFunctional("Poisson", (lam,))


def Binomial(two_j: Number, p: Number) -> MomentFunctional:
    return MomentFunctional("Binomial", (two_j, p))


def NegativeBinomial(two_k: Number, p: Number) -> MomentFunctional:
    """pmf C(2k+x-1, x) p^x (1-p)^(2k) on the non-negative integers."""
    return MomentFunctional("NegativeBinomial", (two_k, p))


def GaussianHalf() -> MomentFunctional:
    """Centered Gaussian with variance 1/2, density exp(-x^2)/sqrt(pi)."""
    return MomentFunctional("GaussianHalf", ())


def Gamma(two_k: Number) -> MomentFunctional:
    """Gamma with shape 2k and unit scale."""
    return MomentFunctional("Gamma", (two_k,))


def BetaSym(two_k: Number) -> MomentFunctional:
    """Beta(2k, 2k) on [0, 1]."""
    return MomentFunctional("BetaSym", (two_k,))


@lru_cache(maxsize=None)
def stirling2(r: int, k: int) -> int:
    if r == k:
        return 1
    if k == 0 or k > r:
        return 0
    return k * stirling2(r - 1, k) + stirling2(r - 1, k - 1)


def _from_factorial_moments(r: int, fact) -> Fraction:
    return sum((stirling2(r, k) * fact(k) for k in range(r + 1)), Fraction(0))


@lru_cache(maxsize=4096)
def measure_moments(m: MomentFunctional, r: int) -> Fraction:
    """Exact r-th raw moment of ``m``."""
    if r < 0:
        raise ValueError("moment order must be non-negative")
    kind, params = m.kind, m.params
    if kind == "Poisson":
        lam = params[0]
        return _from_factorial_moments(r, lambda k: lam**k)
    if kind == "Binomial":
        n, p = int(params[0]), params[1]
        return _from_factorial_moments(r, lambda k: pochhammer(n - k + 1, k) * p**k)
    if kind == "NegativeBinomial":
        two_k, p = params
        ratio = p / (1 - p)
        return _from_factorial_moments(r, lambda k: pochhammer(two_k, k) * ratio**k)
    if kind == "GaussianHalf":
        if r % 2:
            return Fraction(0)
        half = r // 2
        dfact = 1
        for i in range(1, r, 2):
            dfact *= i
        return Fraction(dfact, 2**half)
    if kind == "Gamma":
        return pochhammer(params[0], r)
    if kind == "BetaSym":
        two_k = params[0]
        return pochhammer(two_k, r) / pochhammer(2 * two_k, r)
    raise AssertionError(kind)


def inner_product(f: Poly1, g: Poly1, m: MomentFunctional) -> Fraction:
    """<f, g> = sum_ij f_i g_j m_{i+j}."""
    total = Fraction(0)
    for i, a in enumerate(f.coeffs):
        if a == 0:
            continue
        for j, b in enumerate(g.coeffs):
            if b:
                total += a * b * measure_moments(m, i + j)
    return total


def expectation(f: Poly1, m: MomentFunctional) -> Fraction:
    return sum((c * measure_moments(m, i) for i, c in enumerate(f.coeffs)), Fraction(0))


def beta_binomial_weights(two_k: Number, total: int) -> list[Fraction]:
    """Beta-binomial(total, 2k, 2k) masses for r = 0..total."""
    two_k = as_rational(two_k)
    if two_k <= 0:
        raise ValueError("two_k must be positive")
    denom = pochhammer(2 * two_k, total) / pochhammer(1, total)
    return [
        pochhammer(two_k, r) / pochhammer(1, r)
        * pochhammer(two_k, total - r) / pochhammer(1, total - r)
        / denom
        for r in range(total + 1)
    ]


def beta_mixed_moment(two_k: Number, a: int, b: int) -> Fraction:
    """E[p^a (1-p)^b] for p ~ Beta(2k, 2k)."""
    two_k = as_rational(two_k)
    return pochhammer(two_k, a) * pochhammer(two_k, b) / pochhammer(2 * two_k, a + b)

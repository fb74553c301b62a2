"""The five classical families used as duality functions.

Polynomials are generated from their three-term recurrences
``x p_n = alpha_n p_{n+1} + beta_n p_n + gamma_n p_{n-1}`` with ``p_0 = 1`` and
``p_{-1} = 0``; every structural identity is then checked as an exact
polynomial residual.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

from .exactmath import (
    Binomial,
    Gamma,
    GaussianHalf,
    MomentFunctional,
    NegativeBinomial,
    Poisson,
    Poly1,
    as_rational,
    inner_product,
    pochhammer,
)

X = Poly1.x()


class FamilySpec:
    """Base class for a parametrized orthogonal family."""

    name: str = ""
    discrete: bool = True

    def recurrence(self, n: int) -> tuple[Fraction, Fraction, Fraction]:
        raise NotImplementedError

    def hypergeometric_data(self) -> HypergeometricData:
        raise NotImplementedError

    def closed_norm(self, n: int) -> Fraction:
        raise NotImplementedError

    def measure(self) -> MomentFunctional:
        raise NotImplementedError

    def max_degree(self) -> int | None:
        return None

    def weight(self, x: int) -> Fraction:
        """Weight at integer x, up to a constant factor (discrete families only)."""
        raise NotImplementedError(f"{self.name} has no pointwise rational weight")

    def in_support(self, x: int) -> bool:
        return x >= 0

    def raising_identity(self, seq: PolySequence, n: int) -> tuple[Poly1, Poly1]:
        """(lhs, rhs) of the family's explicit raising identity at index n."""
        raise NotImplementedError

    def params(self) -> dict[str, Fraction]:
        return {}

    def label(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{self.name}({inner})"


def _prob(p) -> Fraction:
    p = as_rational(p)
    if not 0 < p < 1:
        raise ValueError("p must lie in (0,1)")
    return p


def _positive(v, name: str) -> Fraction:
    v = as_rational(v)
    if v <= 0:
        raise ValueError(f"{name} must be positive")
    return v


@dataclass(frozen=True)
class HypergeometricData:
    """sigma, tau of the (difference-)differential equation of hypergeometric type."""

    sigma: Poly1
    tau: Poly1
    discrete: bool

    def lambda_n(self, n: int) -> Fraction:
        return -n * self.tau.coeff(1) - Fraction(n * (n - 1), 2) * self.sigma.derivative(2).coeff(0)

    def tau_n(self, n: int) -> Poly1:
        if self.discrete:
            return self.tau.shift(n) + self.sigma.shift(n) - self.sigma
        return self.tau + self.sigma.derivative() * n

    def rodrigues_denominator(self, n: int) -> Fraction:
        """prod_{k<n} (tau' + (n+k-1)/2 sigma''), so that B_n = a_n / this."""
        t1 = self.tau.coeff(1)
        s2 = self.sigma.derivative(2).coeff(0)
        out = Fraction(1)
        for k in range(n):
            out *= t1 + Fraction(n + k - 1, 2) * s2
        return out


@dataclass(frozen=True)
class Charlier(FamilySpec):
    lam: Fraction
    name = "Charlier"
    discrete = True

    def __post_init__(self):
        object.__setattr__(self, "lam", _positive(self.lam, "lambda"))

    def params(self):
        return {"lambda": self.lam}

    def recurrence(self, n):
        return -self.lam, n + self.lam, Fraction(-n)

    def hypergeometric_data(self):
        return HypergeometricData(X, Poly1.linear(self.lam, -1), True)

    def closed_norm(self, n):
        return Fraction(factorial(n)) / self.lam**n

    def measure(self):
        return Poisson(self.lam)

    def weight(self, x):
        if x < 0:
            return Fraction(0)
        return self.lam**x / factorial(x)

    def raising_identity(self, seq, n):
        c = seq[n]
        lhs = c * self.lam - X * c.shift(-1)
        return lhs, seq[n + 1] * self.lam


@dataclass(frozen=True)
class Krawtchouk(FamilySpec):
    two_j: int
    p: Fraction
    name = "Krawtchouk"
    discrete = True

    def __post_init__(self):
        tj = as_rational(self.two_j)
        if tj.denominator != 1 or tj <= 0:
            raise ValueError("two_j must be a positive integer")
        object.__setattr__(self, "two_j", int(tj))
        object.__setattr__(self, "p", _prob(self.p))

    def params(self):
        return {"two_j": Fraction(self.two_j), "p": self.p}

    def max_degree(self):
        return self.two_j

    def recurrence(self, n):
        p, tj = self.p, self.two_j
        return Fraction(n + 1), n + tj * p - 2 * n * p, p * (1 - p) * (tj - n + 1)

    def hypergeometric_data(self):
        p = self.p
        return HypergeometricData(X, Poly1.linear(self.two_j * p / (1 - p), -1 / (1 - p)), True)

    def closed_norm(self, n):
        p = self.p
        return comb(self.two_j, n) * p**n * (1 - p) ** n

    def measure(self):
        return Binomial(self.two_j, self.p)

    def in_support(self, x):
        return 0 <= x <= self.two_j

    def weight(self, x):
        if not self.in_support(x):
            return Fraction(0)
        p = self.p
        return comb(self.two_j, x) * p**x * (1 - p) ** (self.two_j - x)

    def raising_identity(self, seq, n):
        # right-hand coefficient is (n+1)/(1-p); the printed (n-1) fails already at n = 0
        p, k = self.p, seq[n]
        lhs = X * k.shift(-1) + k * (Poly1.linear(n - self.two_j, 1) * (p / (1 - p)))
        return lhs, seq[n + 1] * (Fraction(n + 1) / (1 - p))


@dataclass(frozen=True)
class Meixner(FamilySpec):
    two_k: Fraction
    p: Fraction
    name = "Meixner"
    discrete = True

    def __post_init__(self):
        object.__setattr__(self, "two_k", _positive(self.two_k, "two_k"))
        object.__setattr__(self, "p", _prob(self.p))

    def params(self):
        return {"two_k": self.two_k, "p": self.p}

    def recurrence(self, n):
        p, tk = self.p, self.two_k
        return p / (p - 1), (n + p * n + tk * p) / (1 - p), n * (n - 1 + tk) / (p - 1)

    def hypergeometric_data(self):
        p = self.p
        return HypergeometricData(X, Poly1.linear(self.two_k * p, p - 1), True)

    def closed_norm(self, n):
        return factorial(n) * pochhammer(self.two_k, n) / self.p**n

    def measure(self):
        return NegativeBinomial(self.two_k, self.p)

    def weight(self, x):
        if x < 0:
            return Fraction(0)
        return pochhammer(self.two_k, x) / factorial(x) * self.p**x

    def raising_identity(self, seq, n):
        p, m = self.p, seq[n]
        lhs = m * Poly1.linear(p * (n + self.two_k), p) - X * m.shift(-1)
        return lhs, seq[n + 1] * p


@dataclass(frozen=True)
class Hermite(FamilySpec):
    name = "Hermite"
    discrete = False

    def recurrence(self, n):
        return Fraction(1, 2), Fraction(0), Fraction(n)

    def hypergeometric_data(self):
        return HypergeometricData(Poly1.const(1), Poly1.linear(0, -2), False)

    def closed_norm(self, n):
        return Fraction(2**n * factorial(n))

    def measure(self):
        return GaussianHalf()

    def in_support(self, x):
        return True

    def raising_identity(self, seq, n):
        h = seq[n]
        return X * h * 2 - h.derivative(), seq[n + 1]


@dataclass(frozen=True)
class Laguerre(FamilySpec):
    """Generalized Laguerre polynomials of order 2k - 1."""

    two_k: Fraction
    name = "Laguerre"
    discrete = False

    def __post_init__(self):
        object.__setattr__(self, "two_k", _positive(self.two_k, "two_k"))

    def params(self):
        return {"two_k": self.two_k}

    def recurrence(self, n):
        return Fraction(-(n + 1)), 2 * n + self.two_k, -(n + self.two_k - 1)

    def hypergeometric_data(self):
        return HypergeometricData(X, Poly1.linear(self.two_k, -1), False)

    def closed_norm(self, n):
        return pochhammer(self.two_k, n) / factorial(n)

    def measure(self):
        return Gamma(self.two_k)

    def in_support(self, x):
        return x >= 0

    def raising_identity(self, seq, n):
        lag = seq[n]
        lhs = lag * Poly1.linear(self.two_k + n, -1) + X * lag.derivative()
        return lhs, seq[n + 1] * (n + 1)


@dataclass(frozen=True)
class PolySequence:
    family: FamilySpec
    polys: tuple[Poly1, ...]

    @property
    def nmax(self) -> int:
        return len(self.polys) - 1

    def __getitem__(self, n: int) -> Poly1:
        return self.polys[n]

    def __len__(self) -> int:
        return len(self.polys)

    def leading(self, n: int) -> Fraction:
        """a_n, the coefficient of x^n in p_n."""
        return self.polys[n].coeff(n)

    def subleading(self, n: int) -> Fraction:
        """b_n, the coefficient of x^(n-1) in p_n."""
        return self.polys[n].coeff(n - 1) if n >= 1 else Fraction(0)


@lru_cache(maxsize=512)
def generate(family: FamilySpec, nmax: int) -> PolySequence:
    if nmax < 0:
        raise ValueError("nmax must be non-negative")
    cap = family.max_degree()
    if cap is not None and nmax > cap:
        raise ValueError(f"{family.label()} generation is capped at n <= {cap}")
    polys = [Poly1.const(1)]
    prev = Poly1()
    for n in range(nmax):
        alpha, beta, gamma = family.recurrence(n)
        if alpha == 0:
            raise ValueError(f"alpha_{n} vanishes for {family.label()}")
        nxt = (X * polys[n] - polys[n] * beta - prev * gamma) / alpha
        prev = polys[n]
        polys.append(nxt)
    return PolySequence(family, tuple(polys))


def hypergeometric_residual(seq: PolySequence, n: int) -> Poly1:
    data = seq.family.hypergeometric_data()
    y = seq[n]
    lam = data.lambda_n(n)
    if data.discrete:
        delta = y.shift(1) - y
        delta_nabla = y.shift(1) - y * 2 + y.shift(-1)
        return data.sigma * delta_nabla + data.tau * delta + y * lam
    return data.sigma * y.derivative(2) + data.tau * y.derivative() + y * lam


def raising_residual(seq: PolySequence, n: int) -> Poly1:
    """lhs - rhs of the family's explicit raising identity."""
    if not 0 <= n <= seq.nmax - 1:
        raise ValueError(f"raising identity at n={n} needs p_(n+1); have nmax={seq.nmax}")
    lhs, rhs = seq.family.raising_identity(seq, n)
    return lhs - rhs


def generic_raising_residual(seq: PolySequence, n: int) -> Poly1:
    """R p_n - r_n p_{n+1} with R and r_n built from sigma, tau and the Rodrigues constants."""
    if not 0 <= n <= seq.nmax - 1:
        raise ValueError(f"raising operator at n={n} needs p_(n+1); have nmax={seq.nmax}")
    data = seq.family.hypergeometric_data()
    y = seq[n]
    lam = data.lambda_n(n)
    tau_n = data.tau_n(n)
    slope = tau_n.coeff(1)
    if data.discrete:
        image = tau_n * y * lam - data.sigma * (y - y.shift(-1)) * (n * slope)
    else:
        image = tau_n * y * lam - data.sigma * y.derivative() * (n * slope)
    b_n = seq.leading(n) / data.rodrigues_denominator(n)
    b_next = seq.leading(n + 1) / data.rodrigues_denominator(n + 1)
    r_n = lam * b_n / b_next
    return image - seq[n + 1] * r_n


def closed_norm(family: FamilySpec, n: int) -> Fraction:
    cap = family.max_degree()
    if n < 0 or (cap is not None and n > cap):
        raise ValueError(f"norm index {n} out of range for {family.label()}")
    return family.closed_norm(n)


def orthogonality_check(seq: PolySequence, m: MomentFunctional, n: int, m_idx: int) -> Fraction:
    return inner_product(seq[n], seq[m_idx], m)


def rodrigues_value(family: FamilySpec, n: int, x: int) -> Fraction:
    """Evaluate B_n / rho(x) * nabla^n [rho(x+n) prod_{k=1..n} sigma(x+k)] exactly."""
    if not family.discrete:
        raise ValueError("pointwise Rodrigues evaluation needs a discrete family")
    if not family.in_support(x):
        raise ValueError(f"x={x} outside the support of {family.label()}")
    cap = family.max_degree()
    if cap is not None and n > cap:
        raise ValueError(f"n={n} exceeds the degree cap {cap}")
    data = family.hypergeometric_data()

    def inner(y: int) -> Fraction:
        w = family.weight(y + n)
        if w == 0:
            return w
        for k in range(1, n + 1):
            w *= data.sigma(Fraction(y + k))
        return w

    total = sum(((-1) ** i * comb(n, i) * inner(x - i) for i in range(n + 1)), Fraction(0))
    a_n = Fraction(1)
    for k in range(n):
        a_n /= family.recurrence(k)[0]
    b_n = a_n / data.rodrigues_denominator(n)
    return b_n * total / family.weight(x)


def make_family(name: str, **params) -> FamilySpec:
    """Build a family from a case-insensitive name and keyword parameters."""
    key = name.lower()
    if key == "charlier":
        return Charlier(params["lambda"])
    if key == "krawtchouk":
        return Krawtchouk(params["two_j"], params["p"])
    if key == "meixner":
        return Meixner(params["two_k"], params["p"])
    if key == "hermite":
        return Hermite()
    if key == "laguerre":
        return Laguerre(params["two_k"])
    raise ValueError(f"unknown family {name!r}")

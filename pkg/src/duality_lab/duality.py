"""Normalized duality functions and exact certification of generator duality."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Callable, Sequence

from .exactmath import (
    MomentFunctional,
    Poly1,
    Poly2,
    as_rational,
    falling_factorial,
    inner_product,
    pochhammer,
    rational_str,
)
from .orthopoly import (
    Charlier,
    FamilySpec,
    Hermite,
    Krawtchouk,
    Laguerre,
    Meixner,
    generate,
)
from .processes import (
    BEP,
    BMP,
    IRW,
    KMP,
    SEP,
    SIP,
    DualKMP,
    ProcessSpec,
    dual_side_combination,
    edge_generator_exact,
)

THEOREM = "TheoremNormalized"
HYPERGEOMETRIC = "HypergeometricForm"


def _double_factorial_odd(n: int) -> int:
    """(2n-1)!!, with the empty product for n = 0."""
    out = 1
    for i in range(1, 2 * n, 2):
        out *= i
    return out


def theorem_normalization(family: FamilySpec, n: int) -> Fraction:
    if isinstance(family, Krawtchouk):
        tj = family.two_j
        return Fraction(factorial(n) * factorial(tj - n), factorial(tj))
    if isinstance(family, Meixner):
        return 1 / pochhammer(family.two_k, n)
    if isinstance(family, Charlier):
        return Fraction(1)
    if isinstance(family, Hermite):
        return Fraction(1, _double_factorial_odd(n))
    if isinstance(family, Laguerre):
        return factorial(n) / pochhammer(family.two_k, n)
    raise TypeError(f"no duality normalization for {family!r}")


def finite_hypergeometric(upper: Sequence[Poly1], lower: Sequence[Fraction], z, terms: int) -> Poly1:
    """sum_{k<=terms} prod (a_i)_k / prod (b_i)_k * z^k / k!.

    Upper parameters and the argument ``z`` may be polynomials in x.
    """
    z = z if isinstance(z, Poly1) else Poly1.const(z)
    out = Poly1()
    for k in range(terms + 1):
        num = Poly1.const(1)
        for a in upper:
            for i in range(k):
                num = num * (a + i)
        den = Fraction(factorial(k))
        for b in lower:
            den *= pochhammer(b, k)
        if den == 0:
            raise ZeroDivisionError("lower hypergeometric parameter hits a non-positive integer")
        out = out + num * z**k / den
    return out


def hypergeometric_form(family: FamilySpec, n: int) -> Poly1:
    """Duality polynomial written as a terminating hypergeometric series."""
    minus_x = Poly1.linear(0, -1)
    minus_n = Poly1.const(-n)
    if isinstance(family, Charlier):
        return finite_hypergeometric([minus_n, minus_x], [], -1 / family.lam, n)
    if isinstance(family, Krawtchouk):
        return finite_hypergeometric([minus_n, minus_x], [Fraction(-family.two_j)], 1 / family.p, n)
    if isinstance(family, Meixner):
        return finite_hypergeometric([minus_n, minus_x], [family.two_k], 1 - 1 / family.p, n)
    if isinstance(family, Laguerre):
        return finite_hypergeometric([minus_n], [family.two_k], Poly1.x(), n)
    if isinstance(family, Hermite):
        # (2x)^(2n)/(2n-1)!! * 2F0(-n, 1/2-n; ; -1/x^2), expanded term by term
        coeffs = [Fraction(0)] * (2 * n + 1)
        scale = Fraction(4**n, _double_factorial_odd(n))
        for k in range(n + 1):
            c = pochhammer(-n, k) * pochhammer(Fraction(1, 2) - n, k) * (-1) ** k / factorial(k)
            coeffs[2 * n - 2 * k] += scale * c
        return Poly1(tuple(coeffs))
    raise TypeError(f"no hypergeometric form for {family!r}")


@dataclass(frozen=True)
class DualityFamily:
    """Single-site duality functions D_n(x) for one pair.

    ``index_step`` is 2 for the momentum process, whose dual index n addresses
    the Hermite polynomial of degree 2n. ``gauge`` multiplies D_n by gauge**n.
    """

    family: FamilySpec
    representation: str = THEOREM
    gauge: Fraction = Fraction(1)
    index_step: int = 1

    def __post_init__(self):
        if self.representation not in (THEOREM, HYPERGEOMETRIC):
            raise ValueError(f"unknown representation {self.representation!r}")
        object.__setattr__(self, "gauge", as_rational(self.gauge))
        if self.gauge == 0:
            raise ValueError("gauge factor must be nonzero")

    def max_index(self) -> int | None:
        cap = self.family.max_degree()
        return None if cap is None else cap // self.index_step

    def normalization(self, n: int) -> Fraction:
        """Scalar c_n with D_n = c_n * p_(index_step * n)."""
        base = theorem_normalization(self.family, n) * self.gauge**n
        if self.representation == HYPERGEOMETRIC:
            base *= hypergeometric_gauge(self.family) ** n
        return base

    def __call__(self, n: int) -> Poly1:
        return duality_function(self, n)

    def value(self, x, n: int):
        return self(n)(x)


def hypergeometric_gauge(family: FamilySpec) -> Fraction:
    """b* with hypergeometric form = b*^n * theorem-normalized D_n.

    Read off from the n = 1 leading coefficients; the consistency tests assert
    the same factor works geometrically for every n.
    """
    step = 2 if isinstance(family, Hermite) else 1
    theo = theorem_normalization(family, 1) * generate(family, step)[step]
    return hypergeometric_form(family, 1).leading / theo.leading


@lru_cache(maxsize=8192)
def duality_function(fam: DualityFamily, n: int) -> Poly1:
    if n < 0:
        raise ValueError("duality index must be non-negative")
    cap = fam.max_index()
    if cap is not None and n > cap:
        raise ValueError(f"duality index {n} exceeds {cap} for {fam.family.label()}")
    if fam.representation == HYPERGEOMETRIC:
        return hypergeometric_form(fam.family, n) * fam.gauge**n
    degree = fam.index_step * n
    seq = generate(fam.family, max(degree, _bucket(degree, fam.family)))
    return seq[degree] * (theorem_normalization(fam.family, n) * fam.gauge**n)


def _bucket(degree: int, family: FamilySpec) -> int:
    # generate in blocks so the lru cache is reused across indices
    cap = family.max_degree()
    want = ((degree // 8) + 1) * 8
    return want if cap is None else min(want, cap)


def gauge_rescale(fam: DualityFamily, b) -> DualityFamily:
    b = as_rational(b)
    if b == 0:
        raise ValueError("gauge factor must be nonzero")
    return replace(fam, gauge=fam.gauge * b)


# ---------------------------------------------------------------------------
# duality pairs

PAIR_TAGS = ("sep-sep", "sip-sip", "irw-irw", "bmp-sip", "bep-sip", "kmp-dualkmp")

PAIR_PARAMS = {
    "sep-sep": ("two_j", "p"),
    "sip-sip": ("two_k", "p"),
    "irw-irw": ("lambda",),
    "bmp-sip": (),
    "bep-sip": ("two_k",),
    "kmp-dualkmp": ("two_k",),
}


@dataclass(frozen=True)
class DualityPair:
    """forward process, dual process and the duality functions linking them.

    ``dual_rate`` scales the dual generator. It is 4 for the momentum process:
    the edge generator (x1 d2 - x2 d1)^2 maps H_2n(x1) H_2m(x2) onto four times
    the inclusion generator with 2k = 1/2.
    """

    tag: str
    forward: ProcessSpec
    dual: ProcessSpec
    family: DualityFamily
    dual_rate: Fraction = Fraction(1)

    def with_family(self, family: DualityFamily) -> DualityPair:
        return replace(self, family=family)

    def max_index(self) -> int | None:
        return self.family.max_index()

    def params(self) -> dict[str, Fraction]:
        return self.family.family.params() if self.tag != "bmp-sip" else {}

    def D(self, x: Sequence, n: Sequence[int]):
        """Product duality function over sites; exact for rational x."""
        out = 1
        for xi, ni in zip(x, n):
            out = out * self.family(ni)(xi)
        return out


def make_pair(tag: str, **params) -> DualityPair:
    tag = tag.lower()
    if tag not in PAIR_TAGS:
        raise ValueError(f"unknown pair {tag!r}; expected one of {', '.join(PAIR_TAGS)}")
    missing = [p for p in PAIR_PARAMS[tag] if p not in params]
    if missing:
        raise ValueError(f"pair {tag} needs parameter(s): {', '.join(missing)}")
    extra = sorted(set(params) - set(PAIR_PARAMS[tag]))
    if extra:
        raise ValueError(f"pair {tag} does not take parameter(s): {', '.join(extra)}")
    if tag == "sep-sep":
        fam = Krawtchouk(params["two_j"], params["p"])
        proc = SEP(fam.two_j)
        return DualityPair(tag, proc, proc, DualityFamily(fam))
    if tag == "sip-sip":
        fam = Meixner(params["two_k"], params["p"])
        proc = SIP(fam.two_k)
        return DualityPair(tag, proc, proc, DualityFamily(fam))
    if tag == "irw-irw":
        return DualityPair(tag, IRW(), IRW(), DualityFamily(Charlier(params["lambda"])))
    if tag == "bmp-sip":
        return DualityPair(
            tag, BMP(), SIP(Fraction(1, 2)), DualityFamily(Hermite(), index_step=2), Fraction(4)
        )
    fam = Laguerre(params["two_k"])
    if tag == "bep-sip":
        return DualityPair(tag, BEP(fam.two_k), SIP(fam.two_k), DualityFamily(fam))
    return DualityPair(tag, KMP(fam.two_k), DualKMP(fam.two_k), DualityFamily(fam))


@dataclass(frozen=True)
class Residual:
    """Exact generator-duality residual on one edge.

    For the exclusion process ``value`` is reduced modulo x(x-1)...(x-2j) in
    each variable, i.e. it is the residual as a function on {0..2j}^2;
    ``unreduced`` keeps the raw polynomial difference.
    """

    value: Poly2
    pair: str
    indices: tuple[int, int]
    parameters: dict = field(default_factory=dict)
    unreduced: Poly2 | None = None

    @property
    def passed(self) -> bool:
        return self.value.is_zero()

    def to_record(self) -> dict:
        rec = {
            "pair": self.pair,
            "parameters": {k: rational_str(v) for k, v in self.parameters.items()},
            "indices": list(self.indices),
            "passed": self.passed,
        }
        if not self.passed:
            rec["residual"] = {f"{a},{b}": rational_str(c) for (a, b), c in sorted(self.value.terms().items())}
        return rec


def verify_generator_duality(pair: DualityPair, n1: int, n2: int) -> Residual:
    cap = pair.max_index()
    if min(n1, n2) < 0 or (cap is not None and max(n1, n2) > cap):
        raise ValueError(f"indices ({n1}, {n2}) not admissible for {pair.tag}")
    D = pair.family
    lhs = edge_generator_exact(pair.forward, Poly2.outer(D(n1), D(n2)))
    rhs = dual_side_combination(pair.dual, n1, n2, D) * pair.dual_rate
    raw = lhs - rhs
    if pair.forward.kind != "SEP":
        return Residual(raw, pair.tag, (n1, n2), pair.params(), raw)
    support = support_polynomial(int(pair.forward.param))
    reduced = raw.reduce(0, support).reduce(1, support)
    return Residual(reduced, pair.tag, (n1, n2), pair.params(), raw)


def support_polynomial(two_j: int) -> Poly1:
    """x (x-1) ... (x-2j), vanishing exactly on the exclusion state space."""
    return falling_factorial(two_j + 1)


# ---------------------------------------------------------------------------
# change of basis, Gram-Schmidt normalization, polynomial self-duality


def selfduality_symmetry(fam: DualityFamily, xmax: int, nmax: int) -> Fraction:
    """max |D(x, n) - D(n, x)| over integer 0 <= x <= xmax, 0 <= n <= nmax."""
    family = fam.family
    if not family.discrete:
        raise ValueError("polynomial self-duality needs a discrete family")
    if fam.representation == THEOREM and isinstance(family, (Krawtchouk, Meixner)):
        raise ValueError(
            f"{family.name} is symmetric only in the hypergeometric gauge; "
            "use representation=HypergeometricForm"
        )
    cap = family.max_degree()
    if cap is not None:
        xmax, nmax = min(xmax, cap), min(nmax, cap)
    worst = Fraction(0)
    for x in range(xmax + 1):
        for n in range(nmax + 1):
            worst = max(worst, abs(fam(n)(Fraction(x)) - fam(x)(Fraction(n))))
    return worst


def change_of_basis(fam, old_basis: Sequence[Poly1], n: int) -> list[Fraction]:
    """Coefficients d(k, n), k = 0..n, of D_n in a triangular basis."""
    if len(old_basis) < n + 1:
        raise ValueError(f"need at least {n + 1} basis polynomials")
    for k, b in enumerate(old_basis[: n + 1]):
        if b.degree != k:
            raise ValueError(f"old basis element {k} has degree {b.degree}, expected {k}")
    rest = fam(n) if callable(fam) else fam
    coeffs = [Fraction(0)] * (n + 1)
    for k in range(n, -1, -1):
        c = rest.coeff(k) / old_basis[k].leading
        coeffs[k] = c
        rest = rest - old_basis[k] * c
    if not rest.is_zero():
        raise ArithmeticError("back-substitution left a nonzero remainder")
    return coeffs


def falling_factorial_basis(nmax: int) -> list[Poly1]:
    """x!/(x-k)!, the classical duality functions of independent walkers."""
    return [falling_factorial(k) for k in range(nmax + 1)]


def gram_schmidt_normalization(
    old_duality: Callable[[int], Poly1], family: FamilySpec, measure: MomentFunctional, n: int
) -> Fraction:
    """b_n = <D_old(., n), p_n> / d_n^2."""
    old = old_duality(n)
    if old.degree != n:
        raise ValueError(f"old duality function {n} has degree {old.degree}")
    p_n = generate(family, n)[n]
    return inner_product(old, p_n, measure) / family.closed_norm(n)


# ---------------------------------------------------------------------------
# catalog

CATALOG = (
    ("self-duality", "SEP(j)", "SEP(j)", "Binomial(2j, p)", "Krawtchouk K_n(x)/binom(2j, n)", "sep-sep"),
    ("self-duality", "SIP(k)", "SIP(k)", "NegativeBinomial(2k, p)", "Meixner M_n(x) Gamma(2k)/Gamma(2k+n)", "sip-sip"),
    ("self-duality", "IRW", "IRW", "Poisson(lambda)", "Charlier C_n(x)", "irw-irw"),
    ("duality", "BMP", "SIP(1/4)", "Gaussian(0, 1/2)", "Hermite H_{2n}/(2n−1)!!", "bmp-sip"),
    ("duality", "BEP(k)", "SIP(k)", "Gamma(2k, 1)", "Laguerre n! Gamma(2k)/Gamma(2k+n) L_n^(2k-1)(x)", "bep-sip"),
    ("duality", "KMP(k)", "dual-KMP(k)", "Gamma(2k, 1)", "Laguerre n! Gamma(2k)/Gamma(2k+n) L_n^(2k-1)(x)", "kmp-dualkmp"),
)

DOMAINS = {
    "two_j": "positive integer",
    "two_k": "positive rational",
    "p": "rational in (0,1)",
    "lambda": "positive rational",
}


def list_catalog() -> str:
    lines = []
    for kind, fwd, dual, measure, fn, tag in CATALOG:
        params = ", ".join(f"{p}: {DOMAINS[p]}" for p in PAIR_PARAMS[tag]) or "none"
        lines.append(f"[{kind}] {fwd} ↔ {dual}: {fn}  | stationary {measure} | tag {tag} | params {params}")
    return "\n".join(lines)

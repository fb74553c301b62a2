from fractions import Fraction
from math import comb, factorial

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import positive_rationals, probabilities
from duality_lab.exactmath import Poly1, pochhammer
from duality_lab.grid import family_grid
from duality_lab.orthopoly import (
    Charlier,
    Hermite,
    Krawtchouk,
    Laguerre,
    Meixner,
    closed_norm,
    generate,
    generic_raising_residual,
    hypergeometric_residual,
    make_family,
    orthogonality_check,
    raising_residual,
    rodrigues_value,
)

X = Poly1.x()


# --- first polynomials from the recurrence ----------------------------------


@given(positive_rationals())
def test_charlier_first_polynomial(lam):
    assert generate(Charlier(lam), 1)[1] == (Poly1.const(lam) - X) / lam


def test_hermite_first_polynomials():
    seq = generate(Hermite(), 3)
    assert seq[1] == X * 2
    assert seq[2] == X**2 * 4 - 2
    assert seq[3] == X**3 * 8 - X * 12


@given(positive_rationals())
def test_laguerre_first_polynomial(two_k):
    assert generate(Laguerre(two_k), 1)[1] == Poly1.const(two_k) - X


@given(st.integers(1, 6), probabilities())
def test_krawtchouk_first_polynomial(two_j, p):
    assert generate(Krawtchouk(two_j, p), 1)[1] == X - two_j * p


def test_krawtchouk_generation_is_capped():
    generate(Krawtchouk(2, Fraction(1, 2)), 2)
    with pytest.raises(ValueError, match="capped"):
        generate(Krawtchouk(2, Fraction(1, 2)), 3)


@pytest.mark.parametrize(
    "ctor,args,msg",
    [
        (Krawtchouk, (2, Fraction(3, 2)), "p must lie in"),
        (Krawtchouk, (Fraction(3, 2), Fraction(1, 2)), "two_j"),
        (Meixner, (0, Fraction(1, 2)), "two_k"),
        (Charlier, (-1,), "lambda"),
        (Laguerre, (0,), "two_k"),
    ],
)
def test_family_domain_errors(ctor, args, msg):
    with pytest.raises(ValueError, match=msg):
        ctor(*args)


def test_make_family_rejects_unknown_name():
    with pytest.raises(ValueError, match="unknown family"):
        make_family("jacobi")


# --- structural identities ---------------------------------------------------


def test_documented_residual_examples():
    assert hypergeometric_residual(generate(Charlier(2), 3), 3).is_zero()
    assert hypergeometric_residual(generate(Hermite(), 2), 2).is_zero()
    assert raising_residual(generate(Hermite(), 2), 1).is_zero()
    assert raising_residual(generate(Charlier(1), 2), 1).is_zero()
    assert raising_residual(generate(Laguerre(1), 2), 1).is_zero()


def test_krawtchouk_raising_uses_n_plus_one():
    # the printed coefficient (n-1)/(1-p) leaves a nonzero residual; (n+1)/(1-p) does not
    fam = Krawtchouk(5, Fraction(1, 5))
    seq = generate(fam, 5)
    for n in range(5):
        lhs, rhs = fam.raising_identity(seq, n)
        assert lhs == rhs
    n = 2
    lhs, _ = fam.raising_identity(seq, n)
    misprint = seq[n + 1] * Fraction(n - 1) / (1 - fam.p)
    assert lhs != misprint


def _family_ids(case):
    name, params = case
    return name + "-" + "-".join(f"{k}{v}" for k, v in params.items())


@pytest.mark.parametrize("case", family_grid(), ids=_family_ids)
def test_structural_identities_on_grid(case):
    fam = make_family(case[0], **case[1])
    cap = fam.max_degree()
    top = 11 if cap is None else cap
    seq = generate(fam, top)
    for n in range(min(10, top) + 1):
        assert hypergeometric_residual(seq, n).is_zero(), n
    for n in range(top):
        assert raising_residual(seq, n).is_zero(), n
        assert generic_raising_residual(seq, n).is_zero(), n


# --- norms and orthogonality -------------------------------------------------


def _paper_norm(name, params, n):
    if name == "krawtchouk":
        return comb(int(params["two_j"]), n) * params["p"] ** n * (1 - params["p"]) ** n
    if name == "meixner":
        return factorial(n) * pochhammer(params["two_k"], n) / params["p"] ** n
    if name == "charlier":
        return Fraction(factorial(n)) / params["lambda"] ** n
    if name == "hermite":
        return Fraction(2**n * factorial(n))
    return pochhammer(params["two_k"], n) / factorial(n)


def test_documented_norms():
    assert closed_norm(Krawtchouk(2, Fraction(1, 2)), 1) == Fraction(1, 2)
    assert closed_norm(Hermite(), 2) == 8
    assert closed_norm(Charlier(Fraction(1, 3)), 0) == 1


@pytest.mark.parametrize("case", family_grid(), ids=_family_ids)
def test_closed_norm_matches_stated_formula(case):
    name, params = case
    fam = make_family(name, **params)
    top = 10 if fam.max_degree() is None else min(10, fam.max_degree())
    for n in range(top + 1):
        assert closed_norm(fam, n) == _paper_norm(name, params, n)


def test_documented_orthogonality_values():
    seq = generate(Charlier(1), 1)
    assert orthogonality_check(seq, Charlier(1).measure(), 1, 0) == 0
    assert orthogonality_check(generate(Hermite(), 1), Hermite().measure(), 1, 1) == 2
    k = Krawtchouk(2, Fraction(1, 2))
    assert orthogonality_check(generate(k, 2), k.measure(), 2, 1) == 0


@given(st.integers(1, 5), probabilities(), st.integers(0, 5), st.integers(0, 5))
def test_krawtchouk_orthogonality_property(two_j, p, n, m):
    fam = Krawtchouk(two_j, p)
    n, m = min(n, two_j), min(m, two_j)
    seq = generate(fam, two_j)
    expected = closed_norm(fam, n) if n == m else 0
    assert orthogonality_check(seq, fam.measure(), n, m) == expected


# --- Rodrigues formula -------------------------------------------------------


def test_documented_rodrigues_values():
    assert rodrigues_value(Charlier(1), 1, 0) == 1
    assert rodrigues_value(Krawtchouk(2, Fraction(1, 2)), 1, 1) == 0
    assert rodrigues_value(Meixner(1, Fraction(1, 2)), 0, 3) == 1


@pytest.mark.parametrize(
    "fam",
    [Charlier(Fraction(1, 2)), Charlier(3), Krawtchouk(5, Fraction(1, 5)), Meixner(Fraction(3, 2), Fraction(4, 5))],
    ids=lambda f: f.label(),
)
def test_rodrigues_matches_recurrence(fam):
    top = 6 if fam.max_degree() is None else fam.max_degree()
    seq = generate(fam, top)
    xs = range(fam.max_degree() + 1) if fam.max_degree() is not None else range(8)
    for n in range(top + 1):
        for x in xs:
            assert rodrigues_value(fam, n, x) == seq[n](x)


def test_rodrigues_rejects_continuous_and_outside_support():
    with pytest.raises(ValueError):
        rodrigues_value(Hermite(), 1, 0)
    with pytest.raises(ValueError):
        rodrigues_value(Krawtchouk(2, Fraction(1, 2)), 1, 3)

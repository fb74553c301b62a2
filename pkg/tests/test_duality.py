from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import positive_rationals, probabilities, small_rationals
from duality_lab.duality import (
    HYPERGEOMETRIC,
    PAIR_TAGS,
    THEOREM,
    DualityFamily,
    change_of_basis,
    falling_factorial_basis,
    gauge_rescale,
    gram_schmidt_normalization,
    hypergeometric_form,
    hypergeometric_gauge,
    list_catalog,
    make_pair,
    selfduality_symmetry,
    verify_generator_duality,
)
from duality_lab.exactmath import Poisson, Poly1, Poly2
from duality_lab.grid import pair_grid
from duality_lab.orthopoly import Charlier, Hermite, Krawtchouk, Laguerre, Meixner, generate
from duality_lab.processes import edge_generator_exact

X = Poly1.x()


# --- duality functions --------------------------------------------------------


def test_documented_duality_functions():
    assert make_pair("irw-irw", **{"lambda": 2}).family(0) == Poly1.const(1)
    assert make_pair("bmp-sip").family(1) == X**2 * 4 - 2
    assert make_pair("sep-sep", two_j=2, p=Fraction(1, 2)).family(1) == (X - 1) / 2
    # L_1^(1) = 2 - x times 1! Gamma(2)/Gamma(3): this is the 2k = 2 member
    assert make_pair("bep-sip", two_k=2).family(1) == Poly1.const(1) - X / 2
    assert make_pair("bep-sip", two_k=1).family(1) == Poly1.const(1) - X


def test_bmp_uses_even_hermite_over_double_factorial():
    fam = make_pair("bmp-sip").family
    H = generate(Hermite(), 6)
    assert fam(2) == H[4] / 3
    assert fam(3) == H[6] / 15


def test_index_cap_for_exclusion():
    fam = make_pair("sep-sep", two_j=2, p=Fraction(1, 2)).family
    assert fam.max_index() == 2
    with pytest.raises(ValueError):
        fam(3)


def test_make_pair_validation():
    with pytest.raises(ValueError, match="unknown pair"):
        make_pair("sep-sip")
    with pytest.raises(ValueError, match="needs parameter"):
        make_pair("sip-sip", two_k=1)
    with pytest.raises(ValueError, match="does not take"):
        make_pair("bmp-sip", two_k=1)
    with pytest.raises(ValueError, match="p must lie in"):
        make_pair("sep-sep", two_j=2, p=Fraction(3, 2))


def test_bmp_pairs_with_quarter_inclusion_at_rate_four():
    pair = make_pair("bmp-sip")
    assert pair.dual.kind == "SIP" and pair.dual.param == Fraction(1, 2)
    assert pair.dual_rate == 4


# --- generator duality -----------------------------------------------------------


def test_documented_certifications():
    assert verify_generator_duality(make_pair("sep-sep", two_j=2, p=Fraction(1, 3)), 0, 0).passed
    assert verify_generator_duality(make_pair("irw-irw", **{"lambda": 1}), 1, 0).passed
    assert verify_generator_duality(make_pair("bmp-sip"), 1, 1).passed
    assert verify_generator_duality(make_pair("kmp-dualkmp", two_k=1), 2, 1).passed


def test_residual_is_not_vacuous():
    # dropping the dual rate factor for BMP must leave a nonzero residual
    pair = make_pair("bmp-sip")
    wrong = pair.__class__(pair.tag, pair.forward, pair.dual, pair.family, Fraction(1))
    res = verify_generator_duality(wrong, 1, 0)
    assert not res.passed
    rec = res.to_record()
    assert rec["residual"] and all("/" in v for v in rec["residual"].values())


def test_bep_drift_sign_matters():
    # the generator with the opposite drift sign does not satisfy the duality
    pair = make_pair("bep-sip", two_k=1)
    F = Poly2.outer(pair.family(1), pair.family(0))
    x1, x2 = Poly2.x1(), Poly2.x2()
    diff = F.partial(0) - F.partial(1)
    flipped = x1 * x2 * (diff.partial(0) - diff.partial(1)) + (x1 - x2) * diff
    assert flipped != edge_generator_exact(pair.forward, F)
    assert verify_generator_duality(pair, 1, 0).passed


def test_sep_residual_vanishes_on_support_only():
    pair = make_pair("sep-sep", two_j=1, p=Fraction(1, 2))
    res = verify_generator_duality(pair, 1, 1)
    assert res.passed
    assert res.unreduced is not None
    for a in range(2):
        for b in range(2):
            assert res.unreduced(a, b) == 0


def _pair_id(case):
    tag, params = case
    return tag + "".join(f"-{k}{v}" for k, v in params.items())


@pytest.mark.parametrize("case", pair_grid()[::4], ids=_pair_id)
def test_generator_duality_sample_of_grid(case):
    pair = make_pair(case[0], **case[1])
    top = 5 if pair.max_index() is None else min(5, pair.max_index())
    for n1 in range(top + 1):
        for n2 in range(top + 1):
            assert verify_generator_duality(pair, n1, n2).passed, (n1, n2)


@settings(max_examples=25)
@given(st.sampled_from(PAIR_TAGS), small_rationals(allow_zero=False), st.integers(0, 4), st.integers(0, 4))
def test_gauge_rescale_preserves_duality(tag, b, n1, n2):
    params = next(p for t, p in pair_grid() if t == tag)
    pair = make_pair(tag, **params)
    cap = pair.max_index()
    if cap is not None:
        n1, n2 = min(n1, cap), min(n2, cap)
    rescaled = pair.with_family(gauge_rescale(pair.family, b))
    assert verify_generator_duality(rescaled, n1, n2).passed


def test_gauge_rescale_identity_and_zero():
    fam = make_pair("irw-irw", **{"lambda": 3}).family
    assert gauge_rescale(fam, 1) == fam
    with pytest.raises(ValueError):
        gauge_rescale(fam, 0)


# --- gauge between representations ------------------------------------------------


def test_krawtchouk_gauge_example():
    theo = DualityFamily(Krawtchouk(2, Fraction(1, 2)))
    assert gauge_rescale(theo, -2)(1) == Poly1.const(1) - X


FAMILIES = [
    Charlier(Fraction(1, 2)),
    Charlier(3),
    Krawtchouk(5, Fraction(1, 5)),
    Krawtchouk(2, Fraction(4, 5)),
    Meixner(Fraction(3, 2), Fraction(1, 5)),
    Meixner(3, Fraction(1, 2)),
    Laguerre(Fraction(1, 2)),
    Laguerre(3),
]


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.label())
def test_gauge_is_geometric_in_n(family):
    b = hypergeometric_gauge(family)
    theo = DualityFamily(family)
    top = 8 if family.max_degree() is None else family.max_degree()
    for n in range(top + 1):
        assert gauge_rescale(theo, b)(n) == hypergeometric_form(family, n)


def test_stated_gauge_values():
    assert hypergeometric_gauge(Krawtchouk(2, Fraction(1, 5))) == -5
    assert hypergeometric_gauge(Meixner(1, Fraction(1, 2))) == 1
    assert hypergeometric_gauge(Charlier(2)) == 1
    assert hypergeometric_gauge(Laguerre(Fraction(3, 2))) == 1


def test_hermite_hypergeometric_form_matches_recurrence():
    for n in range(6):
        assert hypergeometric_form(Hermite(), n) == make_pair("bmp-sip").family(n)


# --- self-duality symmetry --------------------------------------------------------


@given(positive_rationals())
def test_charlier_symmetry(lam):
    assert selfduality_symmetry(DualityFamily(Charlier(lam)), 8, 8) == 0


@given(st.integers(1, 6), probabilities())
def test_krawtchouk_hypergeometric_symmetry(two_j, p):
    fam = DualityFamily(Krawtchouk(two_j, p), representation=HYPERGEOMETRIC)
    assert selfduality_symmetry(fam, 8, 8) == 0


@given(positive_rationals(6, 2), probabilities())
def test_meixner_hypergeometric_symmetry(two_k, p):
    fam = DualityFamily(Meixner(two_k, p), representation=HYPERGEOMETRIC)
    assert selfduality_symmetry(fam, 8, 8) == 0


def test_theorem_form_is_rejected_where_not_symmetric():
    with pytest.raises(ValueError, match="hypergeometric"):
        selfduality_symmetry(DualityFamily(Krawtchouk(2, Fraction(1, 5)), representation=THEOREM), 2, 2)
    with pytest.raises(ValueError, match="hypergeometric"):
        selfduality_symmetry(DualityFamily(Meixner(1, Fraction(1, 5))), 4, 4)
    with pytest.raises(ValueError):
        selfduality_symmetry(DualityFamily(Laguerre(1)), 4, 4)


def test_krawtchouk_theorem_form_is_not_symmetric():
    theo = DualityFamily(Krawtchouk(2, Fraction(1, 5)))
    assert theo(1)(Fraction(2)) != theo(2)(Fraction(1))


# --- change of basis and normalization ----------------------------------------


@pytest.mark.parametrize("lam", [Fraction(1, 2), Fraction(1), Fraction(3)])
def test_charlier_in_falling_factorials(lam):
    fam = DualityFamily(Charlier(lam))
    basis = falling_factorial_basis(8)
    for n in range(9):
        d = change_of_basis(fam, basis, n)
        assert [c * (-lam) ** n for c in d] == [comb(n, k) * (-lam) ** (n - k) for k in range(n + 1)]


def test_documented_change_of_basis():
    fam = DualityFamily(Charlier(1))
    basis = falling_factorial_basis(2)
    assert change_of_basis(fam, basis, 0) == [1]
    assert change_of_basis(fam, basis, 1) == [1, -1]
    assert change_of_basis(fam, basis, 2) == [1, -2, 1]


def test_change_of_basis_rejects_degenerate_basis():
    with pytest.raises(ValueError, match="degree"):
        change_of_basis(DualityFamily(Charlier(1)), [Poly1.const(1), Poly1.const(2)], 1)


@pytest.mark.parametrize("lam", [Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3)])
def test_gram_schmidt_recovers_power_of_minus_lambda(lam):
    basis = falling_factorial_basis(8)
    for n in range(9):
        b = gram_schmidt_normalization(lambda k: basis[k], Charlier(lam), Poisson(lam), n)
        assert b == (-lam) ** n


def test_gram_schmidt_and_gauge_agree():
    lam = Fraction(3)
    monic = gauge_rescale(DualityFamily(Charlier(lam)), -lam)
    for n in range(6):
        assert monic(n).leading == 1


# --- catalog ------------------------------------------------------------------


def test_catalog_rows():
    text = list_catalog()
    lines = text.splitlines()
    assert "BMP ↔ SIP(1/4): Hermite H_{2n}/(2n−1)!!" in text
    assert sum(1 for ln in lines if ln.startswith("[self-duality]")) == 3
    assert sum(1 for ln in lines if ln.startswith("[duality]")) == 3
    assert list_catalog() == text

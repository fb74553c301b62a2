from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import positive_rationals, small_rationals
from duality_lab.exactmath import Poly1, Poly2, beta_binomial_weights
from duality_lab.grid import TWO_K, balance_grid
from duality_lab.processes import (
    BEP,
    BMP,
    IRW,
    KMP,
    SEP,
    SIP,
    DualKMP,
    Graph,
    StateSpaceTooLarge,
    build_rate_matrix,
    detailed_balance_residual,
    dual_side_combination,
    edge_generator_exact,
    enumerate_sector,
    jump_kernel,
    sector_size,
)

X1, X2 = Poly2.x1(), Poly2.x2()
P2 = Graph.path(2)


# --- graphs -----------------------------------------------------------------


def test_graph_parse_round_trip():
    g = Graph.parse("# triangle\nN 3\n0 1\n1 2\n0 2\n")
    assert g.n_vertices == 3 and len(g.edges) == 3
    assert Graph.parse(g.dumps()) == g


@pytest.mark.parametrize(
    "text,msg",
    [
        ("N 2\n0 0\n", "self-loop"),
        ("N 3\n0 1\n", "not connected"),
        ("N 2\n0 1\n1 0\n", "duplicate"),
        ("N 2\n0 5\n", "missing vertex"),
        ("3\n0 1\n", "first line"),
    ],
)
def test_graph_parse_errors(text, msg):
    with pytest.raises(ValueError, match=msg):
        Graph.parse(text)


# --- edge generators ---------------------------------------------------------


def test_documented_edge_generator_images():
    assert edge_generator_exact(IRW(), X1) == X2 - X1
    assert edge_generator_exact(BMP(), X1 * X1 + X2 * X2).is_zero()
    assert edge_generator_exact(KMP(1), X1) == (X2 - X1) * Fraction(1, 2)
    assert edge_generator_exact(SEP(2), X1 + X2).is_zero()
    assert edge_generator_exact(BMP(), X1 * X1) == X2 * X2 * 2 - X1 * X1 * 2


CONSERVING = [SEP(1), SEP(2), SEP(5), IRW()] + [p(k) for k in TWO_K for p in (SIP, BEP, KMP)]


@pytest.mark.parametrize("proc", CONSERVING, ids=lambda p: p.label())
def test_generators_conserve_mass(proc):
    assert edge_generator_exact(proc, X1 + X2).is_zero()
    assert edge_generator_exact(proc, Poly2.const(1)).is_zero()


def test_bmp_conserves_energy():
    assert edge_generator_exact(BMP(), X1 * X1 + X2 * X2).is_zero()


@given(st.sampled_from(CONSERVING), st.lists(small_rationals(), min_size=1, max_size=3))
def test_generators_are_linear(proc, coeffs):
    F = Poly2.outer(Poly1(coeffs), Poly1([1, 1]))
    G = X1 * X2
    assert edge_generator_exact(proc, F + G) == edge_generator_exact(proc, F) + edge_generator_exact(proc, G)


@given(st.sampled_from([SEP(2), SIP(Fraction(3, 2)), BEP(1), KMP(Fraction(1, 2)), IRW(), BMP()]))
def test_edge_generator_commutes_with_site_swap(proc):
    F = Poly2.outer(Poly1([0, 1, 2]), Poly1([3, 0, 1]))
    assert edge_generator_exact(proc, F.swap()) == edge_generator_exact(proc, F).swap()


# --- dual side -------------------------------------------------------------


def test_documented_dual_side_examples():
    D = lambda n: Poly1.x() ** n  # noqa: E731  any family works for these identities
    k = Fraction(3, 2)
    got = dual_side_combination(SIP(k), 1, 0, D)
    want = (Poly2.outer(D(0), D(1)) - Poly2.outer(D(1), D(0))) * k
    assert got == want
    for proc in (SEP(2), SIP(1), IRW(), DualKMP(1)):
        assert dual_side_combination(proc, 0, 0, D).is_zero()
    got = dual_side_combination(DualKMP(1), 1, 0, D)
    want = (Poly2.outer(D(0), D(1)) + Poly2.outer(D(1), D(0))) * Fraction(1, 2) - Poly2.outer(D(1), D(0))
    assert got == want


@given(positive_rationals(), st.integers(0, 20))
def test_dual_kmp_weights_sum_to_one(two_k, total):
    assert sum(beta_binomial_weights(two_k, total)) == 1


# --- rate matrices -----------------------------------------------------------


def test_irw_two_site_matrix():
    Q = build_rate_matrix(IRW(), P2, 1)
    assert Q.states == [(0, 1), (1, 0)]
    assert Q.dense() == [[-1, 1], [1, -1]]


def test_sip_rate_from_full_site():
    k = Fraction(3, 2)
    Q = build_rate_matrix(SIP(k), P2, 2)
    a, b = Q.index[(2, 0)], Q.index[(1, 1)]
    assert Q.rates[(a, b)] == 2 * k


@pytest.mark.parametrize(
    "proc,g,total",
    [
        (SEP(2), Graph.path(3), 3),
        (SIP(Fraction(1, 2)), Graph.complete(3), 4),
        (IRW(), Graph.path(3), 5),
        (DualKMP(Fraction(3, 2)), Graph.path(3), 4),
    ],
    ids=lambda v: getattr(v, "label", lambda: str(v))(),
)
def test_rate_matrix_is_a_generator(proc, g, total):
    Q = build_rate_matrix(proc, g, total)
    assert all(s == 0 for s in Q.row_sums())
    assert all(r > 0 for r in Q.rates.values())
    assert all(sum(s) == total for s in Q.states)
    assert Q.states == sorted(Q.states)


def test_sep_respects_occupation_bound():
    Q = build_rate_matrix(SEP(1), Graph.path(3), 2)
    assert all(max(s) <= 1 for s in Q.states)
    with pytest.raises(ValueError, match="capacity"):
        build_rate_matrix(SEP(1), P2, 3)


def test_state_space_cap():
    with pytest.raises(StateSpaceTooLarge):
        build_rate_matrix(IRW(), Graph.path(4), 60, state_cap=1000)


@given(st.integers(1, 4), st.integers(0, 6), st.one_of(st.none(), st.integers(1, 3)))
def test_sector_size_counts_enumeration(sites, total, cap):
    assert sector_size(sites, total, cap) == len(enumerate_sector(sites, total, cap))


def test_jump_kernel_probabilities():
    Q = build_rate_matrix(SIP(1), Graph.path(3), 3)
    exits, targets, cum = jump_kernel(Q)
    assert np.allclose(exits, [float(e) for e in Q.exit_rates()])
    for c in cum:
        if len(c):
            assert np.all(np.diff(c) >= 0) and abs(c[-1] - 1) < 1e-12


def test_continuous_processes_have_no_rate_matrix():
    with pytest.raises(ValueError):
        build_rate_matrix(BEP(1), P2, 1)


# --- reversibility ----------------------------------------------------------


def test_documented_detailed_balance_examples():
    assert detailed_balance_residual(SEP(2), P2, 2, Fraction(1, 3)) == 0
    assert detailed_balance_residual(IRW(), Graph.path(3), 2, 1) == 0
    assert detailed_balance_residual(SEP(1), P2, 2, Fraction(1, 2)) == 0


def test_detailed_balance_rejects_bad_parameter():
    with pytest.raises(ValueError, match="p must lie in"):
        detailed_balance_residual(SIP(1), P2, 1, Fraction(3, 2))


def test_detailed_balance_over_grid():
    from duality_lab.campaign import _process, parse_graph

    for name, params, graph, total in balance_grid():
        proc = _process(name, params)
        param = params["lambda"] if name == "IRW" else params["p"]
        assert detailed_balance_residual(proc, parse_graph(graph), total, param) == 0


def test_wrong_marginal_breaks_detailed_balance():
    # SIP rates weighted by IRW's Poisson marginals must not balance
    from duality_lab.processes import marginal_weight

    Q = build_rate_matrix(SIP(1), Graph.path(3), 3)
    w = []
    for s in Q.states:
        prod = Fraction(1)
        for x in s:
            prod *= marginal_weight(IRW(), x, 1)
        w.append(prod)
    worst = max(abs(w[a] * r - w[b] * Q.rates.get((b, a), 0)) for (a, b), r in Q.rates.items())
    assert worst > 0

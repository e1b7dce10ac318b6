# tests/test_endos.py
import random

import pytest

from app.services.arith import fq2_field
from app.services.endos import (
    EndomorphismCounter, TraceOracle, chain_from_cycle, discrd_from_gram, eligible_degrees,
    eq1_bound, eq1_discrd, gram_from_traces, hasse_bound, reduced_trace, verify_charpoly,
)
from app.services.graph import IsogenyGraph, find_cycle_pair, random_supersingular_j
from app.services.quatorders import standard_Bp, theta_prefix
from app.utils.errors import NotAnOrder


def test_gram_of_i_and_j():
    # <1, i, j, ij> en H(-1, -31)
    G = gram_from_traces(0, 1, 0, 31, 0)
    assert G.entries[0] == [2, 0, 0, 0]
    assert G.is_positive_definite()
    assert discrd_from_gram(G) == 4 * 31


def test_dependent_pair_rejected():
    # alpha = beta = i: Trd(i*i) = -2
    G = gram_from_traces(0, 1, 0, 1, -2)
    with pytest.raises(NotAnOrder):
        discrd_from_gram(G)


def test_eq1_matches_gram():
    ta, na, tb, nb, tab = 0, 1, 0, 31, 0
    trd_hat = ta * tb - tab
    assert eq1_discrd(ta, na, tb, nb, trd_hat) == 31 * 4
    assert eq1_bound(ta, na, tb, nb) == 4 * 31


def test_hasse_bound():
    assert hasse_bound(4) == 5
    assert hasse_bound(1) == 3


def test_eligible_degrees():
    assert eligible_degrees(10) == [1, 2, 3, 4, 6, 8, 9]


def test_theta_counts_at_1728_match_standard_order():
    p = 31
    F = fq2_field(p)
    counter = EndomorphismCounter(p)
    _, O = standard_Bp(p)
    degrees = eligible_degrees(6)
    assert counter.theta(F(1728), 1) == 4
    assert counter.prefix(F(1728), 6) == theta_prefix(O, 6, degrees)


def test_cycle_trace_and_charpoly():
    g = IsogenyGraph(103)
    j0 = random_supersingular_j(g, random.Random(5), outside_Fp=True)
    pair = find_cycle_pair(j0, g, seed=2)
    alpha = chain_from_cycle(g, pair.first, "a")
    oracle = TraceOracle(alpha.base)
    t = oracle.trace(alpha)
    assert abs(t) <= hasse_bound(alpha.degree)
    assert verify_charpoly(alpha, t, trials=5)
    assert not verify_charpoly(alpha, t + 1, trials=5)
    assert reduced_trace(alpha, oracle) == t


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_eq1_bound_on_sampled_pair(seed):
    g = IsogenyGraph(103)
    j0 = random_supersingular_j(g, random.Random(seed), outside_Fp=True)
    pair = find_cycle_pair(j0, g, seed=seed)
    alpha = chain_from_cycle(g, pair.first, "a")
    beta = chain_from_cycle(g, pair.second, "b")
    tr = TraceOracle(alpha.base).pair_traces(alpha, beta)
    ta, na, tb, nb = tr["t_alpha"], tr["n_alpha"], tr["t_beta"], tr["n_beta"]
    value = eq1_discrd(ta, na, tb, nb, tr["t_ab_hat"])
    # 0 <= discrd(Lambda) <= Delta(alpha) Delta(beta) / 4
    assert 0 <= value <= eq1_bound(ta, na, tb, nb)
    G = gram_from_traces(ta, na, tb, nb, tr["t_ab"])
    try:
        d = discrd_from_gram(G)
    except NotAnOrder:
        assert value == 0
    else:
        assert value == d

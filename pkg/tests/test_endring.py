# tests/test_endring.py
import pytest
from sympy import primerange

from app.services.arith import fq2_field
from app.services.endos import EndomorphismCounter, eligible_degrees
from app.services.endring import (
    build_graph, bass_suborder_with_retries, candidate_superorders, end_ring, kohel_oracle,
    match_end_ring, path_from_special,
)
from app.services.graph import supersingular_vertices
from app.services.localglobal import all_neighbors, split_at, vertex_order
from app.services.quatorders import lattice_short_elements, standard_Bp, theta_prefix, unit_count
from app.utils.errors import DeskScaleExceeded, NoMatch, UnsupportedPrime

P = 31


def _non_special(g):
    return next(v for v in supersingular_vertices(g) if not (v == 1728))


def test_match_picks_order_of_1728(settings):
    F = fq2_field(P)
    _, O = standard_Bp(P)
    S = split_at(O, 2, 16)
    cands = [vertex_order(S, w) for w in all_neighbors((0, 0, 0), 2)] + [O]
    res = match_end_ring(F(1728), cands, settings)
    assert res.order.discrd() == P
    assert unit_count(res.order) == 4
    counter = EndomorphismCounter(P)
    assert res.theta == counter.prefix(F(1728), res.D)
    assert res.conjugate_ambiguity is False


def test_match_without_candidates(settings):
    with pytest.raises(NoMatch):
        match_end_ring(fq2_field(P)(1728), [], settings)


def test_desk_cap(settings):
    s = settings.with_overrides(desk_cap=100)
    F = fq2_field(103)
    with pytest.raises(DeskScaleExceeded):
        end_ring(F(1728), s)


def test_oracle_cap(settings):
    s = settings.with_overrides(oracle_cap=50)
    g = build_graph(103, s)
    with pytest.raises(DeskScaleExceeded):
        kohel_oracle(g.F(1728), g, s)


@pytest.mark.slow
def test_bass_certificate_and_candidates(settings):
    g = build_graph(P, settings)
    cert, attempts = bass_suborder_with_retries(_non_special(g), g, settings, seed=1)
    assert cert.bass and attempts >= 1
    assert cert.discrd % P == 0
    assert cert.discrd == cert.factored.value()
    assert cert.charpoly_ok
    cands = list(candidate_superorders(cert, settings))
    assert len(cands) == cert.n_lambda
    for O in cands:
        assert O.discrd() == P
        assert O.contains_order(cert.order)


@pytest.mark.slow
def test_end_ring_matches_kohel_oracle(settings):
    g = build_graph(P, settings)
    j = _non_special(g)
    res = end_ring(j, settings, graph=g, seed=1)
    assert res.order.discrd() == P
    assert res.embedding_ok
    assert res.certificate.order.index_in(res.order) >= 1
    O_k = kohel_oracle(j, g, settings)
    D = 30
    assert theta_prefix(res.order, D) == theta_prefix(O_k, D)
    assert res.theta == EndomorphismCounter(P).prefix(j, res.D)
    assert set(res.theta) == set(eligible_degrees(res.D))
    out = res.to_json()
    assert out["discrd"] == P and out["p"] == P


def test_oracle_counts_match_every_vertex(settings):
    g = build_graph(P, settings)
    counter = EndomorphismCounter(P)
    degrees = eligible_degrees(6)
    for j in supersingular_vertices(g):
        path = path_from_special(g, j)
        assert path.start == 1728 and path.end == j
        O = kohel_oracle(j, g, settings)
        assert O.discrd() == P
        assert theta_prefix(O, 6, degrees) == counter.prefix(j, 6)


def test_oracle_at_1728_has_the_extra_automorphism(settings):
    g = build_graph(P, settings)
    O = kohel_oracle(g.F(1728), g, settings, seed=3)
    assert unit_count(O) == 4
    i = next(e for e, n in lattice_short_elements(O.A, O.lattice, 1) if e.trd() == 0)
    assert i * i == O.A(-1)


def test_oracle_needs_3_mod_4(settings):
    g = build_graph(29, settings)
    with pytest.raises(UnsupportedPrime):
        kohel_oracle(g.F(0), g, settings)


@pytest.mark.parametrize("p", [19, 43])
def test_end_ring_small_primes(p, settings):
    g = build_graph(p, settings)
    j = _non_special(g)
    res = end_ring(j, settings, graph=g, seed=1)
    assert res.order.discrd() == p
    assert theta_prefix(res.order, 20) == theta_prefix(kohel_oracle(j, g, settings), 20)


def _sweep_cases():
    out = []
    for p in primerange(7, 201):
        if p % 4 == 3:
            out.append(int(p))
    return out


@pytest.mark.slow
@pytest.mark.parametrize("p", _sweep_cases())
def test_end_ring_equals_oracle_on_every_vertex(p, settings):
    g = build_graph(p, settings)
    D = 30
    for j in supersingular_vertices(g):
        res = end_ring(j, settings, graph=g, seed=1)
        assert theta_prefix(res.order, D) == theta_prefix(kohel_oracle(j, g, settings), D)

# tests/test_localglobal.py
import pytest

from app.services.arith import valuation
from app.services.localglobal import (
    all_neighbors, glue, local_maximal_superorders, neighbor, normalize_vertex, p_maximalize,
    q_maximal_orders, split_at, stable_lines, tree_ball, vertex_contains, vertex_order,
)
from app.services.quatorders import QuatOrder, is_bass, standard_Bp, suborder_scaled
from app.utils.errors import NotBass, RamifiedPrime

P = 31
N = 16


def _eichler(q: int, level: int):
    """O intersectado con el orden del vértice a distancia level de la raíz."""
    _, O = standard_Bp(P)
    S = split_at(O, q, N)
    v = (0, 0, 0)
    for _ in range(level):
        v = neighbor(v, (0, 1), q)
    O2 = vertex_order(S, v)
    return O, O2, QuatOrder(O.A, O.lattice.intersect(O2.lattice), p=P)


def test_normalize_vertex():
    assert normalize_vertex(1, 1, 0, 2) == (0, 0, 0)
    assert normalize_vertex(2, 1, 6, 3) == (1, 0, 0)
    assert normalize_vertex(0, 2, 7, 2) == (0, 2, 3)


@pytest.mark.parametrize("q", [2, 3, 5])
def test_neighbors_are_symmetric(q):
    root = (0, 0, 0)
    nbrs = all_neighbors(root, q)
    assert len(set(nbrs)) == q + 1
    for w in nbrs:
        assert root in all_neighbors(w, q)
        for u in all_neighbors(w, q):
            assert w in all_neighbors(u, q)


@pytest.mark.parametrize("q", [2, 3])
def test_split_maximal_order(q):
    _, O = standard_Bp(P)
    S = split_at(O, q, N)
    assert S.check_relations()
    assert vertex_contains(S, (0, 0, 0))
    assert vertex_order(S, (0, 0, 0)) == O
    # f(O) = M_2(Z_q): ninguna recta común
    assert stable_lines(S, (0, 0, 0)) == []
    assert [tv.key for tv in local_maximal_superorders(S)] == [(0, 0, 0)]


def test_ramified_prime_rejected():
    _, O = standard_Bp(P)
    with pytest.raises(RamifiedPrime):
        split_at(O, P, N)


def test_neighbor_vertex_order_is_maximal():
    _, O = standard_Bp(P)
    S = split_at(O, 2, N)
    O2 = vertex_order(S, neighbor((0, 0, 0), (0, 1), 2))
    assert O2.discrd() == P
    assert O2 != O


@pytest.mark.parametrize("q,level", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_eichler_has_level_plus_one_superorders(q, level):
    O, O2, E = _eichler(q, level)
    assert E.discrd() == P * q ** level
    assert is_bass(E)
    sup = q_maximal_orders(E, q)
    assert len(sup) == level + 1
    assert O in sup and O2 in sup
    for M in sup:
        assert M.contains_order(E)
        assert valuation(M.discrd(), q) == 0


@pytest.mark.parametrize("q", [2, 3, 5, 7])
def test_tree_ball_matches_stable_walk(q):
    _, _, E = _eichler(q, 2)
    S = split_at(E, q, N)
    walked = sorted(tv.key for tv in local_maximal_superorders(S))
    assert len(walked) == 3
    assert tree_ball(S, 3) == walked


def test_scalar_suborder_is_not_bass():
    _, O = standard_Bp(P)
    S = split_at(suborder_scaled(O, 2), 2, N)
    with pytest.raises(NotBass):
        local_maximal_superorders(S)


def test_p_maximalize_and_glue():
    _, O = standard_Bp(P)
    L = suborder_scaled(O, P)
    M = p_maximalize(L)
    assert valuation(M.discrd(), P) == 1
    assert M.contains_order(L)
    _, _, E = _eichler(2, 1)
    assert glue([E, O]) == O
    assert glue([O]) == O


def _is_tree_path(keys, q):
    verts = set(keys)
    degrees = [sum(1 for w in all_neighbors(v, q) if w in verts) for v in keys]
    edges = sum(degrees) // 2
    return edges == len(keys) - 1 and max(degrees, default=0) <= 2


# órdenes de Eichler sintéticos: q <= 7, nivel <= 3
EICHLER_CORPUS = [(q, e) for q in (2, 3, 5, 7) for e in (1, 2, 3)]


@pytest.mark.parametrize("q,level", EICHLER_CORPUS)
def test_local_superorders_form_a_short_path(q, level):
    _, _, E = _eichler(q, level)
    S = split_at(E, q, N)
    keys = [tv.key for tv in local_maximal_superorders(S)]
    assert len(keys) <= level + 1
    assert _is_tree_path(keys, q)
    assert sorted(keys) == tree_ball(S, level)


def test_other_primes_untouched_by_local_step():
    _, _, E2 = _eichler(2, 2)
    _, _, E3 = _eichler(3, 1)
    L = QuatOrder(E2.A, E2.lattice.intersect(E3.lattice), p=P)
    assert L.discrd() == P * 4 * 3
    for M in q_maximal_orders(L, 2):
        assert M.contains_order(L)
        assert valuation(M.discrd(), 2) == 0
        for q2 in (3, 5, P):
            assert valuation(M.discrd(), q2) == valuation(L.discrd(), q2)


@pytest.mark.parametrize("q,level", [(2, 2), (3, 2), (5, 1)])
def test_extra_precision_gives_same_orders(q, level):
    _, _, E = _eichler(q, level)
    base = {O.key() for O in q_maximal_orders(E, q, margin=level + 2)}
    more = {O.key() for O in q_maximal_orders(E, q, margin=level + 4)}
    assert base == more
    assert len(base) == level + 1

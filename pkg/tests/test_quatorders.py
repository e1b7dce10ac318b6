# tests/test_quatorders.py
import pytest

from app.services.quatorders import (
    QuatAlgebra, QuatOrder, bass_evidence, is_bass, is_gorenstein, is_gorenstein_by_codiff,
    lattice_of, lattice_short_elements, order_closure, order_from_gram, radical_idealizer,
    standard_Bp, suborder_scaled, sum_orders, ternary_form, theta_prefix, unit_count,
)
from app.utils.errors import NotAnOrder, NotFullRank


@pytest.mark.parametrize("p", [31, 73, 101, 103])
def test_standard_order_is_maximal(p):
    _, O = standard_Bp(p)
    assert O.discrd() == p
    assert O.is_maximal()
    assert is_gorenstein(O)
    assert is_bass(O)


def test_quaternion_arithmetic():
    A = QuatAlgebra(-1, -31)
    i, j = A(0, 1, 0, 0), A(0, 0, 1, 0)
    assert i * i == A(-1)
    assert j * j == A(-31)
    assert i * j == -(j * i)
    x = A(1, 2, 3, 4)
    assert x * x.conj() == A(x.nrd())
    assert x * x.inverse() == A.one()
    assert x.trd() == 2


def test_order_checks():
    A = QuatAlgebra(-1, -31)
    with pytest.raises(NotAnOrder):
        QuatOrder(A, lattice_of([A.one(), A(0, 1, 0, 0), A(0, 0, 1, 0), A(0, 0, 0, 3)]))
    with pytest.raises(NotFullRank):
        order_closure([A(0, 1, 0, 0)])


def test_suborder_not_gorenstein():
    _, O = standard_Bp(31)
    S = suborder_scaled(O, 2)
    assert S.discrd() == 31 * 8
    assert S.index_in(O) == 8
    assert not is_gorenstein(S)
    assert ternary_form(S).content % 2 == 0
    assert not bass_evidence(S, 2)["bass"]
    assert not is_bass(S)


def test_codifferent_criterion_agrees():
    _, O = standard_Bp(31)
    assert is_gorenstein_by_codiff(O)
    assert not is_gorenstein_by_codiff(suborder_scaled(O, 2))


def test_two_generator_order_is_gorenstein():
    pair = order_from_gram(0, 1, 0, 31, 0, p=31)
    assert pair.order.discrd() == 124
    assert is_gorenstein(pair.order)
    assert pair.alpha.nrd() == 1 and pair.beta.nrd() == 31


def test_commuting_pair_rejected():
    with pytest.raises(NotAnOrder):
        # beta = alpha
        order_from_gram(0, 1, 0, 1, -2)


def test_radical_idealizer_grows():
    _, O = standard_Bp(31)
    S = suborder_scaled(O, 2)
    R = radical_idealizer(S, 2)
    assert R.contains_order(S)
    assert R.discrd() < S.discrd()
    assert S.discrd() % R.discrd() == 0


def test_sum_and_theta():
    _, O = standard_Bp(31)
    S = suborder_scaled(O, 3)
    assert sum_orders(S, O) == O
    assert unit_count(O) == 4
    th = theta_prefix(O, 10)
    assert th[1] == 4
    assert theta_prefix(S, 10)[1] == 2


def test_json_roundtrip():
    _, O = standard_Bp(103)
    assert QuatOrder.from_json(O.to_json(), p=103) == O


def _orders_31():
    _, O = standard_Bp(31)
    pair = order_from_gram(0, 1, 0, 31, 0, p=31)
    return [O, suborder_scaled(O, 2), suborder_scaled(O, 3), pair.order]


@pytest.mark.parametrize("k", range(4))
def test_order_closure_is_idempotent(k):
    O = _orders_31()[k]
    C = order_closure(O.basis(), p=31)
    assert C == O
    assert order_closure(C.basis(), p=31) == C


@pytest.mark.parametrize("f,q", [(4, 2), (8, 2), (9, 3)])
def test_radical_idealizer_chain_is_monotone(f, q):
    _, O = standard_Bp(31)
    cur = suborder_scaled(O, f)
    for _ in range(8):
        nxt = radical_idealizer(cur, q)
        assert nxt.contains_order(cur)
        assert nxt.discrd() <= cur.discrd()
        if nxt == cur:
            break
        cur = nxt
    assert radical_idealizer(cur, q) == cur
    assert (f ** 3 * 31) % cur.discrd() == 0 and cur.discrd() % 31 == 0


def test_short_elements_come_in_pairs():
    _, O = standard_Bp(103)
    A = O.A
    els = lattice_short_elements(A, O.lattice, 30)
    keys = {tuple(e.c) for e, _ in els}
    for e, n in els:
        assert n == e.nrd() and 0 < n <= 30
        assert tuple((-e).c) in keys
    assert sum(1 for _, n in els if n == 1) == unit_count(O)

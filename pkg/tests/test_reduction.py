# tests/test_reduction.py
import pytest

from app.services.curves import torsion_basis
from app.services.endos import EndomorphismCounter, eligible_degrees
from app.services.endring import build_graph, kohel_oracle
from app.services.graph import IsogenyGraph, IsogenyPath
from app.services.quatorders import theta_prefix
from app.services.reduction import (
    CGLHasher, CGLInput, IdealPathTranslator, check_embedded_generator, cgl_hash, end_from_path,
    equivalent_ideals, second_preimage,
)
from app.services.special import special_curve
from app.utils.errors import UnsupportedPrime

P = 31


def test_special_curve_relations():
    sc = special_curve(P)
    assert sc.curve.j_invariant() == 1728
    assert sc.order.discrd() == P
    assert sc.check_relations()


def test_special_curve_needs_3_mod_4():
    with pytest.raises(UnsupportedPrime):
        special_curve(101)


def test_order_basis_acts_on_points():
    sc = special_curve(P)
    for x in sc.order.basis():
        assert check_embedded_generator(sc, x)


def test_evaluate_torsion_with_half_integral_elements():
    sc = special_curve(P)
    T3 = torsion_basis(sc.curve, 3)
    T2 = torsion_basis(sc.curve, 2)
    for x in sc.order.basis():
        # (2x)(S) = 2 x(S) aunque x tenga denominador 2
        for S in (T3.P, T3.Q):
            assert sc.evaluate_torsion(x * 2, S, 3) == sc.evaluate_torsion(x, S, 3) * 2
        for S in (T2.P, T2.Q):
            assert (sc.evaluate_torsion(x, S, 2) * 2).inf
    assert sc.evaluate_torsion(sc.algebra.one(), T3.P, 3) == T3.P


def test_empty_path_gives_standard_order(settings):
    g = IsogenyGraph(P)
    res = end_from_path(IsogenyPath(g.F(1728)), g, settings)
    assert res.steps == []
    assert res.order == special_curve(P).order


def test_end_from_short_path(settings):
    g = IsogenyGraph(P)
    hasher = CGLHasher(P)
    path = hasher.walk(CGLInput("10"))
    res = end_from_path(path, g, settings)
    assert len(res.steps) == 2
    for step in res.steps:
        assert step.order.discrd() == P
    # O_R(J) tiene los conteos de endomorfismos de la curva final
    degrees = eligible_degrees(6)
    counter = EndomorphismCounter(P)
    assert theta_prefix(res.order, 6, degrees) == counter.prefix(path.end, 6)


@pytest.mark.parametrize("bits", ["011010", "10011101", "11111111"])
def test_end_from_long_path(bits, settings):
    g = build_graph(P, settings)
    path = CGLHasher(P).walk(CGLInput(bits))
    res = end_from_path(path, g, settings)
    assert len(res.steps) == len(bits)
    prev = special_curve(P).order
    counter = EndomorphismCounter(P)
    for step, e in zip(res.steps, path.edges):
        # I_k es un ideal de norma 2 dentro de O_{k-1}
        assert prev.lattice.contains_lattice(step.I)
        assert step.I.det() / prev.lattice.det() == 4
        assert step.order.discrd() == P
        assert theta_prefix(step.order, 6, eligible_degrees(6)) == counter.prefix(e.dst, 6)
        prev = step.order


def test_ideal_translates_back_to_the_same_path(settings):
    g = build_graph(P, settings)
    tr = IdealPathTranslator(g, settings)
    path = CGLHasher(P).walk(CGLInput("0110"))
    res = tr.path_to_ideals(path)
    back, J = tr.ideal_to_path(res.ideal)
    assert J == res.ideal
    assert back.vertices() == path.vertices()
    assert [e.kernel for e in back.edges] == [tuple(e.kernel) for e in path.edges]


def test_path_must_start_at_1728(settings):
    g = IsogenyGraph(P)
    with pytest.raises(ValueError):
        end_from_path(IsogenyPath(g.F(2)), g, settings)


def test_cgl_input_hex():
    inp = CGLInput.from_hex("a")
    assert inp.bits == "1010" and inp.to_hex() == "a"
    assert CGLInput.from_hex("3", 6).bits == "000011"
    with pytest.raises(ValueError):
        CGLInput.from_hex("ff", 4)
    with pytest.raises(ValueError):
        CGLInput("012")


def test_cgl_walk_has_no_backtracking():
    g = IsogenyGraph(P)
    hasher = CGLHasher(P)
    path = hasher.walk(CGLInput("0110"))
    assert len(path) == 4
    assert not g.has_backtracking(path)
    assert cgl_hash(CGLInput("0110"), P, hasher) == path.end
    assert cgl_hash(CGLInput("0110"), P) == path.end


def test_all_inputs_enumerates_two_per_step():
    hasher = CGLHasher(P)
    outs = list(hasher.all_inputs(3))
    assert len(outs) == 8
    for inp, j in outs:
        assert hasher.hash(inp) == j


def test_bits_for_inverts_walk():
    hasher = CGLHasher(P)
    for inp, _ in hasher.all_inputs(4):
        assert hasher.bits_for(hasher.walk(inp)) == inp


def test_equivalent_ideals_have_the_new_norm(settings):
    g = build_graph(P, settings)
    tr = IdealPathTranslator(g, settings)
    res = tr.path_to_ideals(CGLHasher(P).walk(CGLInput("101")))
    ideals = list(equivalent_ideals(tr, res.ideal, 8, 5))
    assert ideals
    assert len({I.key() for I in ideals}) == len(ideals)
    for I in ideals:
        assert tr.norm_exponent(I) == 5
        assert tr.sc.order.lattice.contains_lattice(I)
        assert not (I == res.ideal)


def test_second_preimage(settings):
    inp = CGLInput("10")
    res = second_preimage(inp, P, settings)
    assert res.second_preimage != inp
    assert cgl_hash(res.second_preimage, P) == cgl_hash(inp, P) == res.j_hash
    assert res.audit is not None
    assert res.audit["theta_equal"] and res.audit["ideal_match"]
    assert res.audit["discrd"] == [P, P]
    assert len(res.second_preimage) == res.norm_exponent
    assert res.to_json()["input"] == "10"


def test_second_preimage_agrees_with_exhaustive_search(settings):
    inp = CGLInput("0110")
    hasher = CGLHasher(P)
    res = second_preimage(inp, P, settings, audit=False)
    target = hasher.hash(inp)
    # la búsqueda exhaustiva a esa longitud contiene la respuesta
    found = {c for c, j in hasher.all_inputs(len(res.second_preimage)) if j == target}
    assert res.second_preimage in found
    assert res.second_preimage != inp


def test_second_preimage_needs_3_mod_4(settings):
    with pytest.raises(UnsupportedPrime):
        second_preimage(CGLInput("10"), 101, settings)


@pytest.mark.slow
@pytest.mark.parametrize("p", [31, 103, 503])
def test_second_preimage_length_8(p, settings):
    bits = format((p * 37) % 256, "08b")
    inp = CGLInput(bits)
    res = second_preimage(inp, p, settings)
    assert res.second_preimage != inp
    assert cgl_hash(res.second_preimage, p) == cgl_hash(inp, p)
    assert res.audit is not None
    assert res.audit["theta_equal"] and res.audit["ideal_match"]
    assert res.audit["discrd"] == [p, p]


def test_end_from_path_matches_oracle(settings):
    g = build_graph(P, settings)
    path = CGLHasher(P).walk(CGLInput("01"))
    O = end_from_path(path, g, settings).order
    D = 30
    assert theta_prefix(O, D) == theta_prefix(kohel_oracle(path.end, g, settings), D)

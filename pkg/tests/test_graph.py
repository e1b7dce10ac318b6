# tests/test_graph.py
import math
import random

import pytest
from sympy import primerange

from app.services.arith import fq2_field
from app.services.curves import curve_from_j, is_supersingular
from app.services.graph import (
    IsogenyGraph, ModularPolynomial, census, default_walk_count, default_walk_length,
    find_cycle_pair, load_modular_polynomial, mass_formula, random_supersingular_j,
    supersingular_start, supersingular_vertices, walk_length_for,
)
from app.utils.errors import ConfigError


def test_phi2_kronecker():
    assert load_modular_polynomial(2).kronecker_check()
    bad = ModularPolynomial(2, {(3, 0): 1, (0, 0): 1})
    assert not bad.kronecker_check()


def test_phi_file(tmp_path):
    path = tmp_path / "phi.txt"
    path.write_text("# Phi_2\n3 0 1\n2 2 -1\n2 1 1488\n2 0 -162000\n1 1 40773375\n"
                    "1 0 8748000000\n0 0 -157464000000000\n", encoding="utf-8")
    phi = ModularPolynomial.from_file(path, 2)
    assert phi.coeffs == load_modular_polynomial(2).coeffs
    path.write_text("3 0\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        ModularPolynomial.from_file(path, 2)


def test_unknown_level_without_file():
    with pytest.raises(ConfigError):
        load_modular_polynomial(5)


@pytest.mark.parametrize("p", [31, 101, 103])
def test_vertex_count_matches_mass_formula(p):
    g = IsogenyGraph(p)
    vs = supersingular_vertices(g)
    assert len(vs) == mass_formula(p)
    # 3-regular contando multiplicidades
    assert all(len(g.neighbors(v)) == 3 for v in vs)


def test_start_vertex_is_supersingular():
    for p in (31, 101, 103, 109):
        g = IsogenyGraph(p)
        assert supersingular_start(p) in supersingular_vertices(g)


def test_census_record():
    rec = census(IsogenyGraph(31), seed=3)
    assert rec["p"] == 31 and rec["supersingular_count"] == 3
    assert 0 <= rec["sp_count"] <= 3
    assert rec["seed"] == 3


def test_walk_then_reverse_trims_to_empty():
    g = IsogenyGraph(103)
    rng = random.Random(7)
    path = g.random_walk(supersingular_start(103), 5, rng)
    back = g.reverse(path)
    assert back.end == path.start
    assert len(g.clean(path + back)) == 0


def test_conjugate_path_is_frobenius():
    g = IsogenyGraph(103)
    path = g.random_walk(supersingular_start(103), 4, random.Random(2))
    conj = g.conjugate(path)
    assert [v for v in conj.vertices()] == [v.frobenius() for v in path.vertices()]


def test_default_parameters():
    assert default_walk_count(103) >= 1
    assert default_walk_length(103) >= 1
    assert walk_length_for(10, 2, 30011) >= 1
    with pytest.raises(ValueError):
        walk_length_for(0, 2, 31)


def test_cycle_pair_closes_at_start():
    g = IsogenyGraph(103)
    j0 = random_supersingular_j(g, random.Random(11), outside_Fp=True)
    pair = find_cycle_pair(j0, g, seed=1)
    for cyc in (pair.first, pair.second):
        assert cyc.start == j0 and cyc.end == j0
        assert len(cyc) > 0
        assert cyc.marks


def test_cycle_pair_deterministic():
    g = IsogenyGraph(103)
    j0 = random_supersingular_j(g, random.Random(11), outside_Fp=True)
    a = find_cycle_pair(j0, g, seed=4)
    b = find_cycle_pair(j0, IsogenyGraph(103), seed=4)
    assert a.first.to_json() == b.first.to_json()


def test_bad_strategy():
    g = IsogenyGraph(31)
    with pytest.raises(ConfigError):
        find_cycle_pair(g.F(1728), g, strategy="xx")
    with pytest.raises(ConfigError):
        find_cycle_pair(g.F(1728), g, strategy="fp", fp_distance=3)


def test_ell_equal_p_rejected():
    with pytest.raises(ConfigError):
        IsogenyGraph(31, ell=31)


def test_fp_vertices_in_sp_when_looped():
    g = IsogenyGraph(31)
    for v in supersingular_vertices(g):
        assert g.in_Sp(v) == (v in g.neighbors(v.frobenius()))


@pytest.mark.slow
def test_census_constant_floor():
    for p in primerange(101, 400):
        rec = census(IsogenyGraph(int(p)))
        assert rec["c_hat"] >= 0.1


@pytest.mark.parametrize("seed", range(6))
def test_trim_is_idempotent_and_left_confluent(seed):
    g = IsogenyGraph(31)
    rng = random.Random(seed)
    start = supersingular_start(31)
    a = g.random_walk(start, rng.randint(0, 8), rng)
    b = g.random_walk(a.end, rng.randint(0, 8 - len(a)), rng)
    t = g.trim(a + b)
    assert g.trim(t).edges == t.edges
    assert not g.has_backtracking(t)
    assert t.end == b.end
    assert g.trim(g.trim(a) + b).edges == t.edges
    assert (len(a) + len(b) - len(t)) % 2 == 0


def test_neighbors_commute_with_frobenius():
    for p in (31, 103, 107):
        g = IsogenyGraph(p)
        for v in supersingular_vertices(g):
            got = sorted((w.frobenius() for w in g.neighbors(v)), key=lambda z: z.key())
            want = sorted(g.neighbors(v.frobenius()), key=lambda z: z.key())
            assert got == want


def _fp_scan(p: int) -> set:
    F = fq2_field(p)
    return {F(j) for j in range(p) if is_supersingular(curve_from_j(F(j)))}


@pytest.mark.parametrize("p", [int(q) for q in primerange(5, 41)])
def test_census_scan_small(p):
    g = IsogenyGraph(p)
    vs = supersingular_vertices(g)
    assert len(vs) == mass_formula(p)
    assert _fp_scan(p) == {v for v in vs if v.in_Fp()}


@pytest.mark.slow
@pytest.mark.parametrize("p", [int(q) for q in primerange(41, 201)])
def test_census_scan(p):
    g = IsogenyGraph(p)
    vs = supersingular_vertices(g)
    assert len(vs) == mass_formula(p)
    assert all(is_supersingular(curve_from_j(v)) for v in vs)
    assert _fp_scan(p) == {v for v in vs if v.in_Fp()}


def _landing_frequency(p: int, trials: int, seed: int) -> tuple[float, float]:
    g = IsogenyGraph(p)
    vs = supersingular_vertices(g)
    s = math.ceil(math.sqrt(p))
    marked = set(vs[:s])
    t = walk_length_for(s, 2, p)
    rng = random.Random(seed)
    start = supersingular_start(p)
    hits = sum(1 for _ in range(trials) if g.random_walk(start, t, rng).end in marked)
    return hits / trials, 6 * len(marked) / p


def test_walks_land_in_marked_set():
    freq, floor = _landing_frequency(1019, 2000, seed=5)
    assert freq >= floor


@pytest.mark.slow
def test_walks_land_in_marked_set_at_scale():
    freq, floor = _landing_frequency(30011, 10 ** 5, seed=5)
    assert freq >= floor

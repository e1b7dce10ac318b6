# tests/test_curves.py
import random

import pytest

from app.services.arith import fq2_field
from app.services.curves import (
    automorphisms, curve_from_j, dual, frobenius_trace, hasse_invariant, is_supersingular,
    isogenies_from, isomorphisms, kernel_polys, order_dividing, torsion_basis, torsion_degree,
    trace_over, weil_pairing,
)
from app.services.graph import IsogenyGraph, load_modular_polynomial, supersingular_vertices


def test_curve_from_j_roundtrip(rng):
    F = fq2_field(103)
    for _ in range(10):
        j = F.random(rng)
        assert curve_from_j(j).j_invariant() == j
    assert curve_from_j(F(0)).j_invariant() == 0
    assert curve_from_j(F(1728)).j_invariant() == 1728


def test_supersingularity_at_31():
    F = fq2_field(31)
    E = curve_from_j(F(1728))
    assert is_supersingular(E)
    assert hasse_invariant(E).is_zero()
    # 31 = 1 mod 3, j = 0 es ordinaria
    assert not is_supersingular(curve_from_j(F(0)))


def test_trace_of_1728():
    F = fq2_field(31)
    E = curve_from_j(F(1728))
    assert frobenius_trace(E) == -62
    assert trace_over(-62, 31 * 31, 1) == -62
    P = E.random_point(random.Random(5))
    assert (P * (31 * 31 + 1 + 62)).inf


def test_automorphisms_and_isomorphisms():
    F = fq2_field(31)
    E = curve_from_j(F(1728))
    assert len(automorphisms(E)) == 4
    E2 = E.twist_by(F(3, 2))
    assert isomorphisms(E, E2)
    E0 = curve_from_j(F(2))
    assert isomorphisms(E, E0) == []


def test_torsion_basis_and_pairing():
    F = fq2_field(31)
    E = curve_from_j(F(1728))
    basis = torsion_basis(E, 3)
    assert order_dividing(basis.P, 3) == 3
    z = weil_pairing(basis.P, basis.Q, 3)
    assert z ** 3 == 1 and not (z == 1)
    R = basis.P * 2 + basis.Q
    assert basis.dlog(R) == (2, 1)


def test_torsion_degree_supersingular():
    # t = -2p: Frobenius actúa como -p
    assert torsion_degree(-62, 31 * 31, 3) == 2
    assert torsion_degree(-62, 31 * 31, 2) == 1


def test_velu_and_dual(rng):
    F = fq2_field(31)
    E = curve_from_j(F(1728))
    assert len(kernel_polys(E, 2)) == 3
    for phi in isogenies_from(E, 2):
        psi = dual(phi)
        assert psi.codomain == E
        P = E.random_point(rng)
        assert psi(phi(P)).on_curve(E) == P * 2


def test_three_isogenies():
    F = fq2_field(31)
    E = curve_from_j(F(1728))
    phis = isogenies_from(E, 3)
    assert len(phis) == 4
    for phi in phis:
        assert is_supersingular(phi.codomain)


def test_two_kernels_sorted_by_kernel_point():
    F = fq2_field(103)
    for j in (F(1728), F(0), F(80)):
        hs = kernel_polys(curve_from_j(j), 2)
        xs = [(-h[0]).key() for h in hs]
        assert xs == sorted(xs)


@pytest.mark.parametrize("p", [31, 103])
def test_velu_codomains_are_phi2_neighbors(p):
    phi2 = load_modular_polynomial(2)
    g = IsogenyGraph(p)
    for v in supersingular_vertices(g):
        E = curve_from_j(v)
        for phi in isogenies_from(E, 2):
            assert phi.domain.j_invariant() == v
            assert phi2(v, phi.codomain.j_invariant()).is_zero()

# tests/test_lattice.py
from fractions import Fraction

from app.utils.lattice import (
    RatLattice, hnf, int_kernel_row, lll_gram, nullspace_mod, short_vectors, xgcd,
)


def test_xgcd():
    x, y, g = xgcd(240, 46)
    assert g == 2 and 240 * x + 46 * y == 2


def test_hnf_canonical():
    a = hnf([[2, 4], [0, 6]], 2)
    b = hnf([[2, 10], [2, 4], [0, 6]], 2)
    assert a == b
    assert a[0][0] > 0 and a[1][1] > 0


def test_int_kernel_row():
    v = [6, 10, 15]
    K = int_kernel_row(v)
    assert len(K) == 2
    for k in K:
        assert sum(a * b for a, b in zip(v, k)) == 0


def test_rat_lattice_ops():
    L = RatLattice([[1, 0], [0, 1]], 2)
    M = RatLattice([[Fraction(1, 2), 0], [0, 1]], 2)
    assert M.contains_lattice(L)
    assert L.index_in(M) == 2
    assert L + M == M
    assert L.intersect(M) == L
    assert M.dual() == RatLattice([[2, 0], [0, 1]], 2)
    assert [Fraction(1, 2), 3] in M
    assert [Fraction(1, 2), 3] not in L


def test_lll_and_short_vectors():
    G = [[1, 0], [0, 1]]
    T = lll_gram([[1, 5], [5, 26]])
    assert abs(T[0][0] * T[1][1] - T[0][1] * T[1][0]) == 1
    vs = short_vectors(G, 1)
    assert sorted(vs) == sorted([(1, 0), (-1, 0), (0, 1), (0, -1)])
    # norma 2 en Z^2: 4 de norma 1 y 4 de norma 2
    assert len(short_vectors(G, 2)) == 8


def test_nullspace_mod():
    ns = nullspace_mod([[1, 2, 3]], 5)
    assert len(ns) == 2
    for v in ns:
        assert (v[0] + 2 * v[1] + 3 * v[2]) % 5 == 0

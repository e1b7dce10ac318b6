# tests/test_arith.py
import random

import pytest

from app.config import Settings
from app.services import arith
from app.services.arith import (
    crt, extension, factor, fq2_field, fq2_roots, fq2_sqrt, is_irreducible, nth_roots, valuation,
)
from app.utils.errors import ConfigError, ExtensionTooLarge, NotCoprime


def test_fq2_rejects_small_or_composite():
    with pytest.raises(ConfigError):
        fq2_field(3)
    with pytest.raises(ConfigError):
        fq2_field(35)


def test_fq2_field_axioms(rng):
    F = fq2_field(103)
    for _ in range(50):
        x, y = F.random(rng), F.random(rng)
        assert x * y == y * x
        assert (x + y) - y == x
        if x:
            assert x * x.inverse() == F.one()
            assert (x / x) == 1
        # Frobenius es x^p y fija exactamente F_p
        assert x ** F.p == x.frobenius()
        assert x.norm() == (x * x.frobenius()).a


def test_multiplicative_group_order():
    F = fq2_field(31)
    g = F.gen() + 3
    assert g ** (F.order - 1) == F.one()


def test_parse_j():
    F = fq2_field(31)
    assert F.parse("5") == F(5)
    assert F.parse(" 2, 7 ") == F(2, 7)
    with pytest.raises(ConfigError):
        F.parse("x,y")


def test_roots_with_multiplicity():
    F = fq2_field(31)
    a, b = F(3, 1), F(7)
    # (x - a)^2 (x - b)
    poly = [-(a * a * b), a * a + 2 * a * b, -(2 * a + b), F.one()]
    assert fq2_roots(poly) == sorted([a, a, b], key=lambda z: z.key())


def test_sqrt_and_nth_roots(rng):
    F = fq2_field(103)
    for _ in range(20):
        x = F.random(rng)
        r = fq2_sqrt(x * x)
        assert r * r == x * x
    cube_roots = nth_roots(F.one(), 3)
    assert len(cube_roots) == 3
    assert all(z ** 3 == 1 for z in cube_roots)


def test_extension_is_deterministic_and_field():
    F = fq2_field(31)
    K = extension(F, 2)
    assert K is extension(F, 2)
    assert is_irreducible(K.modulus, F)
    z = K.random(random.Random(3))
    if z:
        assert z * z.inverse() == K.one()
    assert extension(F, 1) is F


def test_extension_cap():
    with pytest.raises(ExtensionTooLarge):
        extension(fq2_field(31), 13, max_degree=12)


def test_crt_balanced_and_coprime():
    r = crt([(2, 3), (3, 5), (2, 7)])
    assert r.value == 23 and r.modulus == 105
    assert crt([(104, 105)]).balanced == -1
    with pytest.raises(NotCoprime):
        crt([(1, 4), (1, 6)])


def test_factor_and_valuation():
    f = factor(2 ** 5 * 3 * 30011 * 100003)
    assert f.as_dict() == {2: 5, 3: 1, 30011: 1, 100003: 1}
    assert f.value() == 2 ** 5 * 3 * 30011 * 100003
    assert f.exponent(7) == 0
    assert valuation(48, 2) == 4
    assert valuation(48, 5) == 0


def test_field_axioms_on_many_triples():
    F = fq2_field(103)
    r = random.Random(2024)
    for _ in range(10 ** 4):
        x, y, z = F.random(r), F.random(r), F.random(r)
        assert (x * y) * z == x * (y * z)
        assert (x + y) + z == x + (y + z)
        assert x * (y + z) == x * y + x * z
        assert x + (-x) == F.zero()
        assert x * F.one() == x


def test_roots_use_configured_seed(monkeypatch):
    seeds = []
    real = random.Random

    class Spy(real):
        def __init__(self, s=None):
            seeds.append(s)
            super().__init__(s)

    monkeypatch.setattr(arith, "get_settings", lambda: Settings(seed=77, quiet=True))
    monkeypatch.setattr(arith.random, "Random", Spy)
    F = fq2_field(31)
    poly = [F(-6), F(11), F(-6), F.one()]  # (x - 1)(x - 2)(x - 3)
    assert fq2_roots(poly) == [F(1), F(2), F(3)]
    assert seeds == [77]
    fq2_roots(poly, seed=5)
    assert seeds == [77, 5]

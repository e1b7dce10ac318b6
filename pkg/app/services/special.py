# app/services/special.py
"""
Curva especial j = 1728 (p = 3 mod 4) con su orden maximal estándar.

i actúa como el automorfismo (x, y) -> (-x, sqrt(-1) y) y j como el
Frobenius p-ésimo; así cualquier elemento de O~ se evalúa en puntos.
"""
from __future__ import annotations
import math
import random
from dataclasses import dataclass

from app.services.arith import Fq2Elem, fq2_field, fq2_sqrt
from app.services.curves import Curve, Point, curve_from_j, torsion_basis
from app.services.quatorders import QuatAlgebra, QuatElement, QuatOrder, standard_Bp
from app.utils.errors import UnsupportedPrime


class _Identity:
    degree = 1

    def __init__(self, E: Curve):
        self.base = E

    def evaluate(self, P: Point) -> Point:
        return P


class _Iota:
    degree = 1

    def __init__(self, E: Curve, s: Fq2Elem):
        self.base = E
        self.s = s

    def evaluate(self, P: Point) -> Point:
        if P.inf:
            return P
        return Point(self.base, -P.x, P.y * self.s, P.K)


class _Frobenius:
    def __init__(self, E: Curve):
        self.base = E
        self.degree = E.p

    def evaluate(self, P: Point) -> Point:
        return P.frobenius()


class _Then:
    """second o first."""

    def __init__(self, first, second):
        self.base = first.base
        self.first, self.second = first, second
        self.degree = first.degree * second.degree

    def evaluate(self, P: Point) -> Point:
        return self.second.evaluate(self.first.evaluate(P))


def denominator(x: QuatElement) -> int:
    return math.lcm(*(c.denominator for c in x.c))


@dataclass
class SpecialCurve:
    p: int
    curve: Curve
    algebra: QuatAlgebra
    order: QuatOrder
    sqrt_m1: Fq2Elem
    max_degree: int = 12

    def generators(self) -> list:
        """Imágenes de 1, i, j, k = ij como endomorfismos evaluables."""
        E = self.curve
        one, i, j = _Identity(E), _Iota(E, self.sqrt_m1), _Frobenius(E)
        return [one, i, j, _Then(j, i)]

    def evaluate_integral(self, x: QuatElement, P: Point) -> Point:
        """x(P) para x en Z<1, i, j, k>."""
        acc = self.curve.infinity(P.K)
        for c, g in zip(x.c, self.generators()):
            if c.denominator != 1:
                raise ValueError("el elemento no está en Z<1, i, j, k>")
            if c:
                acc = acc + g.evaluate(P) * int(c)
        return acc

    def evaluate_torsion(self, x: QuatElement, S: Point, m: int) -> Point:
        """x(S) para S en E~[m] y x en O~ (o con denominador acotado).

        La parte del denominador coprima con m se invierte módulo m; la que
        comparte primos con m se resuelve dividiendo S en E~[m d2].
        """
        d = denominator(x)
        d1, d2 = d, 1
        g = math.gcd(d1, m)
        while g > 1:
            d1 //= g
            d2 *= g
            g = math.gcd(d1, m)
        if d2 == 1:
            R = self.evaluate_integral(x * d, S)
            return R * pow(d1, -1, m) if m > 1 else R
        T = torsion_basis(self.curve, m * d2, self.max_degree)
        a, b = T.dlog(S)
        if a % d2 or b % d2:
            raise ValueError(f"el punto no está en E~[{m}]")
        S2 = T.P * (a // d2) + T.Q * (b // d2)
        return self.evaluate_integral(x * d, S2) * pow(d1, -1, m * d2)

    def check_relations(self, trials: int = 5, seed: int = 0) -> bool:
        """i^2 = -1, j^2 = -p, ij = -ji en puntos al azar."""
        rng = random.Random(seed)
        one, i, j, k = self.generators()
        for _ in range(trials):
            P = self.curve.random_point(rng)
            if not (i.evaluate(i.evaluate(P)) + P).inf:
                return False
            if not (j.evaluate(j.evaluate(P)) + P * self.p).inf:
                return False
            if not (k.evaluate(P) + j.evaluate(i.evaluate(P))).inf:
                return False
        return True

    def to_json(self) -> dict:
        return {"p": self.p, "j": 1728, "order": self.order.to_json()}


def special_curve(p: int, max_degree: int = 12) -> SpecialCurve:
    if p % 4 != 3:
        raise UnsupportedPrime(f"la curva especial requiere p = 3 mod 4 (p={p})")
    F = fq2_field(p)
    E = curve_from_j(F(1728))
    A, O = standard_Bp(p)
    s = fq2_sqrt(F(-1))
    return SpecialCurve(p, E, A, O, s, max_degree)

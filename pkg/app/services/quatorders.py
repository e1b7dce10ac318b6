# app/services/quatorders.py
"""
Álgebras de cuaterniones H(a, b) sobre Q y órdenes dados por una base
racional (filas en forma de Hermite, comparación canónica).

Incluye: discriminante reducido, forma ternaria y contenido (criterio
de Gorenstein), idealizador del radical, test de Bass, construcción del
orden abstracto a partir de la Gram de <1, alpha, beta, alpha beta> y
serie theta truncada para comparar órdenes.
"""
from __future__ import annotations
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import product
from typing import Iterable, Sequence

from sympy import legendre_symbol, sqrt_mod
from sympy.ntheory import primerange

from app.services.arith import Factorization, factor, valuation
from app.utils.errors import NonSquareDiscriminant, NotAnOrder, NotFullRank
from app.utils.lattice import (
    RatLattice,
    int_kernel_row,
    lll_gram,
    mat_inverse,
    mat_det,
    nullspace_mod,
    short_vectors,
)


# ======================================================================
# Álgebra y elementos
# ======================================================================
@dataclass(frozen=True)
class QuatAlgebra:
    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if self.a == 0 or self.b == 0:
            raise ValueError("H(a, b) requiere a, b no nulos")

    def __call__(self, *coords) -> "QuatElement":
        if len(coords) == 1:
            coords = (coords[0], 0, 0, 0)
        return QuatElement(self, tuple(Fraction(c) for c in coords))

    def one(self) -> "QuatElement":
        return self(1, 0, 0, 0)

    def basis(self) -> list["QuatElement"]:
        return [self(1, 0, 0, 0), self(0, 1, 0, 0), self(0, 0, 1, 0), self(0, 0, 0, 1)]

    @property
    def is_definite(self) -> bool:
        return self.a < 0 and self.b < 0

    def to_json(self) -> dict:
        return {"a": str(self.a), "b": str(self.b)}


@dataclass(frozen=True)
class QuatElement:
    A: QuatAlgebra
    c: tuple[Fraction, Fraction, Fraction, Fraction]

    def __add__(self, o: "QuatElement") -> "QuatElement":
        o = self._coerce(o)
        return QuatElement(self.A, tuple(x + y for x, y in zip(self.c, o.c)))

    __radd__ = __add__

    def __sub__(self, o: "QuatElement") -> "QuatElement":
        o = self._coerce(o)
        return QuatElement(self.A, tuple(x - y for x, y in zip(self.c, o.c)))

    def __rsub__(self, o) -> "QuatElement":
        return self._coerce(o) - self

    def __neg__(self) -> "QuatElement":
        return QuatElement(self.A, tuple(-x for x in self.c))

    def _coerce(self, o) -> "QuatElement":
        if isinstance(o, QuatElement):
            return o
        return self.A(o)

    def __mul__(self, o) -> "QuatElement":
        if isinstance(o, (int, Fraction)):
            return QuatElement(self.A, tuple(x * o for x in self.c))
        a, b = self.A.a, self.A.b
        x1, x2, x3, x4 = self.c
        y1, y2, y3, y4 = o.c
        return QuatElement(self.A, (
            x1 * y1 + a * x2 * y2 + b * x3 * y3 - a * b * x4 * y4,
            x1 * y2 + x2 * y1 - b * x3 * y4 + b * x4 * y3,
            x1 * y3 + x3 * y1 + a * x2 * y4 - a * x4 * y2,
            x1 * y4 + x4 * y1 + x2 * y3 - x3 * y2,
        ))

    def __rmul__(self, o) -> "QuatElement":
        return self * o

    def conj(self) -> "QuatElement":
        x1, x2, x3, x4 = self.c
        return QuatElement(self.A, (x1, -x2, -x3, -x4))

    def trd(self) -> Fraction:
        return 2 * self.c[0]

    def nrd(self) -> Fraction:
        a, b = self.A.a, self.A.b
        x1, x2, x3, x4 = self.c
        return x1 * x1 - a * x2 * x2 - b * x3 * x3 + a * b * x4 * x4

    def inverse(self) -> "QuatElement":
        n = self.nrd()
        if n == 0:
            raise ZeroDivisionError("elemento de norma 0")
        return self.conj() * (1 / n)

    def is_integral(self) -> bool:
        return self.trd().denominator == 1 and self.nrd().denominator == 1

    def __repr__(self) -> str:
        return "(" + ", ".join(str(x) for x in self.c) + ")"

    def to_json(self) -> list[str]:
        return [str(x) for x in self.c]


def trd_pair(x: QuatElement, y: QuatElement) -> Fraction:
    """<x, y> = Trd(x conj(y))."""
    return (x * y.conj()).trd()


# ======================================================================
# Retículos de cuaterniones
# ======================================================================
def lattice_of(elems: Iterable[QuatElement]) -> RatLattice:
    return RatLattice([list(e.c) for e in elems], 4)


def elements_of(A: QuatAlgebra, L: RatLattice) -> list[QuatElement]:
    return [A(*row) for row in L.basis()]


def left_mul(x: QuatElement, L: RatLattice) -> RatLattice:
    A = x.A
    return lattice_of(x * e for e in elements_of(A, L))


def right_mul(L: RatLattice, x: QuatElement) -> RatLattice:
    A = x.A
    return lattice_of(e * x for e in elements_of(A, L))


def lattice_product(A: QuatAlgebra, I: RatLattice, J: RatLattice) -> RatLattice:
    return lattice_of(x * y for x in elements_of(A, I) for y in elements_of(A, J))


def right_order(A: QuatAlgebra, I: RatLattice) -> RatLattice:
    """{x : I x contenido en I} como intersección de b^{-1} I."""
    out = None
    for b in elements_of(A, I):
        L = left_mul(b.inverse(), I)
        out = L if out is None else out.intersect(L)
    return out


def left_order(A: QuatAlgebra, I: RatLattice) -> RatLattice:
    out = None
    for b in elements_of(A, I):
        L = right_mul(I, b.inverse())
        out = L if out is None else out.intersect(L)
    return out


# ======================================================================
# Órdenes
# ======================================================================
class QuatOrder:
    """Orden de H(a, b): retículo de rango 4 con 1 y cerrado bajo producto."""

    def __init__(self, A: QuatAlgebra, lattice: RatLattice, check: bool = True, p: int | None = None):
        if lattice.rank != 4:
            raise NotFullRank(f"el retículo tiene rango {lattice.rank}")
        self.A = A
        self.lattice = lattice
        self.p = p  # primo ramificado finito, si se conoce
        self._gram: list[list[Fraction]] | None = None
        self._discrd: int | None = None
        self._factored: Factorization | None = None
        if check:
            self._check()

    @classmethod
    def from_elements(cls, elems: Sequence[QuatElement], check: bool = True, p: int | None = None) -> "QuatOrder":
        return cls(elems[0].A, lattice_of(elems), check, p)

    def _check(self) -> None:
        if list(self.A.one().c) not in self.lattice:
            raise NotAnOrder("el retículo no contiene 1")
        B = self.basis()
        for x in B:
            for y in B:
                if list((x * y).c) not in self.lattice:
                    raise NotAnOrder("el retículo no es cerrado bajo el producto")

    def basis(self) -> list[QuatElement]:
        return elements_of(self.A, self.lattice)

    def key(self) -> tuple:
        return (self.A.a, self.A.b, self.lattice.key())

    def __eq__(self, o) -> bool:
        return isinstance(o, QuatOrder) and self.key() == o.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __contains__(self, x: QuatElement) -> bool:
        return list(x.c) in self.lattice

    def contains_order(self, other: "QuatOrder") -> bool:
        return self.lattice.contains_lattice(other.lattice)

    def __repr__(self) -> str:
        return f"QuatOrder(H({self.A.a},{self.A.b}), {self.lattice})"

    # ---------- invariantes ----------
    def gram(self) -> list[list[Fraction]]:
        if self._gram is None:
            B = self.basis()
            self._gram = [[trd_pair(x, y) for y in B] for x in B]
        return self._gram

    def discrd(self) -> int:
        if self._discrd is None:
            det = abs(mat_det(self.gram()))
            if det.denominator != 1:
                raise NonSquareDiscriminant(f"det Gram no entero: {det}")
            r = math.isqrt(det.numerator)
            if r * r != det.numerator:
                raise NonSquareDiscriminant(f"|det Gram| = {det} no es un cuadrado")
            self._discrd = r
        return self._discrd

    def factored_discrd(self, budget: int = 200_000) -> Factorization:
        if self._factored is None:
            self._factored = factor(self.discrd(), budget)
        return self._factored

    def is_maximal(self) -> bool:
        return self.p is not None and self.discrd() == self.p

    def index_in(self, other: "QuatOrder") -> int:
        return int(self.lattice.index_in(other.lattice))

    def to_json(self) -> dict:
        return {
            "algebra": self.A.to_json(),
            "basis": [e.to_json() for e in self.basis()],
        }

    @classmethod
    def from_json(cls, data: dict, p: int | None = None) -> "QuatOrder":
        A = QuatAlgebra(Fraction(data["algebra"]["a"]), Fraction(data["algebra"]["b"]))
        elems = [A(*(Fraction(x) for x in row)) for row in data["basis"]]
        return cls.from_elements(elems, p=p)


def order_closure(gens: Sequence[QuatElement], max_rounds: int = 12, p: int | None = None) -> QuatOrder:
    """Menor anillo que contiene 1 y los generadores."""
    A = gens[0].A
    L = lattice_of([A.one(), *gens])
    for _ in range(max_rounds):
        if L.rank < 4:
            raise NotFullRank(f"los generadores solo generan rango {L.rank}")
        B = elements_of(A, L)
        L2 = lattice_of(B + [x * y for x in B for y in B])
        if L2 == L:
            return QuatOrder(A, L, check=False, p=p)
        L = L2
    raise NotAnOrder("la clausura no se estabiliza (elementos no enteros)")


def sum_orders(O1: QuatOrder, O2: QuatOrder) -> QuatOrder:
    return order_closure(O1.basis() + O2.basis(), p=O1.p or O2.p)


def suborder_scaled(O: QuatOrder, f: int) -> QuatOrder:
    """Z + f O."""
    A = O.A
    return QuatOrder(A, lattice_of([A.one()] + [e * f for e in O.basis()]), p=O.p)


def orders_equal_up_to_fingerprint(O1: QuatOrder, O2: QuatOrder, D: int = 30) -> bool:
    return theta_prefix(O1, D) == theta_prefix(O2, D)


# ======================================================================
# B_{p, inf} estándar
# ======================================================================
def standard_Bp(p: int) -> tuple[QuatAlgebra, QuatOrder]:
    """B_{p,inf} según p mod 8 con su orden maximal estándar."""
    if p % 4 == 3:
        A = QuatAlgebra(-1, -p)
        h = Fraction(1, 2)
        gens = [A(0, 1, 0, 0), A(0, h, h, 0), A(h, 0, 0, h)]
    elif p % 8 == 5:
        A = QuatAlgebra(-2, -p)
        gens = [A(Fraction(1, 2), 0, Fraction(1, 2), Fraction(1, 2)),
                A(0, Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)),
                A(0, 0, 0, 1)]
    else:
        q = next(q for q in primerange(3, 10 ** 6) if q % 4 == 3 and legendre_symbol(p % q, q) == -1)
        c = int(sqrt_mod(-p % q, q))
        A = QuatAlgebra(-q, -p)
        h = Fraction(1, 2)
        gens = [A(h, h, 0, 0), A(0, 0, h, h), A(0, Fraction(c, q), 0, Fraction(1, q))]
    O = QuatOrder(A, lattice_of([A.one()] + gens), p=p)
    if O.discrd() != p:
        raise NotAnOrder(f"el orden estándar de B_{p} tiene discrd {O.discrd()}")
    return A, O


# ======================================================================
# Dual, forma ternaria y Gorenstein
# ======================================================================
def dual_lattice(O: QuatOrder) -> RatLattice:
    """O^# = {x : Trd(x conj(O)) en Z}."""
    G = O.gram()
    Ginv = mat_inverse(G)
    B = O.basis()
    rows = []
    for i in range(4):
        e = O.A(0)
        for k in range(4):
            e = e + B[k] * Ginv[i][k]
        rows.append(list(e.c))
    return RatLattice(rows, 4)


codiff = dual_lattice


@dataclass(frozen=True)
class TernaryForm:
    """a x^2 + b y^2 + c z^2 + u yz + v xz + w xy."""
    a: int
    b: int
    c: int
    u: int
    v: int
    w: int

    @property
    def content(self) -> int:
        return reduce(math.gcd, (self.a, self.b, self.c, self.u, self.v, self.w))

    def matrix(self) -> list[list[Fraction]]:
        h = Fraction(1, 2)
        return [[Fraction(self.a), self.w * h, self.v * h],
                [self.w * h, Fraction(self.b), self.u * h],
                [self.v * h, self.u * h, Fraction(self.c)]]

    def disc(self) -> Fraction:
        """4 det(matriz), invariante de la forma."""
        return 4 * mat_det(self.matrix())

    def to_json(self) -> list[int]:
        return [self.a, self.b, self.c, self.u, self.v, self.w]


def ternary_form(O: QuatOrder) -> TernaryForm:
    """discrd(O) * nrd restringida a la parte de traza cero de O^#."""
    A = O.A
    dual = elements_of(A, dual_lattice(O))
    traces = [d.trd() for d in dual]
    den = reduce(lambda x, y: x * y // math.gcd(x, y), (t.denominator for t in traces), 1)
    ker = int_kernel_row([int(t * den) for t in traces])
    es = []
    for vec in ker:
        e = A(0)
        for k in range(4):
            e = e + dual[k] * vec[k]
        es.append(e)
    N = O.discrd()

    def q(x: QuatElement) -> int:
        v = N * x.nrd()
        if v.denominator != 1:
            raise NotAnOrder("forma ternaria no entera")
        return int(v)

    def bil(x: QuatElement, y: QuatElement) -> int:
        v = N * trd_pair(x, y)
        if v.denominator != 1:
            raise NotAnOrder("forma ternaria no entera")
        return int(v)

    e1, e2, e3 = es
    return TernaryForm(q(e1), q(e2), q(e3), bil(e2, e3), bil(e1, e3), bil(e1, e2))


def is_gorenstein_at(O: QuatOrder, q: int) -> bool:
    return ternary_form(O).content % q != 0


def is_gorenstein(O: QuatOrder) -> bool:
    return ternary_form(O).content == 1


def is_gorenstein_by_codiff(O: QuatOrder) -> bool:
    """Invertibilidad del codiferente: I (I^-1) = O con I^-1 = {x : I x I en I}."""
    A = O.A
    I = dual_lattice(O)
    inv = None
    for a in elements_of(A, I):
        for b in elements_of(A, I):
            L = right_mul(left_mul(a.inverse(), I), b.inverse())
            inv = L if inv is None else inv.intersect(L)
    return lattice_product(A, I, inv) == O.lattice


# ======================================================================
# Radical e idealizador
# ======================================================================
def _coords_mod(O: QuatOrder, x: QuatElement, q: int) -> list[int]:
    cs = O.lattice.coordinates(list(x.c))
    return [int(c) % q for c in cs]


def _structure_mod(O: QuatOrder, q: int) -> list[list[list[int]]]:
    B = O.basis()
    return [[_coords_mod(O, x * y, q) for y in B] for x in B]


def _mul_mod(S, x: Sequence[int], y: Sequence[int], q: int) -> list[int]:
    out = [0, 0, 0, 0]
    for i in range(4):
        if not x[i]:
            continue
        for k in range(4):
            if not y[k]:
                continue
            c = x[i] * y[k]
            row = S[i][k]
            for t in range(4):
                out[t] = (out[t] + c * row[t]) % q
    return out


def radical_mod(O: QuatOrder, q: int) -> list[list[int]]:
    """Vectores (coordenadas en la base de O, mod q) que generan el radical de O/qO."""
    if q >= 5:
        G = [[int(x) for x in row] for row in O.gram()]
        return nullspace_mod(G, q)
    S = _structure_mod(O, q)
    elems = [list(v) for v in product(range(q), repeat=4)]
    rad = []
    for x in elems:
        if not any(x):
            continue
        ok = True
        for y in elems:
            z = _mul_mod(S, x, y, q)
            w = z
            for _ in range(3):
                w = _mul_mod(S, w, z, q)
            if any(w):
                ok = False
                break
        if ok:
            rad.append(x)
    return rad


def radical_lattice(O: QuatOrder, q: int) -> RatLattice:
    """J = qO + levantamientos del radical de O/qO."""
    B = O.basis()
    gens = [e * q for e in B]
    for v in radical_mod(O, q):
        e = O.A(0)
        for k in range(4):
            e = e + B[k] * v[k]
        gens.append(e)
    return lattice_of(gens)


def radical_idealizer(O: QuatOrder, q: int) -> QuatOrder:
    """O_R(rad_q O)."""
    J = radical_lattice(O, q)
    R = right_order(O.A, J)
    return QuatOrder(O.A, R, check=False, p=O.p)


def is_bass(O: QuatOrder, factored: Factorization | None = None) -> bool:
    fz = factored or O.factored_discrd()
    return all(bass_evidence(O, q)["bass"] for q in fz.primes())


def bass_evidence(O: QuatOrder, q: int) -> dict:
    nat = radical_idealizer(O, q)
    c1 = ternary_form(O).content
    c2 = ternary_form(nat).content
    return {
        "q": q,
        "content": c1,
        "content_natural": c2,
        "bass": c1 % q != 0 and c2 % q != 0,
    }


# ======================================================================
# Orden abstracto desde la Gram de <1, alpha, beta, alpha beta>
# ======================================================================
@dataclass
class AbstractPair:
    order: QuatOrder
    alpha: QuatElement
    beta: QuatElement


def order_from_gram(ta: int, na: int, tb: int, nb: int, tab: int, p: int | None = None) -> AbstractPair:
    """Modelo H(a, b) con alpha = ta/2 + i y beta = tb/2 + c i + j."""
    da = ta * ta - 4 * na
    if da >= 0:
        raise NotAnOrder("alpha no genera un cuerpo cuadrático imaginario")
    a = Fraction(da, 4)
    ab_hat = ta * tb - tab
    pair0 = Fraction(ab_hat) - Fraction(ta * tb, 2)
    norm0 = Fraction(-da, 2)
    c = pair0 / norm0
    b = -(Fraction(nb) - Fraction(tb * tb, 4) - c * c * (Fraction(na) - Fraction(ta * ta, 4)))
    if b == 0:
        raise NotAnOrder("alpha y beta conmutan (b = 0)")
    A = QuatAlgebra(a, b)
    alpha = A(Fraction(ta, 2), 1, 0, 0)
    beta = A(Fraction(tb, 2), c, 1, 0)
    O = QuatOrder(A, lattice_of([A.one(), alpha, beta, alpha * beta]), check=True, p=p)
    return AbstractPair(O, alpha, beta)


# ======================================================================
# Serie theta
# ======================================================================
def lattice_short_elements(A: QuatAlgebra, L: RatLattice, bound) -> list[tuple[QuatElement, Fraction]]:
    """Elementos no nulos de L con nrd <= bound (LLL y luego Fincke-Pohst)."""
    B = elements_of(A, L)
    G = [[(x * y.conj()).trd() / 2 for y in B] for x in B]
    T = lll_gram(G)
    red = []
    for row in T:
        e = A(0)
        for k in range(4):
            e = e + B[k] * row[k]
        red.append(e)
    RA = [[(red[i] * red[j].conj()).trd() / 2 for j in range(4)] for i in range(4)]
    out = []
    for x in short_vectors(RA, bound):
        e = A(0)
        for k in range(4):
            if x[k]:
                e = e + red[k] * x[k]
        out.append((e, e.nrd()))
    return out


def short_elements(O: QuatOrder, D: int) -> list[tuple[QuatElement, int]]:
    """Elementos no nulos de norma <= D con su norma."""
    return [(e, int(n)) for e, n in lattice_short_elements(O.A, O.lattice, D)]


def theta_prefix(O: QuatOrder, D: int, degrees: Sequence[int] | None = None) -> dict[int, int]:
    counts = {d: 0 for d in (degrees if degrees is not None else range(1, D + 1))}
    for _, n in short_elements(O, D):
        if n in counts:
            counts[n] += 1
    return counts


def unit_count(O: QuatOrder) -> int:
    return len(short_elements(O, 1))


def local_valuation(O: QuatOrder, q: int) -> int:
    return valuation(O.discrd(), q)

# app/services/curves.py
"""
Curvas elípticas y^2 = x^3 + Ax + B sobre F_{p^2} (y sus extensiones):
puntos, j-invariante, supersingularidad, isogenias de Vélu/Kohel,
duales, bases de torsión y apareamiento de Weil.
"""
from __future__ import annotations
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from app.services.arith import (
    ExtElem,
    Fq2Elem,
    Fq2Field,
    extension,
    factor,
    fq2_field,
    fq2_roots,
    nth_roots,
    poly_deg,
    poly_deriv,
    poly_eval,
    poly_from_roots,
    poly_monic,
    poly_mul,
    poly_add,
    poly_sub,
    poly_scale,
)
from app.utils.errors import BadKernel, InsufficientTorsion
from app.utils.log import log


def field_of(x):
    return x.F


def _field_key(K) -> tuple[int, int]:
    return (K.base.p, K.k) if hasattr(K, "base") else (K.p, 1)


# ======================================================================
# Raíz cuadrada genérica (Tonelli-Shanks) en F_{p^2} o F_{p^{2k}}
# ======================================================================
_NONRES: dict[tuple[int, int], object] = {}


def _nonresidue(K):
    key = _field_key(K)
    if key not in _NONRES:
        rng = random.Random(key[0] * 7919 + key[1])
        half = (K.order - 1) // 2
        while True:
            z = K.random(rng)
            if not z.is_zero() and not (z ** half == 1):
                break
        _NONRES[key] = z
    return _NONRES[key]


def field_sqrt(c):
    """Una raíz de c en su propio cuerpo, o None si no es cuadrado."""
    if c.is_zero():
        return c
    K = c.F
    q = K.order
    if not (c ** ((q - 1) // 2) == 1):
        return None
    s, Q = 0, q - 1
    while Q % 2 == 0:
        s, Q = s + 1, Q // 2
    z = _nonresidue(K) ** Q
    x = c ** ((Q + 1) // 2)
    t = c ** Q
    m = s
    while not (t == 1):
        i, t2 = 0, t
        while not (t2 == 1):
            t2 = t2 * t2
            i += 1
        b = z ** (1 << (m - i - 1))
        x = x * b
        z = b * b
        t = t * z
        m = i
    return x


# ======================================================================
# Curvas y puntos
# ======================================================================
class Curve:
    __slots__ = ("A", "B", "F")

    def __init__(self, A: Fq2Elem, B: Fq2Elem):
        self.F: Fq2Field = A.F
        self.A = A
        self.B = B
        if (4 * A ** 3 + 27 * B ** 2).is_zero():
            raise ValueError("curva singular: 4A^3 + 27B^2 = 0")

    @property
    def p(self) -> int:
        return self.F.p

    def key(self) -> tuple:
        return (self.F.p, self.A.key(), self.B.key())

    def __eq__(self, o) -> bool:
        return isinstance(o, Curve) and self.key() == o.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"Curve(y^2 = x^3 + ({self.A})x + ({self.B}) / F_{self.F.p}^2)"

    def j_invariant(self) -> Fq2Elem:
        a3 = 4 * self.A ** 3
        return 1728 * a3 / (a3 + 27 * self.B ** 2)

    def rhs(self, x):
        return x * x * x + self.A * x + self.B

    def cubic(self) -> list[Fq2Elem]:
        return [self.B, self.A, self.F.zero(), self.F.one()]

    def infinity(self, K=None) -> "Point":
        return Point(self, None, None, K or self.F)

    def point(self, x, y) -> "Point":
        P = Point(self, x, y, x.F)
        if not self.contains(P):
            raise ValueError("el punto no satisface la ecuación de la curva")
        return P

    def contains(self, P: "Point") -> bool:
        return P.inf or (P.y * P.y == self.rhs(P.x))

    def lift_x(self, x) -> "Point | None":
        y = field_sqrt(self.rhs(x))
        if y is None:
            return None
        return Point(self, x, y, x.F)

    def random_point(self, rng: random.Random, K=None) -> "Point":
        K = K or self.F
        while True:
            P = self.lift_x(K.random(rng))
            if P is not None:
                return P if rng.random() < 0.5 else -P

    def twist_by(self, u: Fq2Elem) -> "Curve":
        """Modelo isomorfo por (x, y) -> (u^2 x, u^3 y)."""
        return Curve(u ** 4 * self.A, u ** 6 * self.B)


class Point:
    __slots__ = ("E", "x", "y", "K")

    def __init__(self, E: Curve, x, y, K):
        self.E = E
        self.x = x
        self.y = y
        self.K = K

    @property
    def inf(self) -> bool:
        return self.x is None

    def __repr__(self) -> str:
        return "O" if self.inf else f"({self.x}, {self.y})"

    def __eq__(self, o) -> bool:
        if not isinstance(o, Point):
            return NotImplemented
        if self.inf or o.inf:
            return self.inf and o.inf
        return self.x == o.x and self.y == o.y

    def __hash__(self) -> int:
        return hash(("O",) if self.inf else (self.x.key(), self.y.key()))

    def __neg__(self) -> "Point":
        if self.inf:
            return self
        return Point(self.E, self.x, -self.y, self.K)

    def __add__(self, o: "Point") -> "Point":
        if self.inf:
            return o
        if o.inf:
            return self
        if self.x == o.x:
            if (self.y + o.y).is_zero():
                return self.E.infinity(self.K)
            lam = (3 * self.x * self.x + self.E.A) / (2 * self.y)
        else:
            lam = (o.y - self.y) / (o.x - self.x)
        x3 = lam * lam - self.x - o.x
        y3 = lam * (self.x - x3) - self.y
        K = o.K if isinstance(o.x, ExtElem) else self.K
        return Point(self.E, x3, y3, K)

    def __sub__(self, o: "Point") -> "Point":
        return self + (-o)

    def __mul__(self, n: int) -> "Point":
        if n < 0:
            return (-self) * (-n)
        R = self.E.infinity(self.K)
        Q = self
        while n:
            if n & 1:
                R = R + Q
            Q = Q + Q
            n >>= 1
        return R

    __rmul__ = __mul__

    def embed(self, K) -> "Point":
        if self.inf:
            return self.E.infinity(K)
        if K is self.K:
            return self
        return Point(self.E, K.embed(self.x), K.embed(self.y), K)

    def frobenius(self) -> "Point":
        """Frobenius p-ésimo coordenada a coordenada."""
        if self.inf:
            return self
        if isinstance(self.x, Fq2Elem):
            return Point(self.E, self.x.frobenius(), self.y.frobenius(), self.K)
        p = self.E.p
        return Point(self.E, self.x ** p, self.y ** p, self.K)

    def on_curve(self, E: Curve) -> "Point":
        return Point(E, self.x, self.y, self.K)


def order_dividing(P: Point, n: int) -> int:
    """Orden exacto de P sabiendo que [n]P = O."""
    if not (P * n).inf:
        raise ValueError("el punto no es aniquilado por n")
    o = n
    for q in factor(n).primes():
        while o % q == 0 and (P * (o // q)).inf:
            o //= q
    return o


# ======================================================================
# Modelos canónicos e isomorfismos
# ======================================================================
def curve_from_j(j: Fq2Elem) -> Curve:
    F = j.F
    if j == 0:
        return Curve(F.zero(), F.one())
    if j == 1728:
        return Curve(F.one(), F.zero())
    c = 1728 - j
    return Curve(3 * j * c, 2 * j * c * c)


def automorphisms(E: Curve) -> list[Fq2Elem]:
    """Valores u con (x, y) -> (u^2 x, u^3 y) automorfismo: 2, 4 o 6."""
    F = E.F
    if E.B.is_zero():
        return nth_roots(F.one(), 4)
    if E.A.is_zero():
        return nth_roots(F.one(), 6)
    return sorted([F.one(), -F.one()], key=lambda z: z.key())


def isomorphisms(E: Curve, E2: Curve) -> list[Fq2Elem]:
    """Todos los u con E2 = twist_by(E, u); vacío si j(E) != j(E2)."""
    if not (E.j_invariant() == E2.j_invariant()):
        return []
    if E.B.is_zero():
        if not E2.B.is_zero():
            return []
        cands = nth_roots(E2.A / E.A, 4)
    elif E.A.is_zero():
        if not E2.A.is_zero():
            return []
        cands = nth_roots(E2.B / E.B, 6)
    else:
        u2 = (E.A * E2.B) / (E2.A * E.B)
        cands = nth_roots(u2, 2)
    return [u for u in cands if u ** 4 * E.A == E2.A and u ** 6 * E.B == E2.B]


def apply_iso(P: Point, u: Fq2Elem, E2: Curve) -> Point:
    if P.inf:
        return E2.infinity(P.K)
    u2 = u * u
    return Point(E2, P.x * u2, P.y * u2 * u, P.K)


# ======================================================================
# Traza de Frobenius y supersingularidad
# ======================================================================
_TRACE_CACHE: dict[tuple, int] = {}


def supersingular_traces(p: int) -> list[int]:
    return [0, p, -p, 2 * p, -2 * p]


def frobenius_trace(E: Curve, rng: random.Random | None = None) -> int:
    """Traza t de Frobenius sobre F_{p^2} para una curva supersingular."""
    key = E.key()
    if key in _TRACE_CACHE:
        return _TRACE_CACHE[key]
    p = E.p
    q = p * p
    rng = rng or random.Random(hash(key) & 0xFFFFFFFF)
    alive = supersingular_traces(p)
    for _ in range(64):
        P = E.random_point(rng)
        alive = [t for t in alive if (P * (q + 1 - t)).inf]
        if len(alive) <= 1:
            break
    if len(alive) != 1:
        raise InsufficientTorsion(f"no se pudo aislar la traza de {E} (quedan {alive})")
    _TRACE_CACHE[key] = alive[0]
    return alive[0]


def hasse_invariant(E: Curve) -> Fq2Elem:
    """Coeficiente de x^{p-1} en (x^3 + Ax + B)^{(p-1)/2}."""
    F = E.F
    zero = F.zero()
    f = E.cubic()
    acc = [F.one()]
    for _ in range((E.p - 1) // 2):
        acc = poly_mul(acc, f, zero)
    return acc[E.p - 1] if len(acc) > E.p - 1 else zero


def is_supersingular(E: Curve, rng: random.Random | None = None) -> bool:
    p = E.p
    q = p * p
    rng = rng or random.Random(hash(E.key()) & 0xFFFFFFFF)
    alive = supersingular_traces(p)
    for _ in range(12):
        P = E.random_point(rng)
        alive = [t for t in alive if (P * (q + 1 - t)).inf]
        if not alive:
            return False
    if p < 1000:
        return hasse_invariant(E).is_zero()
    return True


def trace_over(t: int, q: int, k: int) -> int:
    """Traza de Frobenius sobre F_{q^k}: t_k = t t_{k-1} - q t_{k-2}."""
    a, b = 2, t
    for _ in range(k - 1):
        a, b = b, t * b - q * a
    return b if k >= 1 else 2


def torsion_degree(t: int, q: int, m: int, max_degree: int = 12) -> int:
    """Menor k con E[m] contenido en E(F_{q^k})."""
    if t * t == 4 * q:
        lam = t // 2
        for k in range(1, max_degree + 1):
            if pow(lam, k, m) == 1 % m:
                return k
        return max_degree + 1
    # x^k = 1 en Z/m[x]/(x^2 - t x + q)
    a, b = 0, 1  # x^k = a x + b
    for k in range(1, max_degree + 1):
        a, b = (a * t + b) % m, (-a * q) % m
        if a == 0 and b == 1 % m:
            return k
    return max_degree + 1


# ======================================================================
# Apareamiento de Weil (Miller sin desplazamiento)
# ======================================================================
def _line(T: Point, R: Point, Q: Point):
    """Valores (l(Q), v(Q)) para la recta T,R y la vertical por T+R."""
    if T.inf or R.inf:
        return Q.K.one(), Q.K.one()
    if T.x == R.x and (T.y + R.y).is_zero():
        return Q.x - T.x, Q.K.one()
    if T.x == R.x:
        lam = (3 * T.x * T.x + T.E.A) / (2 * T.y)
    else:
        lam = (R.y - T.y) / (R.x - T.x)
    S = T + R
    l = Q.y - T.y - lam * (Q.x - T.x)
    return l, Q.x - S.x


def miller(P: Point, Q: Point, m: int):
    f = Q.K.one()
    T = P
    for bit in bin(m)[3:]:
        l, v = _line(T, T, Q)
        f = f * f * l / v
        T = T + T
        if bit == "1":
            l, v = _line(T, P, Q)
            f = f * l / v
            T = T + P
    return f


def weil_pairing(P: Point, Q: Point, m: int):
    """e_m(P, Q); ZeroDivisionError si el par es degenerado."""
    if P.inf or Q.inf or P == Q:
        return P.K.one() if not P.inf else Q.K.one()
    K = P.K if isinstance(P.x, ExtElem) else Q.K
    P, Q = P.embed(K), Q.embed(K)
    num = miller(P, Q, m)
    den = miller(Q, P, m)
    if num.is_zero() or den.is_zero():
        raise ZeroDivisionError("apareamiento degenerado")
    e = num / den
    return -e if m % 2 else e


def mu_dlog(z, zeta, m: int) -> int:
    """a con zeta^a = z en mu_m (fuerza bruta)."""
    acc = zeta.F.one()
    for a in range(m):
        if acc == z:
            return a
        acc = acc * zeta
    raise ValueError("el elemento no está en <zeta>")


def is_primitive_root_of_unity(z, m: int) -> bool:
    if not (z ** m == 1):
        return False
    return all(not (z ** (m // q) == 1) for q in factor(m).primes())


# ======================================================================
# Bases de torsión
# ======================================================================
@dataclass(frozen=True)
class TorsionBasis:
    m: int
    P: Point
    Q: Point
    zeta: object  # e_m(P, Q), primitiva
    K: object

    def dlog(self, R: Point) -> tuple[int, int]:
        """(a, b) con R = [a]P + [b]Q, vía apareamientos."""
        m = self.m
        R = R.embed(self.K)
        if R.inf:
            return (0, 0)
        try:
            # e(R, Q) = zeta^a ; e(P, R) = zeta^b
            a = mu_dlog(weil_pairing(R, self.Q, m), self.zeta, m)
            b = mu_dlog(weil_pairing(self.P, R, m), self.zeta, m)
        except (ZeroDivisionError, ValueError):
            return self._dlog_brute(R)
        if self.P * a + self.Q * b == R:
            return (a, b)
        return self._dlog_brute(R)

    def _dlog_brute(self, R: Point) -> tuple[int, int]:
        m = self.m
        aP = self.E_inf()
        for a in range(m):
            S = aP
            for b in range(m):
                if S == R:
                    return (a, b)
                S = S + self.Q
            aP = aP + self.P
        raise ValueError("el punto no está en E[m]")

    def E_inf(self) -> Point:
        return self.P.E.infinity(self.K)


def _dependent(R: Point, S: Point) -> bool:
    return R.inf or S.inf or R.x == S.x


_TORSION_CACHE: dict[tuple, TorsionBasis] = {}


def _point_of_exact_order(E: Curve, m: int, N: int, K, rng: random.Random) -> Point | None:
    mpart = 1
    for q in factor(m).primes():
        while (N // mpart) % q == 0:
            mpart *= q
    R = E.random_point(rng, K) * (N // mpart)
    if R.inf:
        return None
    o = order_dividing(R, mpart)
    if o % m != 0:
        return None
    return R * (o // m)


def torsion_basis(E: Curve, m: int, max_degree: int = 12, rng: random.Random | None = None,
                  tries: int = 200) -> TorsionBasis:
    """Base (P, Q) de E[m] sobre la menor extensión que la contiene."""
    key = (E.key(), m)
    if key in _TORSION_CACHE:
        return _TORSION_CACHE[key]
    p = E.p
    if m % p == 0:
        raise BadKernel(f"m={m} no es coprimo con p={p}")
    q = p * p
    t = frobenius_trace(E)
    k = torsion_degree(t, q, m, max_degree)
    K = extension(E.F, k, max_degree)
    rng = rng or random.Random(hash(key) & 0xFFFFFFFF)
    if m == 2 and k == 1:
        roots = sorted(set(fq2_roots(E.cubic())), key=lambda z: z.key())
        if len(roots) == 3:
            zero = E.F.zero()
            P, Q = Point(E, roots[0], zero, K), Point(E, roots[1], zero, K)
            basis = TorsionBasis(2, P, Q, K.one() * -1, K)
            _TORSION_CACHE[key] = basis
            return basis
    N = q ** k + 1 - trace_over(t, q, k)
    if N % (m * m) != 0:
        raise InsufficientTorsion(f"E[{m}] no es racional sobre F_(p^2)^{k}")
    for _ in range(tries):
        P = _point_of_exact_order(E, m, N, K, rng)
        Q = _point_of_exact_order(E, m, N, K, rng)
        if P is None or Q is None or _dependent(P, Q):
            continue
        try:
            z = weil_pairing(P, Q, m)
        except ZeroDivisionError:
            continue
        if is_primitive_root_of_unity(z, m):
            basis = TorsionBasis(m, P, Q, z, K)
            _TORSION_CACHE[key] = basis
            log("curves", f"E[{m}] sobre extensión de grado {k} (p={p})")
            return basis
    raise InsufficientTorsion(f"no se encontró base de E[{m}] tras {tries} intentos")


def torsion_points(basis: TorsionBasis) -> Iterable[Point]:
    """Todos los puntos de E[m]."""
    m = basis.m
    for a in range(m):
        aP = basis.P * a
        for b in range(m):
            yield aP + basis.Q * b


# ======================================================================
# Isogenias (Vélu / Kohel)
# ======================================================================
@dataclass
class Isogeny:
    domain: Curve
    codomain: Curve
    degree: int
    kernel_poly: list = field(repr=False)
    N: list = field(repr=False)
    D: list = field(repr=False)
    u: Fq2Elem = field(repr=False)

    def kernel_key(self) -> tuple:
        return tuple(c.key() for c in self.kernel_poly)

    def evaluate_x(self, x):
        d = poly_eval(self.D, x)
        if d.is_zero():
            return None
        return poly_eval(self.N, x) / d * (self.u * self.u)

    def __call__(self, P: Point) -> Point:
        if P.inf:
            return self.codomain.infinity(P.K)
        d = poly_eval(self.D, P.x)
        if d.is_zero():
            return self.codomain.infinity(P.K)
        n = poly_eval(self.N, P.x)
        dn = poly_eval(poly_deriv(self.N, self.domain.F.zero()), P.x)
        dd = poly_eval(poly_deriv(self.D, self.domain.F.zero()), P.x)
        X = n / d
        Y = P.y * (dn * d - n * dd) / (d * d)
        u2 = self.u * self.u
        return Point(self.codomain, X * u2, Y * u2 * self.u, P.K)

    def post_compose(self, u: Fq2Elem) -> "Isogeny":
        """Compone con (x, y) -> (u^2 x, u^3 y) en el codominio."""
        return Isogeny(self.domain, self.codomain.twist_by(u), self.degree,
                       self.kernel_poly, self.N, self.D, self.u * u)

    def normalized_to(self, target: Curve, which: int = 0) -> "Isogeny":
        isos = isomorphisms(self.codomain, target)
        if not isos:
            raise BadKernel("el codominio no es isomorfo al modelo pedido")
        return self.post_compose(isos[which])

    def contains_x(self, x) -> bool:
        return poly_eval(self.kernel_poly, x).is_zero()


def velu_from_kernel_poly(E: Curve, h: Sequence[Fq2Elem], ell: int) -> Isogeny:
    F = E.F
    zero, one = F.zero(), F.one()
    h = poly_monic(list(h))
    d = poly_deg(h)
    A, B = E.A, E.B
    if ell == 2:
        if d != 1:
            raise BadKernel("el núcleo de una 2-isogenia tiene grado 1")
        x0 = -h[0]
        v = 3 * x0 * x0 + A
        w = x0 * v
        N = [v, -x0, one]
        D = [-x0, one]
    else:
        if 2 * d + 1 != ell:
            raise BadKernel(f"grado {d} incompatible con ell={ell}")
        s1 = -h[d - 1]
        s2 = h[d - 2] if d >= 2 else zero
        s3 = -h[d - 3] if d >= 3 else zero
        p3 = s1 * s1 * s1 - 3 * s1 * s2 + 3 * s3
        v = 6 * (s1 * s1 - 2 * s2) + 2 * d * A
        w = 10 * p3 + 6 * A * s1 + 4 * d * B
        f = E.cubic()
        fp = poly_deriv(f, zero)
        hp = poly_deriv(h, zero)
        hpp = poly_deriv(hp, zero)
        h2 = poly_mul(h, h, zero)
        term1 = poly_mul([-2 * s1, one * ell], h2, zero)
        term2 = poly_scale(poly_mul(fp, poly_mul(hp, h, zero), zero), F(-2))
        term3 = poly_scale(poly_mul(f, poly_sub(poly_mul(hp, hp, zero), poly_mul(h, hpp, zero), zero), zero), F(4))
        N = poly_add(poly_add(term1, term2, zero), term3, zero)
        D = h2
    cod = Curve(A - 5 * v, B - 7 * w)
    return Isogeny(E, cod, ell, h, N, D, one)


def kernel_poly_from_point(E: Curve, P: Point, ell: int) -> list[Fq2Elem]:
    if P.inf or not (P * ell).inf:
        raise BadKernel(f"el generador no tiene orden {ell}")
    F = E.F
    xs = []
    R = P
    for _ in range(max(1, (ell - 1) // 2)):
        xs.append(R.x)
        R = R + P
    K = P.K
    h = poly_from_roots(xs, K.zero(), K.one())
    out = []
    for c in h:
        if isinstance(c, ExtElem):
            if not c.in_base():
                raise BadKernel("el núcleo no es racional sobre F_{p^2}")
            c = c.to_base()
        out.append(F(c))
    return out


def velu(E: Curve, P: Point, ell: int) -> Isogeny:
    return velu_from_kernel_poly(E, kernel_poly_from_point(E, P, ell), ell)


_KPOLY_CACHE: dict[tuple, list] = {}


def kernel_polys(E: Curve, ell: int, max_degree: int = 12) -> list[list[Fq2Elem]]:
    """Los ell+1 polinomios núcleo de E (con multiplicidad de modelo), ordenados."""
    key = (E.key(), ell)
    if key in _KPOLY_CACHE:
        return _KPOLY_CACHE[key]
    F = E.F
    if ell == 2:
        out = [[-r, F.one()] for r in fq2_roots(E.cubic())]
    else:
        basis = torsion_basis(E, ell, max_degree)
        gens = [basis.P] + [basis.Q + basis.P * i for i in range(ell)]
        out = [kernel_poly_from_point(E, G, ell) for G in gens]
    if ell == 2:
        # por la coordenada x del punto del núcleo
        out.sort(key=lambda h: (-h[0]).key())
    else:
        out.sort(key=lambda h: tuple(c.key() for c in h))
    _KPOLY_CACHE[key] = out
    return out


def isogenies_from(E: Curve, ell: int, max_degree: int = 12) -> list[Isogeny]:
    return [velu_from_kernel_poly(E, h, ell) for h in kernel_polys(E, ell, max_degree)]


def _ell_point_outside(phi: Isogeny, max_degree: int) -> Point:
    E = phi.domain
    if phi.degree == 2:
        for r in fq2_roots(E.cubic()):
            if not phi.contains_x(r):
                return Point(E, r, E.F.zero(), E.F)
        raise BadKernel("no hay 2-torsión fuera del núcleo")
    basis = torsion_basis(E, phi.degree, max_degree)
    for R in (basis.P, basis.Q, basis.P + basis.Q):
        if not phi.contains_x(R.x):
            return R
    raise BadKernel("no hay torsión fuera del núcleo")


def dual(phi: Isogeny, max_degree: int = 12, rng: random.Random | None = None) -> Isogeny:
    """phi^ con phi^ o phi = [ell], con codominio el dominio de phi."""
    ell = phi.degree
    E = phi.domain
    R = _ell_point_outside(phi, max_degree)
    image = phi(R)
    psi = velu(phi.codomain, image, ell)
    rng = rng or random.Random(hash((E.key(), phi.kernel_key())) & 0xFFFFFFFF)
    tests = [E.random_point(rng) for _ in range(3)]
    expected = [T * ell for T in tests]
    for u in isomorphisms(psi.codomain, E):
        cand = psi.post_compose(u)
        if all(cand(phi(T)).on_curve(E) == X for T, X in zip(tests, expected)):
            return cand
    raise BadKernel("no se encontró normalización del dual")


def compose_x(phis: Sequence[Isogeny], P: Point) -> Point:
    for phi in phis:
        P = phi(P)
    return P

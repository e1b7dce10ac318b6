# app/services/endos.py
"""
Endomorfismos como cadenas de ell-isogenias.

La traza reducida se obtiene por CRT sobre niveles de torsión pequeños
(matriz del endomorfismo en una base de E[m]) y se levanta al
representante balanceado dentro de la cota de Hasse. Con las trazas se
arma la Gram de <1, alpha, beta, alpha*beta> y su discriminante reducido.
"""
from __future__ import annotations
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol, Sequence

import sympy
from sympy import nextprime

from app.services.arith import CRTResult, Fq2Elem, crt
from app.services.curves import (
    Curve,
    Isogeny,
    Point,
    curve_from_j,
    dual,
    frobenius_trace,
    kernel_polys,
    torsion_basis,
    torsion_degree,
    velu_from_kernel_poly,
)
from app.utils.errors import (
    ExtensionTooLarge,
    InsufficientTorsion,
    NonSquareDiscriminant,
    NotAnOrder,
)
from app.utils.log import log


class Endomorphism(Protocol):
    base: Curve

    @property
    def degree(self) -> int: ...

    def evaluate(self, P: Point) -> Point: ...


# ======================================================================
# Cadenas
# ======================================================================
@dataclass
class EndoChain:
    base: Curve
    steps: list[Isogeny] = field(default_factory=list)
    ell: int = 2
    label: str = ""

    @property
    def degree(self) -> int:
        d = 1
        for s in self.steps:
            d *= s.degree
        return d

    def __post_init__(self):
        if self.steps and not (self.steps[-1].codomain == self.base):
            # identificación explícita con el modelo fijo de j0
            last = self.steps[-1].normalized_to(self.base)
            self.steps = self.steps[:-1] + [last]

    def evaluate(self, P: Point) -> Point:
        for s in self.steps:
            P = s(P)
        return P.on_curve(self.base) if not P.inf else self.base.infinity(P.K)

    __call__ = evaluate

    def then(self, other: "EndoChain") -> "EndoChain":
        """other o self (primero self)."""
        return EndoChain(self.base, self.steps + other.steps, self.ell, f"{other.label}{self.label}")

    def dual_chain(self, max_degree: int = 12) -> "EndoChain":
        return EndoChain(self.base, [dual(s, max_degree) for s in reversed(self.steps)],
                         self.ell, f"dual({self.label})")

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "degree": self.degree,
            "kernels": [[c.to_json() for c in s.kernel_poly] for s in self.steps],
        }


def chain_from_cycle(graph, cycle, label: str = "") -> EndoChain:
    E = graph.curve(cycle.start)
    return EndoChain(E, graph.isogenies(cycle), graph.ell, label)


def verify_charpoly(alpha: Endomorphism, t: int, trials: int = 20, rng: random.Random | None = None) -> bool:
    """alpha^2 - t alpha + deg = 0 en puntos al azar."""
    rng = rng or random.Random(7)
    E = alpha.base
    n = alpha.degree
    for _ in range(trials):
        P = E.random_point(rng)
        aP = alpha.evaluate(P)
        R = alpha.evaluate(aP) - aP * t + P * n
        if not R.inf:
            return False
    return True


# ======================================================================
# Oráculo de trazas por CRT sobre torsión
# ======================================================================
Mat = tuple[int, int, int, int]  # (a, b, c, d) = [[a, b], [c, d]], columnas = imágenes


def mat_mul(X: Mat, Y: Mat, m: int) -> Mat:
    a, b, c, d = X
    e, f, g, h = Y
    return ((a * e + b * g) % m, (a * f + b * h) % m, (c * e + d * g) % m, (c * f + d * h) % m)


def mat_adj(X: Mat, m: int) -> Mat:
    a, b, c, d = X
    return (d % m, -b % m, -c % m, a % m)


def mat_trace(X: Mat, m: int) -> int:
    return (X[0] + X[3]) % m


def hasse_bound(n: int) -> int:
    """Cota entera de 2*sqrt(n)."""
    return math.isqrt(4 * n) + 1


class TraceOracle:
    """Matrices de endomorfismos sobre E[m] para varios m y trazas por CRT."""

    def __init__(self, E: Curve, ell: int = 2, levels: Sequence[int] = (3, 5, 7, 11, 13, 17, 19, 23),
                 max_degree: int = 12, cap: int = 10 ** 4, threads: int = 1):
        self.E = E
        self.ell = ell
        self.levels = list(levels)
        self.max_degree = max_degree
        self.cap = cap
        self.threads = threads
        self._usable: list[int] = []
        self._next = 0
        self._mats: dict[tuple[int, int], Mat] = {}
        self._keep: dict[int, object] = {}

    # ---------- niveles ----------
    def _candidate(self, i: int) -> int:
        if i < len(self.levels):
            return self.levels[i]
        m = self.levels[-1] if self.levels else 2
        for _ in range(i - len(self.levels) + 1):
            m = int(nextprime(m))
        return m

    def _usable_level(self, m: int) -> bool:
        p = self.E.p
        if m in (self.ell, p) or m > self.cap:
            return False
        t = frobenius_trace(self.E)
        if torsion_degree(t, p * p, m, self.max_degree) > self.max_degree:
            return False
        try:
            torsion_basis(self.E, m, self.max_degree)
        except (ExtensionTooLarge, InsufficientTorsion) as e:
            log("endos", f"nivel m={m} descartado: {e}")
            return False
        return True

    def levels_for(self, bound: int) -> list[int]:
        """Niveles cuyo producto supera 2*bound."""
        out, prod, i = [], 1, 0
        while prod <= 2 * bound:
            if i >= len(self._usable):
                while True:
                    m = self._candidate(self._next)
                    self._next += 1
                    if m > self.cap:
                        raise InsufficientTorsion(
                            f"capacidad CRT insuficiente: producto {prod} <= {2 * bound} con m <= {self.cap}"
                        )
                    if self._usable_level(m):
                        self._usable.append(m)
                        break
            m = self._usable[i]
            out.append(m)
            prod *= m
            i += 1
        return out

    # ---------- matrices ----------
    def matrix(self, alpha: Endomorphism, m: int) -> Mat:
        key = (id(alpha), m)
        if key not in self._mats:
            self._keep[id(alpha)] = alpha
            basis = torsion_basis(self.E, m, self.max_degree)
            a, c = basis.dlog(alpha.evaluate(basis.P))
            b, d = basis.dlog(alpha.evaluate(basis.Q))
            self._mats[key] = (a, b, c, d)
        return self._mats[key]

    def _prefetch(self, alphas: Sequence[Endomorphism], ms: Sequence[int]) -> None:
        jobs = [(a, m) for m in ms for a in alphas if (id(a), m) not in self._mats]
        if self.threads > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                list(pool.map(lambda am: self.matrix(*am), jobs))
        else:
            for a, m in jobs:
                self.matrix(a, m)

    def _lift(self, residues: list[tuple[int, int]], bound: int, what: str) -> int:
        res: CRTResult = crt(residues)
        t = res.balanced
        if abs(t) > bound:
            raise InsufficientTorsion(f"{what}: {t} fuera de la cota {bound}")
        return t

    def trace(self, alpha: Endomorphism) -> int:
        bound = hasse_bound(alpha.degree)
        ms = self.levels_for(bound)
        self._prefetch([alpha], ms)
        return self._lift([(mat_trace(self.matrix(alpha, m), m), m) for m in ms], bound, "Trd")

    def pair_traces(self, alpha: Endomorphism, beta: Endomorphism) -> dict:
        """Trd(alpha), Trd(beta), Trd(alpha beta) y Trd(alpha beta^) con verificación cruzada."""
        na, nb = alpha.degree, beta.degree
        bound = hasse_bound(na * nb)
        ms = self.levels_for(bound)
        self._prefetch([alpha, beta], ms)
        ta = self._lift([(mat_trace(self.matrix(alpha, m), m), m) for m in ms], hasse_bound(na), "Trd(alpha)")
        tb = self._lift([(mat_trace(self.matrix(beta, m), m), m) for m in ms], hasse_bound(nb), "Trd(beta)")
        prod = [(mat_trace(mat_mul(self.matrix(alpha, m), self.matrix(beta, m), m), m), m) for m in ms]
        tab = self._lift(prod, bound, "Trd(alpha beta)")
        conj = [(mat_trace(mat_mul(self.matrix(alpha, m), mat_adj(self.matrix(beta, m), m), m), m), m) for m in ms]
        tabh = self._lift(conj, bound, "Trd(alpha beta^)")
        if tabh != ta * tb - tab:
            raise InsufficientTorsion("las dos vías para Trd(alpha beta^) no coinciden")
        return {"t_alpha": ta, "t_beta": tb, "t_ab": tab, "t_ab_hat": tabh, "n_alpha": na, "n_beta": nb}

    def pairing(self, x: Endomorphism, y: Endomorphism) -> int:
        """Trd(x conj(y))."""
        bound = hasse_bound(x.degree * y.degree)
        ms = self.levels_for(bound)
        self._prefetch([x, y], ms)
        res = [(mat_trace(mat_mul(self.matrix(x, m), mat_adj(self.matrix(y, m), m), m), m), m) for m in ms]
        return self._lift(res, bound, "Trd(x y^)")


def reduced_trace(alpha: Endomorphism, oracle: TraceOracle | None = None) -> int:
    if isinstance(alpha, EndoChain) and not alpha.steps:
        return 2
    oracle = oracle or TraceOracle(alpha.base)
    return oracle.trace(alpha)


# ======================================================================
# Gram y discriminante reducido
# ======================================================================
@dataclass
class GramMatrix:
    entries: list[list[int]]
    t_alpha: int
    t_beta: int
    t_ab: int
    n_alpha: int
    n_beta: int

    @property
    def det(self) -> int:
        return int(sympy.Matrix(self.entries).det())

    def is_positive_definite(self) -> bool:
        M = sympy.Matrix(self.entries)
        return all(M[:k, :k].det() > 0 for k in range(1, 5))

    def to_json(self) -> dict:
        return {
            "entries": self.entries,
            "traces": [self.t_alpha, self.t_beta, self.t_ab],
            "norms": [self.n_alpha, self.n_beta],
        }


def gram_from_traces(ta: int, na: int, tb: int, nb: int, tab: int) -> GramMatrix:
    """Trd(x_i conj(x_j)) para la base {1, alpha, beta, alpha beta}."""
    ab_hat = ta * tb - tab  # Trd(alpha conj(beta))
    G = [
        [2, ta, tb, tab],
        [ta, 2 * na, ab_hat, na * tb],
        [tb, ab_hat, 2 * nb, nb * ta],
        [tab, na * tb, nb * ta, 2 * na * nb],
    ]
    return GramMatrix(G, ta, tb, tab, na, nb)


def discrd_from_gram(G: GramMatrix) -> int:
    det = G.det
    if det == 0:
        raise NotAnOrder("los cuatro elementos son linealmente dependientes (det Gram = 0)")
    if not G.is_positive_definite():
        raise NotAnOrder("la Gram no es definida positiva")
    r = math.isqrt(abs(det))
    if r * r != abs(det):
        raise NonSquareDiscriminant(f"|det Gram| = {abs(det)} no es un cuadrado")
    return r


def gram_and_discrd(alpha: Endomorphism, beta: Endomorphism, oracle: TraceOracle | None = None) -> tuple[GramMatrix, int]:
    oracle = oracle or TraceOracle(alpha.base)
    tr = oracle.pair_traces(alpha, beta)
    G = gram_from_traces(tr["t_alpha"], tr["n_alpha"], tr["t_beta"], tr["n_beta"], tr["t_ab"])
    return G, discrd_from_gram(G)


def discriminant(t: int, n: int) -> int:
    return t * t - 4 * n


def eq1_discrd(tu: int, nu: int, tphi: int, nphi: int, trd_u_phihat: int) -> Fraction:
    """discrd(<1, u, phi, u phi>) a partir de trazas y normas."""
    du, dphi = discriminant(tu, nu), discriminant(tphi, nphi)
    return Fraction(du * dphi - (tu * tphi - 2 * trd_u_phihat) ** 2, 4)


def eq1_bound(tu: int, nu: int, tphi: int, nphi: int) -> Fraction:
    return Fraction(discriminant(tu, nu) * discriminant(tphi, nphi), 4)


# ======================================================================
# Conteo de endomorfismos de grado d (subgrupos cíclicos)
# ======================================================================
ELIGIBLE_PRIMES = (2, 3)


def aut_size(j: Fq2Elem) -> int:
    if j == 0:
        return 6
    if j == 1728:
        return 4
    return 2


class KernelWalker:
    """Pasos de q-isogenia desde el modelo canónico de cada j, con el núcleo dual en destino."""

    def __init__(self, p: int, q: int, max_degree: int = 12):
        self.p = p
        self.q = q
        self.max_degree = max_degree
        self._steps: dict[Fq2Elem, list[tuple[tuple, Fq2Elem, tuple]]] = {}

    def steps(self, j: Fq2Elem) -> list[tuple[tuple, Fq2Elem, tuple]]:
        if j not in self._steps:
            E = curve_from_j(j)
            rows = []
            for h in kernel_polys(E, self.q, self.max_degree):
                phi = velu_from_kernel_poly(E, h, self.q)
                j2 = phi.codomain.j_invariant()
                phi = phi.normalized_to(curve_from_j(j2))
                back = tuple(dual(phi, self.max_degree).kernel_poly)
                rows.append((tuple(h), j2, back))
            self._steps[j] = rows
        return self._steps[j]

    def chains(self, j0: Fq2Elem, e: int) -> dict[Fq2Elem, int]:
        """Cantidad de cadenas sin retroceso de longitud e desde j0, por j final."""
        states: dict[tuple[Fq2Elem, tuple | None], int] = {(j0, None): 1}
        for _ in range(e):
            nxt: dict[tuple[Fq2Elem, tuple | None], int] = {}
            for (j, forbidden), cnt in states.items():
                for h, j2, back in self.steps(j):
                    if forbidden is not None and h == forbidden:
                        continue
                    key = (j2, back)
                    nxt[key] = nxt.get(key, 0) + cnt
            states = nxt
        out: dict[Fq2Elem, int] = {}
        for (j, _), cnt in states.items():
            out[j] = out.get(j, 0) + cnt
        return out


class EndomorphismCounter:
    """theta_d(E) = #{endomorfismos de grado d} para d con primos en {2, 3}."""

    def __init__(self, p: int, max_degree: int = 12):
        self.walkers = {q: KernelWalker(p, q, max_degree) for q in ELIGIBLE_PRIMES}
        self._cyc: dict[tuple[Fq2Elem, int], int] = {}

    def cyclic(self, j: Fq2Elem, n: int) -> int:
        """Subgrupos cíclicos C de orden n con j(E/C) = j."""
        key = (j, n)
        if key in self._cyc:
            return self._cyc[key]
        a = b = 0
        m = n
        while m % 2 == 0:
            m, a = m // 2, a + 1
        while m % 3 == 0:
            m, b = m // 3, b + 1
        if m != 1:
            raise ValueError(f"n={n} tiene primos fuera de {ELIGIBLE_PRIMES}")
        total = 0
        for j2, c2 in self.walkers[2].chains(j, a).items():
            c3 = self.walkers[3].chains(j2, b).get(j, 0) if b else (1 if j2 == j else 0)
            total += c2 * c3
        self._cyc[key] = total
        return total

    def theta(self, j: Fq2Elem, d: int) -> int:
        out = 0
        m = 1
        while m * m <= d:
            if d % (m * m) == 0:
                out += self.cyclic(j, d // (m * m))
            m += 1
        return out * aut_size(j)

    def prefix(self, j: Fq2Elem, D: int) -> dict[int, int]:
        return {d: self.theta(j, d) for d in eligible_degrees(D)}


def eligible_degrees(D: int) -> list[int]:
    out = []
    for d in range(1, D + 1):
        m = d
        for q in ELIGIBLE_PRIMES:
            while m % q == 0:
                m //= q
        if m == 1:
            out.append(d)
    return out

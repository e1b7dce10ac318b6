# app/services/reduction.py
"""
Del camino de isogenias al anillo de endomorfismos, y el hash CGL de juguete.

- IdealPathTranslator: recurrencia paso a paso J_k = J_{k-1} I_k, donde
  I_k sale de la acción de O_{k-1} sobre E_{k-1}[ell] (un sistema 2x4 en
  F_ell). La acción se obtiene con una isogenia de grado N coprimo con ell
  desde j = 1728, leída de un elemento corto de J_{k-1}; nunca hace falta
  torsión de orden ell^k.
- El mismo marco traduce un ideal izquierdo de O~ de norma ell^k en camino.
- cgl_hash / second_preimage: la segunda preimagen se busca entre ideales
  equivalentes a J de norma 2^{k'}, no recorriendo entradas.
"""
from __future__ import annotations
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

from sympy import isprime, nextprime

from app.config import Settings, get_settings
from app.services.arith import Fq2Elem
from app.services.curves import (
    Curve,
    Point,
    apply_iso,
    compose_x,
    dual,
    frobenius_trace,
    isomorphisms,
    torsion_basis,
    torsion_degree,
    velu,
    velu_from_kernel_poly,
)
from app.services.endos import KernelWalker
from app.services.endring import EmbeddedEndomorphism, build_graph, verify_embedded
from app.services.graph import Edge, IsogenyGraph, IsogenyPath, supersingular_start
from app.services.quatorders import (
    QuatElement,
    QuatOrder,
    lattice_of,
    lattice_product,
    lattice_short_elements,
    right_mul,
    right_order,
    theta_prefix,
)
from app.services.special import SpecialCurve, special_curve
from app.utils.errors import BadKernel, DeskScaleExceeded, NotFound
from app.utils.lattice import RatLattice, nullspace_mod
from app.utils.log import log

# cotas sucesivas para N = nrd(delta) / n al buscar el marco
FRAME_BOUNDS = (16, 64, 256, 1024)


# ======================================================================
# Marco de un paso
# ======================================================================
@dataclass
class StepFrame:
    """Acción de O_R(J) sobre E = E_J, transportada desde j = 1728.

    delta en J con nrd(delta) = n N; psi: E~ -> E es +-(Phi conj(delta) / n)
    y psi_hat su dual. Para beta en O_R(J):
        theta_beta = psi (delta beta conj(delta) / n) psi_hat / N^2.
    """
    special: SpecialCurve
    curve: Curve
    J: RatLattice
    n: int
    order: QuatOrder
    delta: QuatElement
    N: int
    psi: Callable[[Point], Point]
    psi_hat: Callable[[Point], Point]
    ell: int
    max_degree: int = 12

    def action(self, beta: QuatElement, R: Point) -> Point:
        """theta_beta(R) para R en E[ell]."""
        y = self.delta * beta * self.delta.conj() * Fraction(1, self.n)
        if y not in self.special.order:
            raise NotFound("delta beta conj(delta) / n no es entero")
        S = self.psi_hat(R)
        Y = self.special.evaluate_torsion(y, S, self.ell)
        return self.psi(Y) * pow(self.N * self.N, -1, self.ell)

    def kernel_ideal(self, K: Point) -> RatLattice:
        """I = {beta en O_R(J) : theta_beta(K) = 0}, de norma ell."""
        ell = self.ell
        T = torsion_basis(self.curve, ell, self.max_degree)
        basis = self.order.basis()
        rows: list[list[int]] = [[], []]
        for b in basis:
            a, c = T.dlog(self.action(b, K))
            rows[0].append(a)
            rows[1].append(c)
        gens = [sum((b * int(x) for b, x in zip(basis, v)), self.special.algebra(0))
                for v in nullspace_mod(rows, ell)]
        I = lattice_of(gens + [b * ell for b in basis])
        if I.det() / self.order.lattice.det() != ell ** 2:
            raise NotFound(f"el ideal núcleo no tiene índice {ell}^2")
        return I


def kernel_point(E: Curve, h, ell: int, max_degree: int = 12) -> Point:
    """Generador del núcleo con polinomio h."""
    if ell == 2:
        return Point(E, -h[0], E.F.zero(), E.F)
    phi = velu_from_kernel_poly(E, list(h), ell)
    T = torsion_basis(E, ell, max_degree)
    for G in [T.P] + [T.Q + T.P * a for a in range(ell)]:
        if phi.contains_x(G.x):
            return G
    raise BadKernel("ningún punto de E[ell] genera el núcleo")


# ======================================================================
# Pasos y resultado
# ======================================================================
@dataclass
class PathStep:
    k: int
    J: RatLattice  # J_k, ideal izquierdo de O~ de norma ell^k
    I: RatLattice  # I_k, ideal núcleo de phi_k en O_{k-1}
    order: QuatOrder  # O_k = O_R(J_k)
    N: int = 1  # grado del transporte usado en el paso

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "J": [[str(x) for x in r] for r in self.J.basis()],
            "I": [[str(x) for x in r] for r in self.I.basis()],
            "order": self.order.to_json()["basis"],
            "N": self.N,
        }


@dataclass
class PathEndResult:
    special: SpecialCurve
    path: IsogenyPath
    steps: list[PathStep] = field(default_factory=list)

    @property
    def order(self) -> QuatOrder:
        return self.steps[-1].order if self.steps else self.special.order

    @property
    def ideal(self) -> RatLattice:
        return self.steps[-1].J if self.steps else self.special.order.lattice

    def to_json(self) -> dict:
        return {
            "p": self.special.p,
            "j": self.path.end.to_json(),
            "length": len(self.path),
            "discrd": self.order.discrd(),
            "basis": self.order.to_json()["basis"],
            "steps": [s.to_json() for s in self.steps],
        }


# ======================================================================
# Traductor camino <-> ideal
# ======================================================================
class IdealPathTranslator:
    """Caminos desde j = 1728 e ideales izquierdos de O~, con marcos en caché."""

    def __init__(self, graph: IsogenyGraph, settings: Settings | None = None):
        self.settings = settings or get_settings()
        self.graph = graph
        self.p = graph.p
        self.ell = graph.ell
        self.cap = self.settings.max_ext_degree
        self.sc = special_curve(self.p, self.cap)
        self.A = self.sc.algebra
        self.trace = frobenius_trace(self.sc.curve)
        self._frames: dict[tuple, StepFrame] = {}
        self._levels = self._check_levels()

    def _fits(self, m: int) -> bool:
        return m != self.p and torsion_degree(self.trace, self.p * self.p, m, self.cap) <= self.cap

    def _check_levels(self) -> list[int]:
        out = []
        m = 5
        while len(out) < 2 and m < 1000:
            if m != self.ell and self._fits(m):
                out.append(m)
            m = nextprime(m)
        if len(out) < 2:
            raise DeskScaleExceeded(f"sin niveles de control para p={self.p}")
        return out

    def _admissible(self, N: int) -> bool:
        if N == 1:
            return True
        return N % 2 == 1 and N % self.ell != 0 and isprime(N) and self._fits(N)

    # ---------- marcos ----------
    def frame(self, j: Fq2Elem, J: RatLattice, n: int, order: QuatOrder, phis: list) -> StepFrame:
        key = (j.key(), J.key())
        if key in self._frames:
            return self._frames[key]
        E = self.graph.curve(j)
        tried: set[tuple] = set()
        for bound in FRAME_BOUNDS:
            cands = []
            for d, nr in lattice_short_elements(self.A, J, n * bound):
                N = nr / n
                if N.denominator != 1 or not self._admissible(int(N)):
                    continue
                sig = min(tuple(d.c), tuple((-d).c))
                if sig in tried:
                    continue
                tried.add(sig)
                cands.append((int(N), sig, d))
            cands.sort(key=lambda c: (c[0], c[1]))
            for N, _, d in cands:
                try:
                    fr = self._frame_from(E, J, n, order, phis, d, N)
                except (NotFound, BadKernel, DeskScaleExceeded) as e:
                    log("reduction", f"marco con N={N} descartado: {e}")
                    continue
                self._frames[key] = fr
                return fr
        raise NotFound(f"sin marco para j={j} (n={n})")

    def _frame_from(self, E: Curve, J: RatLattice, n: int, order: QuatOrder, phis: list,
                    delta: QuatElement, N: int) -> StepFrame:
        sc = self.sc
        E0 = sc.curve
        dbar = delta.conj()
        m0 = next(m for m in self._levels if m != N)
        T0 = torsion_basis(E0, m0, self.cap)
        inv_n = pow(n, -1, m0)
        want = [compose_x(phis, sc.evaluate_torsion(dbar, S, m0)) * inv_n for S in (T0.P, T0.Q)]
        if N == 1:
            cod, base = E0, None
        else:
            T = torsion_basis(E0, N, self.cap)
            gens = [T.P] + [T.Q + T.P * a for a in range(N)]
            S = next((G for G in gens if sc.evaluate_torsion(dbar, G, N).inf), None)
            if S is None:
                raise NotFound(f"conj(delta) no mata un subgrupo de orden {N}")
            base = velu(E0, S, N)
            cod = base.codomain
        for u in isomorphisms(cod, E):
            if base is None:
                psi = lambda P, u=u: apply_iso(P, u, E)
                psi_hat = lambda R, u=u: apply_iso(R, 1 / u, E0)
            else:
                psi = base.post_compose(u)
                psi_hat = None
            imgs = [psi(S) for S in (T0.P, T0.Q)]
            if imgs == want or imgs == [-w for w in want]:
                if psi_hat is None:
                    psi_hat = dual(psi, self.cap)
                return StepFrame(sc, E, J, n, order, delta, N, psi, psi_hat, self.ell, self.cap)
        raise NotFound("ningún isomorfismo coincide con el transporte")

    # ---------- camino -> ideales ----------
    def _extend(self, J: RatLattice, I: RatLattice, n: int, k: int) -> tuple[RatLattice, QuatOrder]:
        J2 = lattice_product(self.A, J, I)
        if J2.det() / self.sc.order.lattice.det() != (n * self.ell) ** 2:
            raise NotFound(f"J_{k} no tiene norma {self.ell}^{k}")
        O = QuatOrder(self.A, right_order(self.A, J2), check=False, p=self.p)
        return J2, O

    def path_to_ideals(self, path: IsogenyPath) -> PathEndResult:
        if not (path.start == 1728):
            raise ValueError("el camino debe partir de j = 1728")
        res = PathEndResult(self.sc, path)
        J, O, n = self.sc.order.lattice, self.sc.order, 1
        phis = []
        for k, e in enumerate(path.edges, 1):
            fr = self.frame(e.src, J, n, O, phis)
            K = kernel_point(fr.curve, self.graph.kernel_of(e), self.ell, self.cap)
            I = fr.kernel_ideal(K)
            J, O = self._extend(J, I, n, k)
            n *= self.ell
            res.steps.append(PathStep(k, J, I, O, fr.N))
            log("reduction", f"paso {k}: N={fr.N}, discrd(O_{k}) = {O.discrd()}")
            phis.append(self.graph.isogeny(e))
        return res

    # ---------- ideal -> camino ----------
    def norm_exponent(self, I: RatLattice) -> int:
        idx = I.det() / self.sc.order.lattice.det()
        r = math.isqrt(int(idx))
        k = 0
        while r > 1 and r % self.ell == 0:
            r //= self.ell
            k += 1
        if r != 1 or idx != self.ell ** (2 * k):
            raise ValueError(f"el ideal no tiene norma potencia de {self.ell}")
        return k

    def ideal_to_path(self, target: RatLattice) -> tuple[IsogenyPath, RatLattice]:
        """Camino desde 1728 cuyo ideal núcleo es target (cíclico, norma ell^k)."""
        k = self.norm_exponent(target)
        j = self.graph.F(1728)
        path = IsogenyPath(j)
        J, O, n = self.sc.order.lattice, self.sc.order, 1
        phis = []
        for t in range(1, k + 1):
            fr = self.frame(j, J, n, O, phis)
            hit = None
            for h, j2 in self.graph.kernel_table(j):
                I = fr.kernel_ideal(kernel_point(fr.curve, h, self.ell, self.cap))
                J2 = lattice_product(self.A, J, I)
                if J2.contains_lattice(target):
                    hit = (h, j2, I)
                    break
            if hit is None:
                raise NotFound(f"el ideal no continúa en el paso {t}")
            h, j2, I = hit
            J, O = self._extend(J, I, n, t)
            n *= self.ell
            e = Edge(j, j2, h, 0)
            path.edges.append(e)
            phis.append(self.graph.isogeny(e))
            j = j2
        if J != target:
            raise NotFound("el ideal final no coincide con el pedido")
        return path, J


def end_from_path(path: IsogenyPath, graph: IsogenyGraph | None = None, settings: Settings | None = None,
                  translator: IdealPathTranslator | None = None) -> PathEndResult:
    settings = settings or get_settings()
    p = path.start.F.p
    if translator is None:
        special_curve(p)  # UnsupportedPrime si p != 3 mod 4
        if not (path.start == 1728):
            raise ValueError("el camino debe partir de j = 1728")
        translator = IdealPathTranslator(graph or build_graph(p, settings), settings)
    return translator.path_to_ideals(path)


# ======================================================================
# Hash CGL
# ======================================================================
@dataclass(frozen=True)
class CGLInput:
    bits: str

    def __post_init__(self):
        if any(b not in "01" for b in self.bits):
            raise ValueError("la entrada CGL es una cadena de bits")

    @classmethod
    def from_hex(cls, text: str, length: int | None = None) -> "CGLInput":
        text = text.lower().removeprefix("0x")
        n = int(text, 16) if text else 0
        length = length if length is not None else 4 * len(text)
        if n >= 2 ** length:
            raise ValueError(f"{text} no cabe en {length} bits")
        return cls(format(n, "b").zfill(length) if length else "")

    def to_hex(self) -> str:
        return format(int(self.bits, 2), "x") if self.bits else ""

    def __len__(self) -> int:
        return len(self.bits)


class CGLHasher:
    """Caminata sin retroceso guiada por bits, con núcleos en orden canónico."""

    def __init__(self, p: int, max_degree: int = 12, start: Fq2Elem | None = None):
        self.p = p
        self.walker = KernelWalker(p, 2, max_degree)
        self.start = start if start is not None else supersingular_start(p)

    def choices(self, j: Fq2Elem, forbidden: tuple | None) -> list[tuple[tuple, Fq2Elem, tuple]]:
        rows = self.walker.steps(j)
        if forbidden is None:
            return rows[:2]
        return [r for r in rows if r[0] != forbidden][:2]

    def walk(self, inp: CGLInput) -> IsogenyPath:
        j = self.start
        forbidden = None
        path = IsogenyPath(j)
        for bit in inp.bits:
            h, j2, back = self.choices(j, forbidden)[int(bit)]
            path.edges.append(Edge(j, j2, h, 0))
            j, forbidden = j2, back
        return path

    def hash(self, inp: CGLInput) -> Fq2Elem:
        return self.walk(inp).end

    def bits_for(self, path: IsogenyPath) -> CGLInput | None:
        """La entrada que recorre path, o None si alguna arista no es elegible."""
        if not (path.start == self.start):
            return None
        j, forbidden, bits = self.start, None, ""
        for e in path.edges:
            rows = self.choices(j, forbidden)
            b = next((i for i, r in enumerate(rows) if r[0] == tuple(e.kernel)), None)
            if b is None:
                return None
            bits += str(b)
            j, forbidden = rows[b][1], rows[b][2]
        return CGLInput(bits)

    def all_inputs(self, length: int) -> Iterator[tuple[CGLInput, Fq2Elem]]:
        """Todas las entradas de la longitud dada (DFS, orden lexicográfico)."""
        def rec(j, forbidden, bits):
            if len(bits) == length:
                yield CGLInput(bits), j
                return
            for b, (h, j2, back) in enumerate(self.choices(j, forbidden)):
                yield from rec(j2, back, bits + str(b))

        yield from rec(self.start, None, "")


def cgl_hash(inp: CGLInput, p: int, hasher: CGLHasher | None = None) -> Fq2Elem:
    return (hasher or CGLHasher(p)).hash(inp)


@dataclass
class AttackResult:
    input: CGLInput
    second_preimage: CGLInput
    j_hash: Fq2Elem
    steps: int  # ideales equivalentes examinados
    norm_exponent: int = 0
    audit: dict | None = None

    def to_json(self) -> dict:
        return {
            "input": self.input.bits,
            "second_preimage": self.second_preimage.bits,
            "j_hash": self.j_hash.to_json(),
            "steps": self.steps,
            "norm_exponent": self.norm_exponent,
            "audit": self.audit,
        }


def equivalent_ideals(tr: IdealPathTranslator, J: RatLattice, n: int, kp: int) -> Iterator[RatLattice]:
    """Ideales J conj(delta) / n de norma ell^kp, con delta en J y nrd(delta) = n ell^kp.

    Se descartan los no cíclicos (contenidos en ell O~) y los repetidos.
    """
    target = n * tr.ell ** kp
    ellO = tr.sc.order.lattice.scale(tr.ell)
    seen = {J.key()}
    elems = [d for d, nr in lattice_short_elements(tr.A, J, target) if nr == target]
    elems.sort(key=lambda d: tuple(d.c))
    for d in elems:
        I = right_mul(J, d.conj() * Fraction(1, n))
        if I.key() in seen or ellO.contains_lattice(I):
            continue
        seen.add(I.key())
        yield I


def second_preimage(inp: CGLInput, p: int, settings: Settings | None = None, *,
                    extra_length: int = 4, audit: bool = True) -> AttackResult:
    """Otra entrada con el mismo hash, vía O_R = End(E_hash).

    J = ideal núcleo del camino de entrada; se prueban ideales equivalentes
    de norma 2^{k'} (k <= k' <= k + extra_length) y cada uno se traduce a
    camino y luego a bits.
    """
    settings = settings or get_settings()
    special_curve(p)
    if settings.ell != 2:
        settings = settings.with_overrides(ell=2)
    hasher = CGLHasher(p, settings.max_ext_degree)
    graph = build_graph(p, settings)
    tr = IdealPathTranslator(graph, settings)
    path = hasher.walk(inp)
    target = path.end
    res_in = tr.path_to_ideals(path)
    J, n = res_in.ideal, 2 ** len(inp)
    log("attack", f"p={p}: O_R(J) con discrd {res_in.order.discrd()}, buscando ideales equivalentes")
    examined = 0
    for kp in range(max(1, len(inp)), len(inp) + extra_length + 1):
        for I in equivalent_ideals(tr, J, n, kp):
            examined += 1
            try:
                new_path, _ = tr.ideal_to_path(I)
            except (NotFound, BadKernel, DeskScaleExceeded) as e:
                log("attack", f"ideal {examined} descartado: {e}")
                continue
            cand = hasher.bits_for(new_path)
            if cand is None or cand == inp:
                continue
            if not (hasher.hash(cand) == target):
                log("attack", f"ideal {examined}: el camino no termina en el hash")
                continue
            log("attack", f"p={p}: segunda preimagen de largo {kp} tras {examined} ideales")
            res = AttackResult(inp, cand, target, examined, kp)
            if audit:
                res.audit = _audit(tr, res_in, I, new_path)
            return res
    raise NotFound(f"sin segunda preimagen hasta longitud {len(inp) + extra_length}")


def _audit(tr: IdealPathTranslator, res_in: PathEndResult, I: RatLattice, new_path: IsogenyPath) -> dict:
    """Recalcula el ideal del camino nuevo y compara O_R por su serie theta."""
    res_new = tr.path_to_ideals(new_path)
    O1, O2 = res_in.order, res_new.order
    D = 30
    return {
        "discrd": [O1.discrd(), O2.discrd()],
        "theta_equal": theta_prefix(O1, D) == theta_prefix(O2, D),
        "ideal_match": res_new.ideal == I,
    }


def check_embedded_generator(sc: SpecialCurve, x: QuatElement, trials: int = 5) -> bool:
    endo = EmbeddedEndomorphism(sc.curve, sc.generators(), list(x.c), int(x.nrd()))
    return verify_embedded(endo, int(x.trd()), trials=trials)

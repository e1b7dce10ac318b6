# app/services/graph.py
"""
Grafo de ell-isogenias supersingulares G(p, ell).

- Polinomio modular Phi_2 embebido (Phi_ell desde archivo "dx dy c").
- Vecinos, pertenencia a S^p, caminatas aleatorias, recorte de aristas
  duales y búsqueda de pares de ciclos por el j-invariante de partida.
- Las aristas guardan el polinomio núcleo cuando la multiplicidad no
  basta para identificarlas; si es 1 se resuelve a demanda.
"""
from __future__ import annotations
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from sympy import legendre_symbol

from app.services.arith import Fq2Elem, Fq2Field, fq2_field, fq2_roots
from app.services.curves import (
    Curve,
    Isogeny,
    curve_from_j,
    dual,
    kernel_polys,
    velu_from_kernel_poly,
)
from app.utils.errors import ConfigError, SearchExhausted
from app.utils.log import log


# ======================================================================
# Polinomios modulares
# ======================================================================
# Phi_2(X, Y), solo términos con dx >= dy; el resto por simetría
_PHI2_HALF = {
    (3, 0): 1,
    (2, 2): -1,
    (2, 1): 1488,
    (2, 0): -162000,
    (1, 1): 40773375,
    (1, 0): 8748000000,
    (0, 0): -157464000000000,
}


class ModularPolynomial:
    """Phi_ell(X, Y) con coeficientes enteros exactos."""

    def __init__(self, ell: int, half: dict[tuple[int, int], int]):
        self.ell = ell
        coeffs: dict[tuple[int, int], int] = {}
        for (dx, dy), c in half.items():
            coeffs[(dx, dy)] = c
            coeffs[(dy, dx)] = c
        self.coeffs = coeffs
        self.deg = max(dx for dx, _ in coeffs)

    @classmethod
    def from_file(cls, path: str | Path, ell: int) -> "ModularPolynomial":
        half: dict[tuple[int, int], int] = {}
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"no se pudo leer el polinomio modular: {e}")
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ConfigError(f"{path}:{n}: se esperaba 'dx dy c'")
            try:
                dx, dy, c = (int(x) for x in parts)
            except ValueError:
                raise ConfigError(f"{path}:{n}: entero inválido")
            half[(dx, dy)] = c
        return cls(ell, half)

    def __call__(self, x, y):
        acc = x.F.zero() if hasattr(x, "F") else 0
        for (dx, dy), c in self.coeffs.items():
            acc = acc + c * (x ** dx) * (y ** dy)
        return acc

    def specialize(self, j: Fq2Elem) -> list[Fq2Elem]:
        """Coeficientes en Y de Phi(j, Y)."""
        F = j.F
        pw = [F.one()]
        for _ in range(self.deg):
            pw.append(pw[-1] * j)
        out = [F.zero() for _ in range(self.deg + 1)]
        for (dx, dy), c in self.coeffs.items():
            out[dy] = out[dy] + pw[dx] * c
        return out

    def kronecker_check(self) -> bool:
        """Phi_ell(X, Y) = (X^ell - Y)(X - Y^ell) mod ell, como identidad exacta."""
        ell = self.ell
        target = {(ell + 1, 0): 1, (ell, ell): -1, (1, 1): -1, (0, ell + 1): 1}
        keys = set(self.coeffs) | set(target)
        return all((self.coeffs.get(k, 0) - target.get(k, 0)) % ell == 0 for k in keys)


@lru_cache(maxsize=8)
def load_modular_polynomial(ell: int, phi_file: str | None = None) -> ModularPolynomial:
    if phi_file:
        phi = ModularPolynomial.from_file(phi_file, ell)
    elif ell == 2:
        phi = ModularPolynomial(2, _PHI2_HALF)
    else:
        raise ConfigError(f"Phi_{ell} no está embebido; indique ENDRING_PHI_FILE")
    if not phi.kronecker_check():
        raise ConfigError(f"el polinomio modular de nivel {ell} no pasa la congruencia de Kronecker")
    return phi


# ======================================================================
# Aristas, caminos y ciclos
# ======================================================================
@dataclass(frozen=True)
class Edge:
    src: Fq2Elem
    dst: Fq2Elem
    kernel: tuple | None = None  # coeficientes del polinomio núcleo en el modelo canónico de src
    index: int = 0  # ocurrencia entre aristas paralelas src -> dst

    def to_json(self) -> dict:
        return {
            "src": self.src.to_json(),
            "dst": self.dst.to_json(),
            "kernel": [c.to_json() for c in self.kernel] if self.kernel else None,
        }


@dataclass
class IsogenyPath:
    start: Fq2Elem
    edges: list[Edge] = field(default_factory=list)

    @property
    def end(self) -> Fq2Elem:
        return self.edges[-1].dst if self.edges else self.start

    def __len__(self) -> int:
        return len(self.edges)

    def vertices(self) -> list[Fq2Elem]:
        return [self.start] + [e.dst for e in self.edges]

    def __add__(self, other: "IsogenyPath") -> "IsogenyPath":
        if not (self.end == other.start):
            raise ValueError("los caminos no se encadenan")
        return IsogenyPath(self.start, self.edges + other.edges)

    def touches_special(self) -> bool:
        return any(v == 0 or v == 1728 for v in self.vertices())

    def to_json(self) -> dict:
        return {"start": self.start.to_json(), "edges": [e.to_json() for e in self.edges]}


@dataclass
class IsogenyCycle(IsogenyPath):
    marks: list[Fq2Elem] = field(default_factory=list)  # extremos j_k de los caminos usados
    special: bool = False  # pasa por 0 o 1728

    def to_json(self) -> dict:
        d = super().to_json()
        d["marks"] = [m.to_json() for m in self.marks]
        d["special"] = self.special
        return d


@dataclass
class CyclePair:
    first: IsogenyCycle
    second: IsogenyCycle
    walks: int = 0

    def to_json(self) -> dict:
        return {"first": self.first.to_json(), "second": self.second.to_json(), "walks": self.walks}


# ======================================================================
# El grafo
# ======================================================================
class IsogenyGraph:
    """Cachés por vértice: raíces de Phi(j, Y), núcleos y modelos canónicos."""

    def __init__(self, p: int, ell: int = 2, phi: ModularPolynomial | None = None, max_degree: int = 12,
                 seed: int | None = None):
        if ell == p:
            raise ConfigError("ell debe ser distinto de p")
        self.F: Fq2Field = fq2_field(p)
        self.p = p
        self.ell = ell
        self.phi = phi or load_modular_polynomial(ell)
        self.max_degree = max_degree
        self.seed = seed
        self._roots: dict[Fq2Elem, list[Fq2Elem]] = {}
        self._curves: dict[Fq2Elem, Curve] = {}
        self._table: dict[Fq2Elem, list[tuple[tuple, Fq2Elem]]] = {}

    # ---------- vértices ----------
    def curve(self, j: Fq2Elem) -> Curve:
        if j not in self._curves:
            self._curves[j] = curve_from_j(j)
        return self._curves[j]

    def neighbors(self, j: Fq2Elem) -> list[Fq2Elem]:
        if j not in self._roots:
            self._roots[j] = fq2_roots(self.phi.specialize(j), seed=self.seed)
        return self._roots[j]

    def multiplicity(self, j: Fq2Elem, j2: Fq2Elem) -> int:
        return sum(1 for r in self.neighbors(j) if r == j2)

    def in_Sp(self, j: Fq2Elem) -> bool:
        return self.phi(j, j.frobenius()).is_zero()

    def kernel_table(self, j: Fq2Elem) -> list[tuple[tuple, Fq2Elem]]:
        """Pares (núcleo, j del codominio) para las ell+1 isogenias desde j."""
        if j not in self._table:
            E = self.curve(j)
            rows = []
            for h in kernel_polys(E, self.ell, self.max_degree):
                phi = velu_from_kernel_poly(E, h, self.ell)
                rows.append((tuple(h), phi.codomain.j_invariant()))
            self._table[j] = rows
        return self._table[j]

    # ---------- aristas ----------
    def kernel_of(self, e: Edge) -> tuple:
        if e.kernel is not None:
            return e.kernel
        cands = [h for h, jj in self.kernel_table(e.src) if jj == e.dst]
        if not cands:
            raise ValueError(f"no hay isogenia {e.src} -> {e.dst}")
        return cands[min(e.index, len(cands) - 1)]

    def resolved(self, e: Edge) -> Edge:
        return e if e.kernel is not None else Edge(e.src, e.dst, self.kernel_of(e), e.index)

    def isogeny(self, e: Edge) -> Isogeny:
        """Isogenia entre los modelos canónicos de src y dst."""
        phi = velu_from_kernel_poly(self.curve(e.src), list(self.kernel_of(e)), self.ell)
        return phi.normalized_to(self.curve(e.dst))

    def dual_edge(self, e: Edge) -> Edge:
        if self.multiplicity(e.dst, e.src) == 1:
            return Edge(e.dst, e.src, None, 0)
        phi_hat = dual(self.isogeny(e), self.max_degree)
        return Edge(e.dst, e.src, tuple(phi_hat.kernel_poly), 0)

    def conjugate_edge(self, e: Edge) -> Edge:
        if self.multiplicity(e.src, e.dst) == 1:
            return Edge(e.src.frobenius(), e.dst.frobenius(), None, 0)
        k = self.kernel_of(e)
        return Edge(e.src.frobenius(), e.dst.frobenius(), tuple(c.frobenius() for c in k), 0)

    def is_dual(self, e: Edge, f: Edge) -> bool:
        if not (f.src == e.dst and f.dst == e.src):
            return False
        if self.multiplicity(e.dst, e.src) == 1:
            return True
        return self.kernel_of(f) == self.kernel_of(self.dual_edge(e))

    def is_self_dual_loop(self, e: Edge) -> bool:
        return e.src == e.dst and self.is_dual(e, e)

    # ---------- caminos ----------
    def random_walk(self, j0: Fq2Elem, k: int, rng: random.Random) -> IsogenyPath:
        path = IsogenyPath(j0)
        j = j0
        for _ in range(k):
            roots = self.neighbors(j)
            i = rng.randrange(len(roots))
            nxt = roots[i]
            occ = sum(1 for r in roots[:i] if r == nxt)
            path.edges.append(Edge(j, nxt, None, occ))
            j = nxt
        return path

    def reverse(self, path: IsogenyPath) -> IsogenyPath:
        return IsogenyPath(path.end, [self.dual_edge(e) for e in reversed(path.edges)])

    def conjugate(self, path: IsogenyPath) -> IsogenyPath:
        return IsogenyPath(path.start.frobenius(), [self.conjugate_edge(e) for e in path.edges])

    def trim(self, path: IsogenyPath) -> IsogenyPath:
        """Quita pares adyacentes duales; el par primero/último de un ciclo no cuenta."""
        stack: list[Edge] = []
        for e in path.edges:
            if stack and self.is_dual(stack[-1], e):
                stack.pop()
            else:
                stack.append(e)
        out = IsogenyPath(path.start, stack)
        if isinstance(path, IsogenyCycle):
            return IsogenyCycle(path.start, stack, list(path.marks), path.special)
        return out

    def drop_self_dual_loops(self, path: IsogenyPath) -> IsogenyPath:
        kept = [e for e in path.edges if not self.is_self_dual_loop(e)]
        if isinstance(path, IsogenyCycle):
            return IsogenyCycle(path.start, kept, list(path.marks), path.special)
        return IsogenyPath(path.start, kept)

    def clean(self, path: IsogenyPath) -> IsogenyPath:
        while True:
            nxt = self.trim(self.drop_self_dual_loops(path))
            if len(nxt) == len(path):
                return nxt
            path = nxt

    def has_backtracking(self, path: IsogenyPath) -> bool:
        es = path.edges
        return any(self.is_dual(es[i], es[i + 1]) for i in range(len(es) - 1))

    def isogenies(self, path: IsogenyPath) -> list[Isogeny]:
        return [self.isogeny(e) for e in path.edges]

    def bridge(self, j: Fq2Elem, B: int) -> list[Edge] | None:
        """Camino de longitud <= B de j a j^p con aristas simples, o None."""
        target = j.frobenius()
        if j == target:
            return []
        frontier: list[tuple[Fq2Elem, list[Edge]]] = [(j, [])]
        seen = {j}
        for _ in range(B):
            nxt = []
            for v, es in frontier:
                for w in sorted(set(self.neighbors(v)), key=lambda z: z.key()):
                    if self.multiplicity(v, w) != 1:
                        continue
                    path = es + [Edge(v, w)]
                    if w == target:
                        return path
                    if w not in seen:
                        seen.add(w)
                        nxt.append((w, path))
            frontier = nxt
        return None


# ======================================================================
# Parámetros por defecto
# ======================================================================
def default_walk_count(p: int, c: float = 1.0) -> int:
    lp = math.log(p)
    return max(1, math.ceil(c * math.sqrt(p) * lp * max(math.log(lp), 1.0)))


def default_walk_length(p: int, ell: int = 2) -> int:
    lp = math.log(p)
    inner = p ** 0.75 * math.sqrt(max(math.log(lp), 1e-9))
    return max(1, math.ceil(math.log(inner) / math.log(ell)))


def walk_length_for(s: float, ell: int, p: int) -> int:
    """Longitud de mezcla para caer en un conjunto de tamaño s."""
    if not 0 < s:
        raise ValueError("el tamaño del conjunto debe ser positivo")
    t = math.log(p / (6 * math.sqrt(s))) / math.log((ell + 1) / (2 * math.sqrt(ell)))
    return max(1, math.ceil(t - 1e-12))


# ======================================================================
# Pares de ciclos
# ======================================================================
@dataclass
class CycleSearch:
    graph: IsogenyGraph
    walks: int  # N
    length: int  # k
    seed: int = 0
    threads: int = 1
    strategy: str = "sp"  # "sp" o "fp"
    fp_distance: int = 0
    retries: int = 20
    _counter: int = 0

    def _walk(self, j0: Fq2Elem, index: int) -> IsogenyPath:
        rng = random.Random(self.seed * 1_000_003 + index)
        return self.graph.random_walk(j0, self.length, rng)

    def _hit(self, walk: IsogenyPath) -> tuple[IsogenyPath, list[Edge]] | None:
        g = self.graph
        for i, v in enumerate(walk.vertices()[1:], start=1):
            if self.strategy == "sp":
                if not g.in_Sp(v) or g.multiplicity(v, v.frobenius()) != 1:
                    continue
                mid = [Edge(v, v.frobenius())]
            else:
                mid = g.bridge(v, self.fp_distance)
                if mid is None:
                    continue
            return IsogenyPath(walk.start, walk.edges[:i]), mid
        return None

    def _walks(self, j0: Fq2Elem):
        """Caminatas en lotes; el orden por índice no depende de los hilos."""
        batch = max(1, self.threads) * 4
        limit = self._counter + self.walks
        while self._counter < limit:
            idx = list(range(self._counter, min(self._counter + batch, limit)))
            self._counter = idx[-1] + 1
            if self.threads > 1:
                with ThreadPoolExecutor(max_workers=self.threads) as pool:
                    results = list(pool.map(lambda i: self._walk(j0, i), idx))
            else:
                results = [self._walk(j0, i) for i in idx]
            yield from zip(idx, results)

    def half_path(self, j0: Fq2Elem) -> tuple[IsogenyPath, Fq2Elem]:
        """Camino P = P1 M conj(P1)^R de j0 a j0^p y el vértice marcado."""
        g = self.graph
        for index, walk in self._walks(j0):
            hit = self._hit(walk)
            if hit is None:
                continue
            self._counter = index + 1
            p1, mid = hit
            back = g.reverse(g.conjugate(p1))
            path = IsogenyPath(j0, p1.edges + mid + back.edges)
            return path, p1.end
        raise SearchExhausted(f"{self.walks} caminatas sin llegar al conjunto buscado (p={g.p})")

    def cycle(self, j0: Fq2Elem) -> IsogenyCycle:
        g = self.graph
        P, mark = self.half_path(j0)
        marks = [mark]
        if not j0.in_Fp():
            P2, mark2 = self.half_path(j0)
            marks.append(mark2)
            P = P + g.reverse(P2)
        cyc = IsogenyCycle(j0, P.edges, marks)
        cyc = g.clean(cyc)
        cyc.special = cyc.touches_special()
        return cyc

    def find_pair(self, j0: Fq2Elem) -> CyclePair:
        for attempt in range(self.retries):
            c1 = self.cycle(j0)
            if not c1.edges:
                continue
            for _ in range(self.retries):
                c2 = self.cycle(j0)
                if not c2.edges:
                    continue
                if self.strategy == "sp":
                    seen = set(c1.vertices())
                    if not any(m not in seen for m in c2.marks):
                        continue
                if c1.special or c2.special:
                    log("graph", f"ciclo por 0/1728 marcado (p={self.graph.p})")
                return CyclePair(c1, c2, self._counter)
        raise SearchExhausted(f"no se obtuvo un par de ciclos tras {self.retries} reintentos")


def find_cycle_pair(j0: Fq2Elem, graph: IsogenyGraph, seed: int = 0, *, walks: int | None = None,
                    length: int | None = None, strategy: str = "sp", fp_distance: int = 0,
                    threads: int = 1, retries: int = 20) -> CyclePair:
    if strategy not in ("sp", "fp"):
        raise ConfigError(f"estrategia desconocida: {strategy}")
    if not 0 <= fp_distance <= 2:
        raise ConfigError("fp_distance debe estar entre 0 y 2")
    p = graph.p
    search = CycleSearch(
        graph,
        walks or default_walk_count(p),
        length or default_walk_length(p, graph.ell),
        seed=seed,
        threads=threads,
        strategy=strategy,
        fp_distance=fp_distance,
        retries=retries,
    )
    return search.find_pair(j0)


# ======================================================================
# Censo de vértices
# ======================================================================
# discriminantes CM de número de clases 1 y su j
_CM_J = [(-7, -3375), (-8, 8000), (-11, -32768), (-19, -884736), (-43, -884736000),
         (-67, -147197952000), (-163, -262537412640768000)]


def mass_formula(p: int) -> int:
    return p // 12 + {1: 0, 5: 1, 7: 1, 11: 2}[p % 12]


def supersingular_start(p: int) -> Fq2Elem:
    F = fq2_field(p)
    if p % 4 == 3:
        return F(1728)
    if p % 3 == 2:
        return F(0)
    for D, j in _CM_J:
        if legendre_symbol(D % p, p) == -1:
            return F(j)
    # Legendre: raíces de sum C(m,i)^2 x^i con m = (p-1)/2
    m = (p - 1) // 2
    coeffs = [F(math.comb(m, i) ** 2) for i in range(m + 1)]
    lam = fq2_roots(coeffs)[0]
    num = 256 * (lam * lam - lam + 1) ** 3
    return num / (lam * lam * (lam - 1) ** 2)


def supersingular_vertices(graph: IsogenyGraph, start: Fq2Elem | None = None) -> list[Fq2Elem]:
    """Todos los j supersingulares (BFS: el grafo es conexo)."""
    start = start if start is not None else supersingular_start(graph.p)
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for v in frontier:
            for w in graph.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return sorted(seen, key=lambda z: z.key())


def census(graph: IsogenyGraph, seed: int = 0) -> dict:
    vs = supersingular_vertices(graph)
    sp = [v for v in vs if graph.in_Sp(v)]
    p = graph.p
    c_hat = len(sp) * math.log(math.log(p)) / math.sqrt(p)
    log("census", f"p={p} ell={graph.ell} supersingulares={len(vs)} |S^p|={len(sp)}")
    return {
        "p": p,
        "ell": graph.ell,
        "sp_count": len(sp),
        "supersingular_count": len(vs),
        "c_hat": c_hat,
        "seed": seed,
    }


def random_supersingular_j(graph: IsogenyGraph, rng: random.Random, outside_Fp: bool = True) -> Fq2Elem:
    j = supersingular_start(graph.p)
    steps = max(1, math.ceil(math.log(graph.p)))
    for _ in range(64):
        j = graph.random_walk(j, steps, rng).end
        if not outside_Fp or not j.in_Fp():
            return j
    raise SearchExhausted("no se encontró j fuera de F_p")

# app/services/localglobal.py
"""
Capa local-global:

- split_at: B (x) Q_q = M_2(Q_q) explícito módulo q^N, con f(Lambda) en M_2(Z_q).
- Árbol de Bruhat-Tits: vértices [L] con base [[q^a, 0], [c, q^b]] exacta
  y normalizada por homotecia; vecinos estables = rectas comunes mod q.
- q_maximal_orders: órdenes maximales locales que contienen Lambda,
  devueltos como Z-órdenes f^{-1}(End L) + Lambda.
- p_maximalize y glue para armar los candidatos globales.
"""
from __future__ import annotations
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import sympy
from sympy import sqrt_mod

from app.services.arith import valuation
from app.services.quatorders import QuatElement, QuatOrder, lattice_of, radical_idealizer, sum_orders
from app.utils.errors import NotAnOrder, NotBass, PrecisionExhausted, RamifiedPrime
from app.utils.log import log

GUARD = 2

Mat2 = tuple[int, int, int, int]  # [[a, b], [c, d]]; columnas = imágenes de la base de L


def _m_mul(X: Mat2, Y: Mat2, mod: int) -> Mat2:
    a, b, c, d = X
    e, f, g, h = Y
    return ((a * e + b * g) % mod, (a * f + b * h) % mod, (c * e + d * g) % mod, (c * f + d * h) % mod)


def _m_add(X: Mat2, Y: Mat2, mod: int) -> Mat2:
    return tuple((x + y) % mod for x, y in zip(X, Y))


def _m_scale(X: Mat2, k: int, mod: int) -> Mat2:
    return tuple((x * k) % mod for x in X)


def _int_coords(O: QuatOrder, x: QuatElement) -> list[int]:
    cs = O.lattice.coordinates(list(x.c))
    if any(c.denominator != 1 for c in cs):
        raise NotAnOrder("el elemento no pertenece al orden")
    return [int(c) for c in cs]


def structure_constants(O: QuatOrder) -> list[list[list[int]]]:
    B = O.basis()
    return [[_int_coords(O, x * y) for y in B] for x in B]


def _val(x: int, q: int, cap: int) -> int:
    return min(valuation(x, q), cap) if x else cap


# ======================================================================
# Splitting q-ádico
# ======================================================================
@dataclass
class QAdicSplitting:
    q: int
    N: int
    prec: int  # las imágenes son exactas módulo q^prec
    order: QuatOrder  # Lambda
    images: list[Mat2]  # f(lambda_i) módulo q^prec
    host: QuatOrder  # orden donde se encontró el elemento con raíz simple

    @property
    def modulus(self) -> int:
        return self.q ** self.prec

    def image(self, x: QuatElement) -> Mat2:
        """f(x) para x con denominadores coprimos con q (coordenadas en Lambda)."""
        mod = self.modulus
        cs = self.order.lattice.coordinates(list(x.c))
        out: Mat2 = (0, 0, 0, 0)
        for c, M in zip(cs, self.images):
            if c.denominator % self.q == 0:
                raise ValueError("el elemento no es q-entero sobre Lambda")
            k = c.numerator * pow(c.denominator, -1, mod) % mod
            out = _m_add(out, _m_scale(M, k, mod), mod)
        return out

    def check_relations(self) -> bool:
        """f(l_i) f(l_k) = sum c_ikl f(l_l) módulo q^(prec - guard)."""
        mod = self.q ** max(1, self.prec - GUARD)
        S = structure_constants(self.order)
        for i, Mi in enumerate(self.images):
            for k, Mk in enumerate(self.images):
                lhs = _m_mul(Mi, Mk, mod)
                rhs: Mat2 = (0, 0, 0, 0)
                for l, c in enumerate(S[i][k]):
                    rhs = _m_add(rhs, _m_scale(self.images[l], c, mod), mod)
                if lhs != rhs:
                    return False
        return True

    # ---------- preimagen ----------
    def _inverse_data(self):
        if not hasattr(self, "_inv"):
            mod = self.modulus
            F = sympy.Matrix([[self.images[i][r] for i in range(4)] for r in range(4)])
            det = int(F.det()) % mod
            if det == 0:
                raise PrecisionExhausted(f"det F = 0 mod {self.q}^{self.prec}")
            v = valuation(det, self.q)
            unit = det // self.q ** v
            adj = F.adjugate()
            adjF = [[int(adj[r, s]) % mod for s in range(4)] for r in range(4)]
            self._inv = (adjF, v, pow(unit, -1, mod))
        return self._inv

    def pullback(self, X: Mat2, d: int) -> QuatElement:
        """Elemento global x con f(x) = X / q^d (salvo q^(prec - d - v) Lambda)."""
        adjF, v, uinv = self._inverse_data()
        if self.prec < d + v + GUARD:
            raise PrecisionExhausted(f"precisión {self.prec} < {d + v + GUARD} en q={self.q}")
        mod = self.modulus
        y = [sum(adjF[r][s] * X[s] for s in range(4)) * uinv % mod for r in range(4)]
        den = self.q ** (d + v)
        A = self.order.A
        B = self.order.basis()
        out = A(0)
        for r in range(4):
            if y[r]:
                out = out + B[r] * Fraction(y[r], den)
        return out


def _simple_root(t: int, n: int, q: int, N: int) -> int | None:
    mod = q ** N
    if q == 2:
        if t % 2 == 0 or n % 2:
            return None
        lam = 0
    else:
        disc = (t * t - 4 * n) % q
        if disc == 0:
            return None
        r = sqrt_mod(disc, q)
        if r is None:
            return None
        lam = (t + r) * pow(2, -1, q) % q
    for _ in range(N.bit_length() + 2):
        f = (lam * lam - t * lam + n) % mod
        df = (2 * lam - t) % mod
        lam = (lam - f * pow(df, -1, mod)) % mod
    if (lam * lam - t * lam + n) % mod:
        return None
    return lam


def _left_mul(S, i: int, u: Sequence[int], mod: int) -> list[int]:
    out = [0, 0, 0, 0]
    for k in range(4):
        if u[k]:
            for l in range(4):
                out[l] = (out[l] + u[k] * S[i][k][l]) % mod
    return out


def _split_host(M: QuatOrder, q: int, N: int, rng: random.Random, tries: int = 200):
    """Imágenes de la base de M sobre L = B eps intersectado con M_q."""
    mod = q ** N
    S = structure_constants(M)
    B = M.basis()
    one = _int_coords(M, M.A.one())
    span = max(q, 4)
    for _ in range(tries):
        cs = [rng.randrange(span) for _ in range(4)]
        x = M.A(0)
        for c, b in zip(cs, B):
            x = x + b * c
        t, n = x.trd(), x.nrd()
        lam = _simple_root(int(t), int(n), q, N)
        if lam is None:
            continue
        eps = [(c - lam * o) % mod for c, o in zip(cs, one)]
        # m_k * eps = sum_s eps_s (m_k m_s)
        vecs = []
        for k in range(4):
            w = [0, 0, 0, 0]
            for s in range(4):
                if eps[s]:
                    for l in range(4):
                        w[l] = (w[l] + eps[s] * S[k][s][l]) % mod
            vecs.append(w)
        got = _saturate(vecs, q, N)
        if got is None:
            continue
        u1, u2, c1, c2, prec = got
        pm = q ** prec
        images = []
        ok = True
        for i in range(4):
            cols = []
            for u in (u1, u2):
                w = _left_mul(S, i, u, pm)
                al = w[c1] * pow(u1[c1], -1, pm) % pm
                be = (w[c2] - al * u1[c2]) * pow(u2[c2], -1, pm) % pm
                chk = q ** max(1, prec - GUARD)
                if any((w[l] - al * u1[l] - be * u2[l]) % chk for l in range(4)):
                    ok = False
                    break
                cols.append((al, be))
            if not ok:
                break
            (a1, b1), (a2, b2) = cols
            images.append((a1, a2, b1, b2))
        if ok:
            return images, prec
    return None


def _saturate(vecs: list[list[int]], q: int, N: int):
    """Base (u1, u2) de la saturación de un Z_q-módulo de rango 2 en Z_q^4."""
    mod = q ** N
    rows = [list(v) for v in vecs]
    best = min(((_val(x, q, N), r, c) for r, row in enumerate(rows) for c, x in enumerate(row)), default=(N, 0, 0))
    v1, r1, c1 = best
    if v1 >= N - GUARD:
        return None
    u1 = [(x // q ** v1) % q ** (N - v1) for x in rows[r1]]
    rest = []
    for r, row in enumerate(rows):
        if r == r1:
            continue
        f = row[c1] * pow(u1[c1], -1, mod) % mod
        rest.append([(x - f * y) % mod for x, y in zip(row, u1)])
    best = min(((_val(x, q, N), r, c) for r, row in enumerate(rest) for c, x in enumerate(row)), default=(N, 0, 0))
    v2, r2, c2 = best
    if v2 >= N - GUARD - v1:
        return None
    u2 = [(x // q ** v2) % q ** (N - v2) for x in rest[r2]]
    prec = N - v1 - v2
    if prec <= GUARD:
        return None
    pm = q ** prec
    for r, row in enumerate(rest):
        if r == r2:
            continue
        f = row[c2] * pow(u2[c2], -1, pm) % pm
        resid = [(x - f * y) % q ** max(1, prec - GUARD) for x, y in zip(row, u2)]
        if any(resid):
            return None
    return [x % pm for x in u1], [x % pm for x in u2], c1, c2, prec


def split_at(L: QuatOrder, q: int, N: int, seed: int = 0) -> QAdicSplitting:
    if L.p is not None and q == L.p:
        raise RamifiedPrime(f"B_(p,inf) ramifica en q={q}")
    rng = random.Random(seed * 7919 + q * 31 + N)
    host = L
    e = valuation(L.discrd(), q)
    for _ in range(e + 2):
        got = _split_host(host, q, N, rng)
        if got is not None:
            host_images, prec = got
            break
        nat = radical_idealizer(host, q)
        if nat == host:
            break
        host = nat
    else:
        got = None
    if got is None:
        raise PrecisionExhausted(f"no se pudo partir el álgebra en q={q} con N={N}")
    pm = q ** prec
    images = []
    for lam in L.basis():
        cs = _int_coords(host, lam)
        M: Mat2 = (0, 0, 0, 0)
        for c, Mk in zip(cs, host_images):
            M = _m_add(M, _m_scale(Mk, c, pm), pm)
        images.append(M)
    S = QAdicSplitting(q, N, prec, L, images, host)
    if not S.check_relations():
        raise PrecisionExhausted(f"relaciones del splitting fallan en q={q}, N={N}")
    return S


# ======================================================================
# Árbol de Bruhat-Tits
# ======================================================================
Vertex = tuple[int, int, int]  # (a, b, c): base [[q^a, 0], [c, q^b]]


def normalize_vertex(a: int, b: int, c: int, q: int) -> Vertex:
    c %= q ** b
    g = min(a, b, _val(c, q, b))
    return (a - g, b - g, c // q ** g)


def vertex_matrix(v: Vertex, q: int) -> Mat2:
    a, b, c = v
    return (q ** a, 0, c, q ** b)


def _conjugated(S: QAdicSplitting, v: Vertex) -> list[Mat2] | None:
    """B^{-1} f(l_i) B; None si algún generador no es entero (Lambda no contenido)."""
    q = S.q
    a, b, c = v
    d = a + b
    if S.prec <= d + 1:
        raise PrecisionExhausted(f"precisión {S.prec} insuficiente para el vértice {v}")
    mod = S.modulus
    Bm = vertex_matrix(v, q)
    adj = (q ** b, 0, -c % mod, q ** a)
    qd = q ** d
    out = []
    for G in S.images:
        X = _m_mul(_m_mul(adj, G, mod), Bm, mod)
        if any(x % qd for x in X):
            return None
        out.append(tuple((x // qd) % q ** (S.prec - d) for x in X))
    return out


def vertex_contains(S: QAdicSplitting, v: Vertex) -> bool:
    return _conjugated(S, v) is not None


Line = tuple[int, int]  # (1, s) o (0, 1)


def _line_of(x: int, y: int, q: int) -> Line:
    if x % q:
        return (1, y * pow(x, -1, q) % q)
    return (0, 1)


def _eigenlines(G: Mat2, q: int) -> set[Line] | None:
    a, b, c, d = (x % q for x in G)
    if b == 0 and c == 0 and a == d:
        return None
    tr, det = (a + d) % q, (a * d - b * c) % q
    if q == 2:
        roots = [mu for mu in (0, 1) if (mu * mu - tr * mu + det) % 2 == 0]
    else:
        disc = (tr * tr - 4 * det) % q
        inv2 = pow(2, -1, q)
        if disc == 0:
            roots = [tr * inv2 % q]
        else:
            r = sqrt_mod(disc, q)
            roots = [] if r is None else [(tr + r) * inv2 % q, (tr - r) * inv2 % q]
    out: set[Line] = set()
    for mu in roots:
        # (G - mu) v = 0
        r1 = ((a - mu) % q, b)
        r2 = (c, (d - mu) % q)
        row = r1 if any(r1) else r2
        # vector ortogonal a la fila no nula
        out.add(_line_of(row[1] % q, -row[0] % q, q))
    return out


def stable_lines(S: QAdicSplitting, v: Vertex) -> list[Line]:
    q = S.q
    gens = _conjugated(S, v)
    if gens is None:
        raise NotAnOrder(f"el vértice {v} no contiene a Lambda")
    common: set[Line] | None = None
    for G in gens:
        ls = _eigenlines(G, q)
        if ls is None:
            continue
        common = ls if common is None else common & ls
    if common is None:
        raise NotBass(f"Lambda es escalar módulo q={q} en el vértice {v}: todos los vecinos son estables")
    return sorted(common)


def neighbor(v: Vertex, line: Line, q: int) -> Vertex:
    a, b, c = v
    if line[0] == 1:
        return normalize_vertex(a, b + 1, c + line[1] * q ** b, q)
    return normalize_vertex(a + 1, b, q * c, q)


def all_neighbors(v: Vertex, q: int) -> list[Vertex]:
    return [neighbor(v, (1, s), q) for s in range(q)] + [neighbor(v, (0, 1), q)]


@dataclass
class TreeVertex:
    key: Vertex
    order: QuatOrder | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {"key": list(self.key), "basis": self.order.to_json() if self.order else None}


def local_maximal_superorders(S: QAdicSplitting) -> list[TreeVertex]:
    """Vértices del árbol cuyos órdenes contienen a Lambda (un camino para Lambda Bass)."""
    q = S.q
    root: Vertex = (0, 0, 0)
    seen = {root}
    order = [root]
    frontier = [root]
    while frontier:
        nxt = []
        for v in frontier:
            lines = stable_lines(S, v)
            if len(lines) > 2:
                raise NotBass(f"{len(lines)} vecinos estables en q={q}: Lambda no es Bass")
            for ln in lines:
                w = neighbor(v, ln, q)
                if w not in seen:
                    seen.add(w)
                    order.append(w)
                    nxt.append(w)
        frontier = nxt
    return [TreeVertex(v) for v in order]


def tree_ball(S: QAdicSplitting, radius: int) -> list[Vertex]:
    """Vértices a distancia <= radius de la raíz que contienen a Lambda (fuerza bruta)."""
    q = S.q
    root: Vertex = (0, 0, 0)
    seen = {root}
    frontier = [root]
    for _ in range(radius):
        nxt = []
        for v in frontier:
            for w in all_neighbors(v, q):
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return sorted(v for v in seen if vertex_contains(S, v))


def vertex_order(S: QAdicSplitting, v: Vertex) -> QuatOrder:
    """f^{-1}(End L_v) + Lambda."""
    q = S.q
    a, b, c = v
    mod = S.modulus
    Bm = vertex_matrix(v, q)
    adj = (q ** b, 0, -c % mod, q ** a)
    gens = list(S.order.basis())
    for k in range(4):
        E = tuple(1 if s == k else 0 for s in range(4))
        X = _m_mul(_m_mul(Bm, E, mod), adj, mod)
        gens.append(S.pullback(X, a + b))
    return QuatOrder(S.order.A, lattice_of(gens), check=True, p=S.order.p)


def q_maximal_orders(L: QuatOrder, q: int, margin: int = 4, cap: int = 64, seed: int = 0) -> list[QuatOrder]:
    e = valuation(L.discrd(), q)
    if e == 0:
        return [L]
    N = e + margin
    while True:
        try:
            S = split_at(L, q, N, seed)
            verts = local_maximal_superorders(S)
            out = [vertex_order(S, tv.key) for tv in verts]
            if any(valuation(O.discrd(), q) != 0 for O in out):
                raise PrecisionExhausted(f"preimagen no maximal en q={q}")
            log("localglobal", f"q={q} e={e} N={N}: {len(out)} órdenes maximales locales")
            return out
        except PrecisionExhausted:
            if N * 2 > cap:
                raise
            N *= 2
            log("localglobal", f"q={q}: se duplica la precisión a N={N}")


def p_maximalize(L: QuatOrder, p: int | None = None, max_steps: int = 64) -> QuatOrder:
    p = p or L.p
    O = L
    for _ in range(max_steps):
        if valuation(O.discrd(), p) <= 1:
            return O
        O = radical_idealizer(O, p)
    raise NotAnOrder(f"la saturación en p={p} no terminó")


def glue(choices: Sequence[QuatOrder]) -> QuatOrder:
    O = choices[0]
    for O2 in choices[1:]:
        O = sum_orders(O, O2)
    return O

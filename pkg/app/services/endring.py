# app/services/endring.py
"""
End(E) a partir de dos ciclos:

1. compute_bass_suborder: par de ciclos -> Gram -> discrd factorizado ->
   test de Bass sobre el orden abstracto <1, alpha, beta, alpha beta>.
2. candidate_superorders: saturación en p y pegado de los órdenes
   maximales locales en cada q | discrd (todas las combinaciones).
3. match_end_ring: se queda con el candidato cuya serie theta coincide con
   el conteo de endomorfismos de grado d sobre E.

kohel_oracle agrega ciclos hasta discrd = p, leídos en O~ por transporte
desde j = 1728; sirve de control independiente del certificado.
"""
from __future__ import annotations
import math
import random
import time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterator, Sequence

from app.config import Settings, get_settings
from app.services.arith import Factorization, Fq2Elem, factor
from app.services.curves import Curve, Point, dual, frobenius_trace
from app.services.endos import (
    EndoChain,
    EndomorphismCounter,
    GramMatrix,
    TraceOracle,
    chain_from_cycle,
    discriminant,
    discrd_from_gram,
    eligible_degrees,
    eq1_bound,
    eq1_discrd,
    gram_from_traces,
    verify_charpoly,
)
from app.services.graph import (
    CyclePair,
    CycleSearch,
    Edge,
    IsogenyGraph,
    IsogenyPath,
    default_walk_count,
    default_walk_length,
    find_cycle_pair,
    load_modular_polynomial,
)
from app.services.localglobal import glue, p_maximalize, q_maximal_orders
from app.services.quatorders import (
    AbstractPair,
    QuatOrder,
    bass_evidence,
    order_closure,
    order_from_gram,
    theta_prefix,
)
from app.services.special import special_curve
from app.utils.errors import (
    Ambiguous,
    DeskScaleExceeded,
    NoMatch,
    NonSquareDiscriminant,
    NotAnOrder,
    NotFound,
    SearchExhausted,
    Timeout,
)
from app.utils.lattice import mat_inverse
from app.utils.log import log


def build_graph(p: int, settings: Settings) -> IsogenyGraph:
    phi = load_modular_polynomial(settings.ell, settings.phi_file)
    return IsogenyGraph(p, settings.ell, phi, settings.max_ext_degree, seed=settings.seed)


def trace_oracle(E: Curve, settings: Settings) -> TraceOracle:
    return TraceOracle(E, settings.ell, settings.torsion_levels, settings.max_ext_degree, threads=settings.threads)


# ======================================================================
# Certificado de Bass
# ======================================================================
@dataclass
class BassCertificate:
    j: Fq2Elem
    order: QuatOrder  # Lambda, en el modelo abstracto
    abstract: AbstractPair
    alpha: EndoChain
    beta: EndoChain
    gram: GramMatrix
    discrd: int
    factored: Factorization
    evidence: list[dict]
    bass: bool
    coprime: bool
    eq1_value: Fraction
    eq1_limit: Fraction
    charpoly_ok: bool
    special: bool
    walks: int = 0

    @property
    def p(self) -> int:
        return self.order.p

    @property
    def n_lambda(self) -> int:
        """prod (e_i + 1) sobre los primos != p."""
        out = 1
        for q, e in self.factored.pairs:
            if q != self.p:
                out *= e + 1
        return out

    def to_json(self) -> dict:
        return {
            "j": self.j.to_json(),
            "discrd": self.discrd,
            "discrd_factored": self.factored.to_json(),
            "bass": self.bass,
            "coprime": self.coprime,
            "N_Lambda": self.n_lambda,
            "evidence": self.evidence,
            "gram": self.gram.to_json(),
            "eq1": {"value": str(self.eq1_value), "bound": str(self.eq1_limit)},
            "charpoly_ok": self.charpoly_ok,
            "special": self.special,
            "walks": self.walks,
            "order": self.order.to_json(),
        }


def certificate_from_pair(j0: Fq2Elem, graph: IsogenyGraph, pair: CyclePair, settings: Settings) -> BassCertificate:
    p = graph.p
    E = graph.curve(j0)
    alpha = chain_from_cycle(graph, pair.first, "alpha")
    beta = chain_from_cycle(graph, pair.second, "beta")
    oracle = trace_oracle(E, settings)
    tr = oracle.pair_traces(alpha, beta)
    ta, tb, tab = tr["t_alpha"], tr["t_beta"], tr["t_ab"]
    na, nb = tr["n_alpha"], tr["n_beta"]
    G = gram_from_traces(ta, na, tb, nb, tab)
    d = discrd_from_gram(G)
    fz = factor(d, settings.factor_budget)
    ap = order_from_gram(ta, na, tb, nb, tab, p)
    L = ap.order
    if L.discrd() != d:
        raise NotAnOrder(f"el modelo abstracto tiene discrd {L.discrd()} != {d}")
    L._factored = fz
    evidence = [bass_evidence(L, q) for q in fz.primes()]
    rng = random.Random(settings.seed)
    ok = verify_charpoly(alpha, ta, rng=rng) and verify_charpoly(beta, tb, rng=rng)
    cert = BassCertificate(
        j=j0,
        order=L,
        abstract=ap,
        alpha=alpha,
        beta=beta,
        gram=G,
        discrd=d,
        factored=fz,
        evidence=evidence,
        bass=all(ev["bass"] for ev in evidence),
        coprime=math.gcd(discriminant(ta, na), discriminant(tb, nb)) == 1,
        eq1_value=eq1_discrd(ta, na, tb, nb, tr["t_ab_hat"]),
        eq1_limit=eq1_bound(ta, na, tb, nb),
        charpoly_ok=ok,
        special=pair.first.special or pair.second.special,
        walks=pair.walks,
    )
    log("endring", f"p={p} discrd={d} factores={fz.to_json()} bass={cert.bass} N(Lambda)={cert.n_lambda}")
    return cert


def compute_bass_suborder(j0: Fq2Elem, graph: IsogenyGraph, settings: Settings | None = None, *,
                          seed: int | None = None, strategy: str = "sp", fp_distance: int = 0,
                          length: int | None = None, walks: int | None = None) -> BassCertificate:
    """Un intento: el certificado trae bass=False si el test de Bass falla."""
    settings = settings or get_settings()
    pair = find_cycle_pair(
        j0,
        graph,
        settings.seed if seed is None else seed,
        walks=walks,
        length=length,
        strategy=strategy,
        fp_distance=fp_distance,
        threads=settings.threads,
        retries=settings.retries,
    )
    return certificate_from_pair(j0, graph, pair, settings)


def bass_suborder_with_retries(j0: Fq2Elem, graph: IsogenyGraph, settings: Settings, seed: int = 0,
                               strategy: str = "sp", fp_distance: int = 0) -> tuple[BassCertificate, int]:
    """Reintenta con semillas nuevas hasta obtener un orden de Bass; devuelve (cert, intentos)."""
    last: Exception | None = None
    for attempt in range(settings.retries):
        try:
            cert = compute_bass_suborder(j0, graph, settings, seed=seed * 1009 + attempt,
                                         strategy=strategy, fp_distance=fp_distance)
        except (NotAnOrder, NonSquareDiscriminant, SearchExhausted) as e:
            log("endring", f"intento {attempt}: {e}")
            last = e
            continue
        if cert.bass:
            return cert, attempt + 1
        log("endring", f"intento {attempt}: Lambda no es Bass")
    raise SearchExhausted(f"sin orden de Bass tras {settings.retries} intentos ({last})")


# ======================================================================
# Candidatos
# ======================================================================
def local_choices(cert: BassCertificate, settings: Settings) -> tuple[QuatOrder, list[tuple[int, list[QuatOrder]]]]:
    p = cert.p
    base = p_maximalize(cert.order, p)
    out = []
    for q in cert.factored.primes():
        if q == p:
            continue
        out.append((q, q_maximal_orders(base, q, settings.precision_margin, settings.precision_cap, settings.seed)))
    return base, out


def candidate_superorders(cert: BassCertificate, settings: Settings | None = None) -> Iterator[QuatOrder]:
    """Órdenes maximales que contienen a Lambda, en orden lexicográfico de índices."""
    settings = settings or get_settings()
    base, choices = local_choices(cert, settings)
    if not choices:
        yield base
        return
    lists = [lst for _, lst in choices]
    for idx in product(*(range(len(lst)) for lst in lists)):
        yield glue([base] + [lst[i] for lst, i in zip(lists, idx)])


def candidate_count(cert: BassCertificate, settings: Settings | None = None) -> int:
    _, choices = local_choices(cert, settings or get_settings())
    return math.prod(len(lst) for _, lst in choices)


# ======================================================================
# Emparejamiento de Deuring
# ======================================================================
class EmbeddedEndomorphism:
    """x = sum c_k x_k con x_k en {1, alpha, beta, alpha beta}, evaluado en E(F_{p^2})."""

    def __init__(self, E: Curve, chains: Sequence[EndoChain], coeffs: Sequence[Fraction], nrd: int):
        self.base = E
        self.chains = list(chains)
        self.coeffs = [Fraction(c) for c in coeffs]
        self._degree = nrd
        self.den = math.lcm(*(c.denominator for c in self.coeffs))
        p = E.p
        N = p * p + 1 - frobenius_trace(E)
        # parte de N coprima con el denominador
        g = math.gcd(N, self.den)
        while g > 1:
            N //= g
            g = math.gcd(N, self.den)
        self.cofactor = (p * p + 1 - frobenius_trace(E)) // N
        self.N = N

    @property
    def degree(self) -> int:
        return self._degree

    def project(self, P: Point) -> Point:
        return P * self.cofactor

    def evaluate(self, P: Point) -> Point:
        acc = self.base.infinity(P.K)
        for c, x in zip(self.coeffs, self.chains):
            k = int(c * self.den)
            if k:
                acc = acc + x.evaluate(P) * k
        if acc.inf or self.N == 1:
            return acc
        return acc * pow(self.den, -1, self.N)


def verify_embedded(x: EmbeddedEndomorphism, t: int, trials: int = 20, rng: random.Random | None = None) -> bool:
    rng = rng or random.Random(11)
    n = x.degree
    for _ in range(trials):
        P = x.project(x.base.random_point(rng))
        xP = x.evaluate(P)
        if not (x.evaluate(xP) - xP * t + P * n).inf:
            return False
    return True


@dataclass
class EndRingResult:
    j: Fq2Elem
    order: QuatOrder
    matched_index: int
    examined: int
    theta: dict[int, int]
    D: int
    conjugate_ambiguity: bool
    certificate: BassCertificate | None = None
    embedding: list[list[Fraction]] = field(default_factory=list)
    embedding_ok: bool | None = None
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.order.p

    def to_json(self) -> dict:
        c = self.certificate
        return {
            "p": self.p,
            "j": self.j.to_json(),
            "discrd": self.order.discrd(),
            "discrd_factored": c.factored.to_json() if c else None,
            "N_Lambda": c.n_lambda if c else None,
            "bass": c.bass if c else None,
            "matched_index": self.matched_index,
            "examined": self.examined,
            "basis": self.order.to_json()["basis"],
            "theta_prefix": {str(d): n for d, n in self.theta.items()},
            "D": self.D,
            "conjugate_ambiguity": self.conjugate_ambiguity,
            "embedding": [[str(x) for x in row] for row in self.embedding],
            "embedding_ok": self.embedding_ok,
            "timings": self.timings,
        }


def match_end_ring(j: Fq2Elem, candidates: Sequence[QuatOrder] | Iterator[QuatOrder],
                   settings: Settings | None = None, counter: EndomorphismCounter | None = None) -> EndRingResult:
    settings = settings or get_settings()
    cands = list(candidates)
    if not cands:
        raise NoMatch("no hay candidatos")
    p = cands[0].p
    counter = counter or EndomorphismCounter(p, settings.max_ext_degree)
    alive = list(range(len(cands)))
    D = settings.theta_d
    while True:
        degrees = eligible_degrees(D)
        target = counter.prefix(j, D)
        alive = [i for i in alive if theta_prefix(cands[i], D, degrees) == target]
        log("endring", f"D={D}: {len(alive)} de {len(cands)} candidatos sobreviven")
        if len(alive) <= 1 or D >= settings.theta_dmax:
            break
        D = min(2 * D, settings.theta_dmax)
    if not alive:
        raise NoMatch(f"ningún candidato coincide con los conteos de E (j={j})")
    if len(alive) > 1:
        full = {i: theta_prefix(cands[i], D) for i in alive}
        if len({tuple(sorted(v.items())) for v in full.values()}) > 1:
            raise Ambiguous(f"{len(alive)} candidatos no isomorfos sobreviven con D={D}", alive)
    idx = alive[0]
    O = cands[idx]
    return EndRingResult(
        j=j,
        order=O,
        matched_index=idx,
        examined=len(cands),
        theta=theta_prefix(O, D, eligible_degrees(D)),
        D=D,
        conjugate_ambiguity=not j.in_Fp(),
    )


def embedding_of(cert: BassCertificate, O: QuatOrder) -> tuple[list[list[Fraction]], bool]:
    """Coordenadas de la base de O en {1, alpha, beta, alpha beta} y chequeo en puntos."""
    ap = cert.abstract
    xs = [ap.order.A.one(), ap.alpha, ap.beta, ap.alpha * ap.beta]
    inv = mat_inverse([list(x.c) for x in xs])
    E = cert.alpha.base
    identity = EndoChain(E, [], cert.alpha.ell, "1")
    chains = [identity, cert.alpha, cert.beta, cert.beta.then(cert.alpha)]
    rows, ok = [], True
    rng = random.Random(5)
    for b in O.basis():
        v = list(b.c)
        coeffs = [sum(v[i] * inv[i][k] for i in range(4)) for k in range(4)]
        rows.append(coeffs)
        x = EmbeddedEndomorphism(E, chains, coeffs, int(b.nrd()))
        ok = ok and verify_embedded(x, int(b.trd()), trials=8, rng=rng)
    return rows, ok


def end_ring(j: Fq2Elem, settings: Settings | None = None, *, seed: int | None = None,
             graph: IsogenyGraph | None = None, strategy: str = "sp", fp_distance: int = 0) -> EndRingResult:
    """Cadena completa: suborden de Bass, candidatos y emparejamiento."""
    settings = settings or get_settings()
    p = j.F.p
    if p > settings.desk_cap:
        raise DeskScaleExceeded(f"p={p} supera ENDRING_DESK_CAP={settings.desk_cap}")
    graph = graph or build_graph(p, settings)
    seed = settings.seed if seed is None else seed
    t0 = time.perf_counter()
    cert, attempts = bass_suborder_with_retries(j, graph, settings, seed, strategy, fp_distance)
    t1 = time.perf_counter()
    cands = list(candidate_superorders(cert, settings))
    t2 = time.perf_counter()
    res = match_end_ring(j, cands, settings)
    t3 = time.perf_counter()
    if not res.order.contains_order(cert.order) or res.order.discrd() != p:
        raise NoMatch("el orden elegido no contiene a Lambda o no es maximal")
    res.certificate = cert
    res.embedding, res.embedding_ok = embedding_of(cert, res.order)
    res.timings = {
        "bass": round(t1 - t0, 4),
        "candidates": round(t2 - t1, 4),
        "match": round(t3 - t2, 4),
        "attempts": attempts,
    }
    log("endring", f"p={p} j={j} discrd(Lambda)={cert.discrd} N(Lambda)={cert.n_lambda} "
                   f"candidatos={len(cands)} elegido={res.matched_index}")
    return res


# ======================================================================
# Oráculo por transporte desde j = 1728
# ======================================================================
def path_from_special(graph: IsogenyGraph, j0: Fq2Elem) -> IsogenyPath:
    """Camino más corto 1728 -> j0 (BFS), con núcleos explícitos."""
    start = graph.F(1728)
    prev: dict[Fq2Elem, Edge | None] = {start: None}
    queue = deque([start])
    while queue and j0 not in prev:
        j = queue.popleft()
        for h, j2 in graph.kernel_table(j):
            if j2 not in prev:
                prev[j2] = Edge(j, j2, h, 0)
                queue.append(j2)
    if j0 not in prev:
        raise NotFound(f"j={j0} no es alcanzable desde 1728")
    edges = []
    j = j0
    while prev[j] is not None:
        edges.append(prev[j])
        j = prev[j].src
    return IsogenyPath(start, edges[::-1])


def kohel_oracle(j0: Fq2Elem, graph: IsogenyGraph, settings: Settings | None = None, *,
                 seed: int = 0, max_cycles: int = 40) -> QuatOrder:
    """Agrega endomorfismos de ciclos en j0 hasta discrd = p, sin Gram ni certificado.

    Cada ciclo theta se transporta a j = 1728 por un camino Phi:
    x = Phi^ theta Phi, y sus coordenadas en 1, i, j, k (base ortogonal de
    O~) salen de Trd(x e^) / (2 nrd e). El elemento agregado es x / deg Phi.
    Requiere p = 3 mod 4.
    """
    settings = settings or get_settings()
    p = graph.p
    if p > settings.oracle_cap:
        raise DeskScaleExceeded(f"p={p} supera ENDRING_ORACLE_CAP={settings.oracle_cap}")
    sc = special_curve(p, settings.max_ext_degree)
    path = path_from_special(graph, j0)
    n = graph.ell ** len(path)
    phis = graph.isogenies(path)
    back = [dual(s, settings.max_ext_degree) for s in reversed(phis)]
    oracle = trace_oracle(sc.curve, settings)
    gens = sc.generators()
    norms = [1, 1, p, p]
    search = CycleSearch(graph, default_walk_count(p), default_walk_length(p, graph.ell),
                         seed=seed * 31 + 1, threads=settings.threads, retries=settings.retries)
    elems = []
    O: QuatOrder | None = None
    for c in range(max_cycles):
        cyc = search.cycle(j0)
        if not cyc.edges:
            continue
        theta = chain_from_cycle(graph, cyc, f"theta{c}")
        x = EndoChain(sc.curve, phis + theta.steps + back, graph.ell, f"x{c}")
        X = sc.algebra(*(Fraction(oracle.pairing(x, e), 2 * m) for e, m in zip(gens, norms)))
        if X.nrd() != x.degree:
            log("endring", f"oráculo: ciclo {c} descartado (norma {X.nrd()} != {x.degree})")
            continue
        elems.append(X * Fraction(1, n))
        try:
            O = order_closure(elems, p=p)
        except NotAnOrder:
            continue
        if O.discrd() == p:
            log("endring", f"oráculo: orden maximal tras {c + 1} ciclos (camino de largo {len(path)})")
            return O
    found = O.discrd() if O is not None else None
    raise Timeout(f"el oráculo no llegó a discrd = p tras {max_cycles} ciclos (discrd={found})")

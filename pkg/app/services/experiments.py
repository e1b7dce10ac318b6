# app/services/experiments.py
"""
Tabla de pares de ciclos por primo: cuántos generan un orden, cuántos
de esos son de Bass y el promedio de N(Lambda) = prod (e_i + 1).
"""
from __future__ import annotations
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

from app.config import Settings, get_settings
from app.services.endring import build_graph, candidate_count, compute_bass_suborder
from app.services.graph import IsogenyGraph, random_supersingular_j
from app.utils.errors import ConfigError, EndRingError, NonSquareDiscriminant, NotAnOrder
from app.utils.log import log

TABLE_PRIMES = (30011, 50021, 70001, 90001, 100003)


@dataclass
class Iteration:
    index: int
    order: bool = False
    bass: bool = False
    coprime: bool = False
    n_lambda: int | None = None
    n_exact: int | None = None
    error: str | None = None  # fallo de recursos: no cuenta como "no genera orden"


@dataclass
class ExperimentRow:
    p: int
    ell: int
    iterations: int
    orders: int
    bass_orders: int
    avg_n_lambda: float | None
    coprime_fraction: float | None
    strategy: str
    seed: int
    avg_n_exact: float | None = None
    errors: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def _one(graph: IsogenyGraph, settings: Settings, seed: int, index: int, strategy: str,
         fp_distance: int, exact: bool) -> Iteration:
    rng = random.Random(f"{seed}:{graph.p}:{index}")
    it = Iteration(index)
    j = random_supersingular_j(graph, rng, outside_Fp=True)
    length = max(1, math.ceil(math.log(graph.p))) if strategy == "fp" else None
    try:
        cert = compute_bass_suborder(j, graph, settings, seed=seed * 100_003 + index, strategy=strategy,
                                     fp_distance=fp_distance, length=length)
    except (NotAnOrder, NonSquareDiscriminant) as e:
        log("experiment", f"iteración {index}: el par no genera un orden ({e})")
        return it
    except EndRingError as e:
        it.error = f"{type(e).__name__}: {e}"
        log("experiment", f"iteración {index}: {it.error}")
        return it
    it.order = True
    it.bass = cert.bass
    it.coprime = cert.coprime
    if cert.bass:
        it.n_lambda = cert.n_lambda
        if exact:
            it.n_exact = candidate_count(cert, settings)
    return it


def run_experiment_row(p: int, iterations: int, settings: Settings | None = None, *, strategy: str = "fp",
                       fp_distance: int = 0, exact: bool = False) -> ExperimentRow:
    settings = settings or get_settings()
    if iterations < 1:
        raise ConfigError("iterations debe ser >= 1")
    if p <= 4 * settings.ell:
        raise ConfigError(f"se requiere p > 4 ell (p={p}, ell={settings.ell})")
    graph = build_graph(p, settings)

    def job(i: int) -> Iteration:
        return _one(graph, settings, settings.seed, i, strategy, fp_distance, exact)

    if settings.threads > 1:
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            its = list(pool.map(job, range(iterations)))
    else:
        its = [job(i) for i in range(iterations)]
    orders = [it for it in its if it.order]
    bass = [it for it in orders if it.bass]
    ns = [it.n_lambda for it in bass if it.n_lambda is not None]
    exact_ns = [it.n_exact for it in bass if it.n_exact is not None]
    row = ExperimentRow(
        p=p,
        ell=settings.ell,
        iterations=iterations,
        orders=len(orders),
        bass_orders=len(bass),
        avg_n_lambda=sum(ns) / len(ns) if ns else None,
        coprime_fraction=sum(it.coprime for it in orders) / len(orders) if orders else None,
        strategy=strategy,
        seed=settings.seed,
        avg_n_exact=sum(exact_ns) / len(exact_ns) if exact_ns else None,
        errors=sum(1 for it in its if it.error),
    )
    log("experiment", f"p={p}: órdenes={row.orders} bass={row.bass_orders} N(Lambda) medio={row.avg_n_lambda} errores={row.errors}")
    return row


def format_table(rows: list[ExperimentRow]) -> str:
    head = f"{'p':>8} | {'orders':>6} | {'Bass orders':>11} | {'average N(Lambda)':>17} | {'errors':>6}"
    lines = [head, "-" * len(head)]
    for r in rows:
        avg = f"{r.avg_n_lambda:.2f}" if r.avg_n_lambda is not None else "-"
        lines.append(f"{r.p:>8} | {r.orders:>6} | {r.bass_orders:>11} | {avg:>17} | {r.errors:>6}")
    return "\n".join(lines)

# app/services/commands.py
"""
Operaciones de alto nivel compartidas por la CLI y los routers, más el
guardado de resultados en la base.
"""
from __future__ import annotations
import random
from itertools import islice

from sqlalchemy.orm import Session
from sympy import primerange

from app.config import Settings
from app.models import CensusRun, EndRingRun, ExperimentRowRecord
from app.services.arith import Fq2Elem, fq2_field
from app.services.curves import curve_from_j, is_supersingular
from app.services.endring import (
    EndRingResult,
    bass_suborder_with_retries,
    build_graph,
    candidate_superorders,
    end_ring,
)
from app.services.experiments import ExperimentRow, run_experiment_row
from app.services.graph import census, random_supersingular_j, supersingular_start
from app.services.reduction import AttackResult, CGLHasher, CGLInput, second_preimage
from app.utils.errors import ConfigError
from app.utils.log import log


def parse_j(p: int, text: str | None, settings: Settings, seed: int = 0) -> Fq2Elem:
    """j dado como 'a' o 'a,b'; sin texto, uno al azar fuera de F_p."""
    F = fq2_field(p)
    if text:
        j = F.parse(text)
        if not is_supersingular(curve_from_j(j)):
            raise ConfigError(f"j={text} no es supersingular en p={p}")
        return j
    graph = build_graph(p, settings)
    return random_supersingular_j(graph, random.Random(seed), outside_Fp=p > 100)


# ======================================================================
# Censo y caminatas
# ======================================================================
def cmd_census(p_min: int, p_max: int, settings: Settings) -> list[dict]:
    out = []
    for p in primerange(max(p_min, 5), p_max + 1):
        if p <= 4 * settings.ell:
            continue
        out.append(census(build_graph(int(p), settings), settings.seed))
    return out


def cmd_walk(p: int, length: int, settings: Settings, j: str | None = None) -> dict:
    graph = build_graph(p, settings)
    start = fq2_field(p).parse(j) if j else supersingular_start(p)
    walk = graph.random_walk(start, length, random.Random(settings.seed))
    return {
        "p": p,
        "start": start.to_json(),
        "vertices": [v.to_json() for v in walk.vertices()],
        "end": walk.end.to_json(),
        "end_in_Sp": graph.in_Sp(walk.end),
    }


# ======================================================================
# End(E)
# ======================================================================
def cmd_endring(p: int, j: str | None, settings: Settings, strategy: str = "sp", fp_distance: int = 0) -> EndRingResult:
    jj = parse_j(p, j, settings, settings.seed)
    return end_ring(jj, settings, strategy=strategy, fp_distance=fp_distance)


def cmd_superorders(p: int, j: str | None, settings: Settings, limit: int = 16) -> dict:
    jj = parse_j(p, j, settings, settings.seed)
    graph = build_graph(p, settings)
    cert, attempts = bass_suborder_with_retries(jj, graph, settings, settings.seed)
    cands = list(islice(candidate_superorders(cert, settings), limit))
    return {
        "certificate": cert.to_json(),
        "attempts": attempts,
        "N_Lambda": cert.n_lambda,
        "shown": len(cands),
        "candidates": [O.to_json()["basis"] for O in cands],
    }


# ======================================================================
# Hash CGL
# ======================================================================
def cmd_hash(p: int, input_hex: str, bits: int | None, settings: Settings) -> dict:
    inp = CGLInput.from_hex(input_hex, bits)
    path = CGLHasher(p, settings.max_ext_degree).walk(inp)
    return {
        "p": p,
        "input": inp.bits,
        "j_hash": path.end.to_json(),
        "path": [v.to_json() for v in path.vertices()],
    }


def cmd_attack(p: int, input_hex: str, bits: int | None, settings: Settings) -> AttackResult:
    return second_preimage(CGLInput.from_hex(input_hex, bits), p, settings)


# ======================================================================
# Experimentos
# ======================================================================
def cmd_experiment(primes: list[int], iterations: int, settings: Settings, *, strategy: str = "fp",
                   fp_distance: int = 0, exact: bool = False) -> list[ExperimentRow]:
    if iterations < 1:
        raise ConfigError("iterations debe ser >= 1")
    return [run_experiment_row(p, iterations, settings, strategy=strategy, fp_distance=fp_distance, exact=exact)
            for p in primes]


# ======================================================================
# Persistencia
# ======================================================================
def save_census(db: Session, rec: dict) -> CensusRun:
    row = CensusRun(**{k: rec[k] for k in ("p", "ell", "sp_count", "supersingular_count", "c_hat", "seed")})
    db.add(row)
    db.commit()
    log("db", f"censo p={rec['p']} guardado")
    return row


def save_experiment(db: Session, r: ExperimentRow) -> ExperimentRowRecord:
    row = ExperimentRowRecord(
        p=r.p, ell=r.ell, iterations=r.iterations, orders=r.orders, bass_orders=r.bass_orders,
        avg_n_lambda=r.avg_n_lambda, coprime_fraction=r.coprime_fraction, strategy=r.strategy, seed=r.seed,
        errors=r.errors,
    )
    db.add(row)
    db.commit()
    log("db", f"fila de experimento p={r.p} guardada")
    return row


def save_endring(db: Session, res: EndRingResult) -> EndRingRun:
    cert = res.certificate
    row = EndRingRun(
        p=res.p,
        j=",".join(str(x) for x in res.j.to_json()),
        discrd=str(cert.discrd if cert else res.order.discrd()),
        n_lambda=cert.n_lambda if cert else 1,
        bass=cert.bass if cert else True,
        matched_index=res.matched_index,
        result=res.to_json(),
    )
    db.add(row)
    db.commit()
    log("db", f"End(E) p={res.p} guardado")
    return row

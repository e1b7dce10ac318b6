# app/routers/experiments.py
from fastapi import APIRouter, Depends, Query
from sqlalchemy import select
from sqlalchemy.orm import Session

from app.config import get_settings
from app.database import get_db
from app.models import ExperimentRowRecord
from app.schemas import ExperimentRequest, ExperimentRowOut
from app.services.commands import cmd_experiment, save_experiment
from app.utils.errors import EndRingError, to_http

router = APIRouter(prefix="/api/experiments", tags=["Experimentos"])


@router.post("", response_model=list[ExperimentRowOut])
def run(req: ExperimentRequest, db: Session = Depends(get_db)):
    try:
        settings = get_settings(ell=req.ell, seed=req.seed)
        rows = cmd_experiment(req.primes, req.iterations, settings, strategy=req.strategy,
                              fp_distance=req.fp_distance, exact=req.exact)
    except EndRingError as e:
        raise to_http(e)
    if req.save:
        for r in rows:
            save_experiment(db, r)
    return [r.to_json() for r in rows]


@router.get("/history", response_model=list[ExperimentRowOut])
def history(limit: int = Query(50, ge=1, le=500), db: Session = Depends(get_db)):
    rows = db.execute(select(ExperimentRowRecord).order_by(ExperimentRowRecord.id.desc()).limit(limit)).scalars().all()
    return [
        ExperimentRowOut(p=r.p, ell=r.ell, iterations=r.iterations, orders=r.orders, bass_orders=r.bass_orders,
                         avg_n_lambda=r.avg_n_lambda, coprime_fraction=r.coprime_fraction,
                         strategy=r.strategy, seed=r.seed, errors=r.errors)
        for r in rows
    ]

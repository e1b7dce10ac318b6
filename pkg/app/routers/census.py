# app/routers/census.py
from fastapi import APIRouter, Depends, HTTPException, Query
from sqlalchemy import select
from sqlalchemy.orm import Session

from app.config import get_settings
from app.database import get_db
from app.models import CensusRun
from app.schemas import CensusRecord, CensusRequest
from app.services.commands import cmd_census, cmd_walk, save_census
from app.utils.errors import EndRingError, to_http

router = APIRouter(prefix="/api/census", tags=["Censo"])


@router.post("", response_model=list[CensusRecord])
def run_census(req: CensusRequest, db: Session = Depends(get_db)):
    if req.p_min > req.p_max:
        return []
    try:
        settings = get_settings(ell=req.ell, seed=req.seed)
        recs = cmd_census(req.p_min, req.p_max, settings)
    except EndRingError as e:
        raise to_http(e)
    if req.save:
        for r in recs:
            save_census(db, r)
    return recs


@router.get("/history", response_model=list[CensusRecord])
def history(p: int | None = Query(None), limit: int = Query(50, ge=1, le=500), db: Session = Depends(get_db)):
    stmt = select(CensusRun).order_by(CensusRun.id.desc()).limit(limit)
    if p is not None:
        stmt = stmt.where(CensusRun.p == p)
    rows = db.execute(stmt).scalars().all()
    return [
        CensusRecord(p=r.p, ell=r.ell, sp_count=r.sp_count, supersingular_count=r.supersingular_count,
                     c_hat=r.c_hat, seed=r.seed)
        for r in rows
    ]


@router.get("/walk")
def walk(p: int, length: int = Query(8, ge=0, le=256), seed: int = 0, j: str | None = None):
    try:
        return cmd_walk(p, length, get_settings(seed=seed), j)
    except EndRingError as e:
        raise to_http(e)
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e))

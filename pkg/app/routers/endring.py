# app/routers/endring.py
from fastapi import APIRouter, Depends, HTTPException
from sqlalchemy import select
from sqlalchemy.orm import Session

from app.config import get_settings
from app.database import get_db
from app.models import EndRingRun
from app.schemas import EndRingRequest, EndRingResponse, SuperordersRequest
from app.services.commands import cmd_endring, cmd_superorders, save_endring
from app.utils.errors import EndRingError, to_http

router = APIRouter(prefix="/api/endring", tags=["End(E)"])


@router.post("", response_model=EndRingResponse)
def compute(req: EndRingRequest, db: Session = Depends(get_db)):
    try:
        res = cmd_endring(req.p, req.j, get_settings(seed=req.seed), req.strategy, req.fp_distance)
    except EndRingError as e:
        raise to_http(e)
    if req.save:
        save_endring(db, res)
    return res.to_json()


@router.post("/superorders")
def superorders(req: SuperordersRequest):
    try:
        return cmd_superorders(req.p, req.j, get_settings(seed=req.seed), req.limit)
    except EndRingError as e:
        raise to_http(e)


@router.get("/runs/{run_id}")
def get_run(run_id: int, db: Session = Depends(get_db)):
    row = db.execute(select(EndRingRun).where(EndRingRun.id == run_id)).scalar_one_or_none()
    if row is None:
        raise HTTPException(status_code=404, detail="Corrida no encontrada")
    return row.result

# app/routers/cgl.py
from fastapi import APIRouter, HTTPException

from app.config import get_settings
from app.schemas import AttackResponse, HashRequest, HashResponse
from app.services.commands import cmd_attack, cmd_hash
from app.utils.errors import EndRingError, to_http

router = APIRouter(prefix="/api/hash", tags=["Hash CGL"])


@router.post("", response_model=HashResponse)
def hash_input(req: HashRequest):
    try:
        return cmd_hash(req.p, req.input_hex, req.bits, get_settings())
    except EndRingError as e:
        raise to_http(e)
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e))


@router.post("/attack", response_model=AttackResponse)
def attack(req: HashRequest):
    if req.p % 4 != 3:
        raise HTTPException(status_code=422, detail="el ataque requiere p = 3 mod 4")
    try:
        return cmd_attack(req.p, req.input_hex, req.bits, get_settings()).to_json()
    except EndRingError as e:
        raise to_http(e)
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e))

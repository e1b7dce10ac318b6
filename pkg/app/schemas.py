# app/schemas.py
from __future__ import annotations
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator
from sympy import isprime


class _PrimeMixin(BaseModel):
    p: int = Field(..., description="primo de la característica")

    @field_validator("p")
    @classmethod
    def _prime(cls, v: int) -> int:
        if v <= 3 or not isprime(v):
            raise ValueError("p debe ser primo > 3")
        return v


# ======================================================================
# Censo de S^p
# ======================================================================
class CensusRequest(BaseModel):
    p_min: int = Field(..., ge=5)
    p_max: int = Field(..., ge=5, le=10 ** 6)
    ell: int = 2
    seed: int = 0
    save: bool = False


class CensusRecord(BaseModel):
    p: int
    ell: int
    sp_count: int
    supersingular_count: int
    c_hat: float
    seed: int = 0


# ======================================================================
# End(E)
# ======================================================================
class EndRingRequest(_PrimeMixin):
    j: Optional[str] = Field(None, description="'a' o 'a,b' (a + b s); vacío = j al azar fuera de F_p")
    seed: int = 0
    strategy: Literal["sp", "fp"] = "sp"
    fp_distance: int = Field(0, ge=0, le=2)
    save: bool = False


class EndRingResponse(BaseModel):
    p: int
    j: list[int]
    discrd: int
    discrd_factored: Optional[list[list[int]]] = None
    N_Lambda: Optional[int] = None
    bass: Optional[bool] = None
    matched_index: int
    examined: int
    basis: list[list[str]]
    theta_prefix: dict[str, int]
    D: int
    conjugate_ambiguity: bool
    embedding_ok: Optional[bool] = None
    timings: dict[str, float] = {}


class SuperordersRequest(_PrimeMixin):
    j: Optional[str] = None
    seed: int = 0
    limit: int = Field(16, ge=1, le=4096)


# ======================================================================
# Hash CGL
# ======================================================================
class HashRequest(_PrimeMixin):
    input_hex: str = Field("", description="entrada en hexadecimal")
    bits: Optional[int] = Field(None, ge=0, le=64, description="largo en bits (por defecto 4 por dígito)")


class HashResponse(BaseModel):
    p: int
    input: str
    j_hash: list[int]
    path: list[list[int]]


class AttackResponse(BaseModel):
    input: str
    second_preimage: str
    j_hash: list[int]
    steps: int
    norm_exponent: int = 0
    audit: Optional[dict] = None


# ======================================================================
# Experimentos
# ======================================================================
class ExperimentRequest(BaseModel):
    primes: list[int] = Field(default_factory=lambda: [30011, 50021, 70001, 90001, 100003])
    ell: int = 2
    iterations: int = Field(100, ge=1)
    seed: int = 0
    strategy: Literal["sp", "fp"] = "fp"
    fp_distance: int = Field(0, ge=0, le=2)
    exact: bool = False
    save: bool = False


class ExperimentRowOut(BaseModel):
    p: int
    ell: int
    iterations: int
    orders: int
    bass_orders: int
    avg_n_lambda: Optional[float] = None
    coprime_fraction: Optional[float] = None
    strategy: str
    seed: int
    avg_n_exact: Optional[float] = None
    errors: int = 0

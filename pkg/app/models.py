# app/models.py
from __future__ import annotations
from datetime import datetime

from sqlalchemy import JSON, Boolean, DateTime, Float, Integer, String, BigInteger, func
from sqlalchemy.orm import Mapped, mapped_column

from app.database import Base  # <-- usa la Base central del proyecto


# ---------------------------------------
# Mixin de timestamps
# ---------------------------------------
class TimestampMixin:
    fecha_creacion: Mapped[datetime] = mapped_column(
        DateTime, nullable=False, server_default=func.now()
    )


class CensusRun(TimestampMixin, Base):
    __tablename__ = "census_runs"

    id: Mapped[int]                   = mapped_column(Integer, primary_key=True, autoincrement=True)
    p: Mapped[int]                    = mapped_column(BigInteger, nullable=False, index=True)
    ell: Mapped[int]                  = mapped_column(Integer, nullable=False, default=2)
    sp_count: Mapped[int]             = mapped_column(Integer, nullable=False)
    supersingular_count: Mapped[int]  = mapped_column(Integer, nullable=False)
    c_hat: Mapped[float]              = mapped_column(Float, nullable=False)
    seed: Mapped[int]                 = mapped_column(Integer, nullable=False, default=0)


class ExperimentRowRecord(TimestampMixin, Base):
    __tablename__ = "experiment_rows"

    id: Mapped[int]                   = mapped_column(Integer, primary_key=True, autoincrement=True)
    p: Mapped[int]                    = mapped_column(BigInteger, nullable=False, index=True)
    ell: Mapped[int]                  = mapped_column(Integer, nullable=False, default=2)
    iterations: Mapped[int]           = mapped_column(Integer, nullable=False)
    orders: Mapped[int]               = mapped_column(Integer, nullable=False)
    bass_orders: Mapped[int]          = mapped_column(Integer, nullable=False)
    avg_n_lambda: Mapped[float | None]     = mapped_column(Float, nullable=True)
    coprime_fraction: Mapped[float | None] = mapped_column(Float, nullable=True)
    strategy: Mapped[str]             = mapped_column(String(8), nullable=False, default="fp")
    seed: Mapped[int]                 = mapped_column(Integer, nullable=False, default=0)
    errors: Mapped[int]               = mapped_column(Integer, nullable=False, default=0)


class EndRingRun(TimestampMixin, Base):
    __tablename__ = "endring_runs"

    id: Mapped[int]                   = mapped_column(Integer, primary_key=True, autoincrement=True)
    p: Mapped[int]                    = mapped_column(BigInteger, nullable=False, index=True)
    j: Mapped[str]                    = mapped_column(String(80), nullable=False)  # "a,b" = a + b s
    discrd: Mapped[str]               = mapped_column(String(80), nullable=False)  # discrd(Lambda), puede exceder 64 bits
    n_lambda: Mapped[int]             = mapped_column(Integer, nullable=False)
    bass: Mapped[bool]                = mapped_column(Boolean, nullable=False, default=True)
    matched_index: Mapped[int]        = mapped_column(Integer, nullable=False)
    result: Mapped[dict]              = mapped_column(JSON, nullable=False)

# app/config.py
"""
Configuración por variables de entorno (.env vía python-dotenv).
Los valores de la CLI / tests entran como overrides de get_settings().
"""
from __future__ import annotations
import os
from dataclasses import dataclass, field, replace
from dotenv import load_dotenv

from app.utils.errors import ConfigError
from app.utils.log import _tf

load_dotenv()

AMBIENTE = os.getenv("AMBIENTE", "Desarrollo")


def _int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{name} debe ser entero, se recibió {raw!r}") from e


def _int_list(name: str, default: str) -> tuple[int, ...]:
    raw = os.getenv(name) or default
    try:
        return tuple(int(x) for x in raw.split(",") if x.strip())
    except ValueError as e:
        raise ConfigError(f"{name} debe ser lista de enteros separada por comas") from e


@dataclass(frozen=True)
class Settings:
    seed: int = 0
    ell: int = 2
    threads: int = 1
    phi_file: str | None = None
    db_url: str = "sqlite:///./endring.db"
    factor_budget: int = 200_000
    torsion_levels: tuple[int, ...] = (3, 5, 7, 11, 13, 17, 19, 23)
    max_ext_degree: int = 12
    theta_d: int = 50
    theta_dmax: int = 200
    retries: int = 20
    desk_cap: int = 2 ** 20
    oracle_cap: int = 10 ** 4
    precision_margin: int = 4
    precision_cap: int = 64
    quiet: bool = False
    extra: dict = field(default_factory=dict)

    def with_overrides(self, **kw) -> "Settings":
        kw = {k: v for k, v in kw.items() if v is not None}
        s = replace(self, **kw)
        s.validate()
        return s

    def validate(self) -> None:
        if self.ell < 2:
            raise ConfigError(f"ell inválido: {self.ell}")
        if self.threads < 1:
            raise ConfigError("threads debe ser >= 1")
        if self.theta_d < 1 or self.theta_dmax < self.theta_d:
            raise ConfigError("se requiere 1 <= ENDRING_THETA_D <= ENDRING_THETA_DMAX")
        if self.max_ext_degree < 1 or self.max_ext_degree > 12:
            raise ConfigError("ENDRING_MAX_EXT_DEGREE debe estar en [1, 12]")
        if self.retries < 1:
            raise ConfigError("ENDRING_RETRIES debe ser >= 1")


def get_settings(**overrides) -> Settings:
    s = Settings(
        seed=_int("ENDRING_SEED", 0),
        ell=_int("ENDRING_ELL", 2),
        threads=_int("ENDRING_THREADS", 1),
        phi_file=os.getenv("ENDRING_PHI_FILE") or None,
        db_url=os.getenv("ENDRING_DB_URL") or "sqlite:///./endring.db",
        factor_budget=_int("ENDRING_FACTOR_BUDGET", 200_000),
        torsion_levels=_int_list("ENDRING_TORSION_LEVELS", "3,5,7,11,13,17,19,23"),
        max_ext_degree=_int("ENDRING_MAX_EXT_DEGREE", 12),
        theta_d=_int("ENDRING_THETA_D", 50),
        theta_dmax=_int("ENDRING_THETA_DMAX", 200),
        retries=_int("ENDRING_RETRIES", 20),
        desk_cap=_int("ENDRING_DESK_CAP", 2 ** 20),
        oracle_cap=_int("ENDRING_ORACLE_CAP", 10 ** 4),
        precision_margin=_int("ENDRING_LOCAL_PRECISION_MARGIN", 4),
        precision_cap=_int("ENDRING_LOCAL_PRECISION_CAP", 64),
        quiet=_tf(os.getenv("ENDRING_QUIET")),
    )
    s.validate()
    return s.with_overrides(**overrides) if overrides else s

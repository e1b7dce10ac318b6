# app/utils/log.py
from __future__ import annotations
import os
import sys


def _tf(v: str | None) -> bool:
    return (v or "").strip().lower() in ("1", "true", "yes", "on", "si")


def log(tag: str, msg: str) -> None:
    """Línea con etiqueta, ej. ``[graph] caminata 12 llegó a S^p``."""
    if _tf(os.getenv("ENDRING_QUIET")):
        return
    print(f"[{tag}] {msg}", flush=True)


def log_error(tag: str, msg: str) -> None:
    print(f"[{tag}] ERROR {msg}", file=sys.stderr, flush=True)

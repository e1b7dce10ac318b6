# app/utils/errors.py
"""
Excepciones del dominio. Cada una lleva el código de salida de la CLI y el
status HTTP con el que la mapean los routers.
"""
from __future__ import annotations


class EndRingError(RuntimeError):
    exit_code: int = 1
    http_status: int = 500


# ======================================================================
# Configuración y escala de escritorio
# ======================================================================
class ConfigError(EndRingError):
    exit_code = 2
    http_status = 422


class DeskScaleExceeded(EndRingError):
    """La instancia excede lo que se puede resolver a escala de escritorio."""
    exit_code = 3
    http_status = 413


class FactorTimeout(DeskScaleExceeded):
    pass


class ExtensionTooLarge(DeskScaleExceeded):
    pass


class InsufficientTorsion(DeskScaleExceeded):
    pass


class PrecisionExhausted(DeskScaleExceeded):
    pass


class Timeout(DeskScaleExceeded):
    pass


# ======================================================================
# Aritmética / curvas / grafo
# ======================================================================
class NotCoprime(EndRingError):
    http_status = 422


class BadKernel(EndRingError):
    http_status = 422


class SearchExhausted(EndRingError):
    """Ninguna caminata llegó al conjunto objetivo; reintentar con otra semilla."""
    http_status = 503


class UnsupportedPrime(EndRingError):
    exit_code = 2
    http_status = 422


# ======================================================================
# Órdenes de cuaterniones
# ======================================================================
class NotAnOrder(EndRingError):
    http_status = 422


class NotFullRank(NotAnOrder):
    pass


class NonSquareDiscriminant(EndRingError):
    pass


class RamifiedPrime(EndRingError):
    http_status = 422


class NotBass(EndRingError):
    http_status = 422


class Ambiguous(EndRingError):
    def __init__(self, msg: str, survivors: list | None = None):
        super().__init__(msg)
        self.survivors = survivors or []


class NoMatch(EndRingError):
    pass


class NotFound(EndRingError):
    http_status = 404


def to_http(e: EndRingError):
    """HTTPException equivalente, para los routers."""
    from fastapi import HTTPException

    return HTTPException(status_code=e.http_status, detail=f"{type(e).__name__}: {e}")

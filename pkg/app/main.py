# app/main.py
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.database import Base, engine
from app.routers import census, cgl, endring, experiments

app = FastAPI(
    title="EndRing · anillos de endomorfismos supersingulares",
    description="Ciclos en G(p, ell), órdenes de Bass, End(E) y hash CGL de juguete",
    version="1.0.0",
)

# CORS (MVP)
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.on_event("startup")
def _create_tables():
    Base.metadata.create_all(bind=engine)


# ===========================
# Registro de routers
# ===========================
app.include_router(census.router)        # /api/census
app.include_router(endring.router)       # /api/endring
app.include_router(cgl.router)           # /api/hash
app.include_router(experiments.router)   # /api/experiments


@app.get("/healthz")
def healthz():
    return {"ok": True}

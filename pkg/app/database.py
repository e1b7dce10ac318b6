# app/database.py
from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker
import os
from dotenv import load_dotenv

from app.utils.log import log

load_dotenv()

AMBIENTE = os.getenv("AMBIENTE", "Desarrollo")

# Resultados de censos, experimentos y corridas de End(E)
DATABASE_URL = os.getenv("ENDRING_DB_URL") or "sqlite:///./endring.db"

log("db", f"base de datos en entorno {AMBIENTE}: {DATABASE_URL.split('://')[0]}")


def make_engine(url: str = DATABASE_URL, **extra):
    kw = {"connect_args": {"check_same_thread": False}} if url.startswith("sqlite") else {"pool_pre_ping": True}
    kw.update(extra)
    return create_engine(url, **kw)


engine = make_engine()
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
Base = declarative_base()


def get_db():
    db = SessionLocal()
    try:
        yield db            # los commits van en los endpoints que escriben
    except Exception:
        db.rollback()
        raise
    finally:
        db.close()

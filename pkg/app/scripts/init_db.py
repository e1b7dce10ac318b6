# app/scripts/init_db.py
from __future__ import annotations
import argparse
import sys
from pathlib import Path

THIS = Path(__file__).resolve()
for cand in (THIS.parents[2], Path.cwd()):
    if (cand / "app" / "models.py").exists():
        sys.path.insert(0, str(cand))
        break

from sqlalchemy import inspect  # noqa: E402


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Crea las tablas de resultados en ENDRING_DB_URL.")
    parser.add_argument("--drop", action="store_true", help="borra las tablas antes de crearlas")
    args = parser.parse_args(argv)

    from app.database import Base, engine
    import app.models  # noqa: F401  registra las tablas

    if args.drop:
        Base.metadata.drop_all(bind=engine)
    Base.metadata.create_all(bind=engine)
    tables = sorted(inspect(engine).get_table_names())
    print(f"[db] tablas: {', '.join(tables)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

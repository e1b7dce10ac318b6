# app/scripts/endring_cli.py
"""
CLI: python -m app.scripts.endring_cli <subcomando> [opciones]

Subcomandos: experiment, endring, census, walk, hash, attack, superorders.
Códigos de salida: 0 éxito, 2 error de configuración, 3 fuera de escala.
"""
from __future__ import annotations
import argparse
import json
import sys
from pathlib import Path

# --- Resolver raíz del proyecto para que "import app" funcione ---
THIS = Path(__file__).resolve()
for cand in (THIS.parents[2], Path.cwd()):
    if (cand / "app" / "config.py").exists():
        sys.path.insert(0, str(cand))
        break

from app.config import get_settings  # noqa: E402
from app.services import commands  # noqa: E402
from app.services.experiments import TABLE_PRIMES, format_table  # noqa: E402
from app.utils.errors import EndRingError  # noqa: E402
from app.utils.log import log, log_error  # noqa: E402


def _emit(data, json_out: str | None) -> None:
    text = json.dumps(data, indent=2, ensure_ascii=False, default=str)
    if json_out:
        Path(json_out).write_text(text + "\n", encoding="utf-8")
        log("cli", f"resultado escrito en {json_out}")
    else:
        print(text)


def _session():
    from app.database import Base, SessionLocal, engine

    Base.metadata.create_all(bind=engine)
    return SessionLocal()


# ======================================================================
# Subcomandos
# ======================================================================
def cmd_experiment(args, settings) -> int:
    primes = args.p or list(TABLE_PRIMES)
    rows = commands.cmd_experiment(primes, args.iterations, settings, strategy=args.strategy,
                                   fp_distance=args.fp_distance, exact=args.exact)
    print(format_table(rows))
    _emit([r.to_json() for r in rows], args.json_out)
    if args.save:
        with _session() as db:
            for r in rows:
                commands.save_experiment(db, r)
    return 0


def cmd_endring(args, settings) -> int:
    res = commands.cmd_endring(args.p, args.j, settings, args.strategy, args.fp_distance)
    _emit(res.to_json(), args.json_out)
    if args.save:
        with _session() as db:
            commands.save_endring(db, res)
    return 0


def cmd_census(args, settings) -> int:
    recs = commands.cmd_census(args.p_min, args.p_max, settings)
    _emit(recs, args.json_out)
    if args.save:
        with _session() as db:
            for r in recs:
                commands.save_census(db, r)
    return 0


def cmd_walk(args, settings) -> int:
    _emit(commands.cmd_walk(args.p, args.length, settings, args.j), args.json_out)
    return 0


def cmd_hash(args, settings) -> int:
    _emit(commands.cmd_hash(args.p, args.input, args.bits, settings), args.json_out)
    return 0


def cmd_attack(args, settings) -> int:
    _emit(commands.cmd_attack(args.p, args.input, args.bits, settings).to_json(), args.json_out)
    return 0


def cmd_superorders(args, settings) -> int:
    _emit(commands.cmd_superorders(args.p, args.j, settings, args.limit), args.json_out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="endring", description="End(E) de curvas supersingulares vía ciclos en G(p, ell).")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--ell", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--json-out", default=None, help="escribe el JSON en este archivo")
    parser.add_argument("--phi-file", default=None, help="polinomio modular en formato 'dx dy c'")
    parser.add_argument("--save", action="store_true", help="guarda el resultado en ENDRING_DB_URL")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("experiment", help="tabla de pares de ciclos por primo")
    sp.add_argument("--p", type=int, action="append", help="primo (repetible); por defecto los cinco de la tabla")
    sp.add_argument("--iterations", type=int, default=100)
    sp.add_argument("--strategy", choices=["sp", "fp"], default="fp")
    sp.add_argument("--fp-distance", type=int, default=0)
    sp.add_argument("--exact", action="store_true", help="cuenta los órdenes pegados en vez de la cota")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("endring", help="End(E) completo")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--j", default=None, help="'a' o 'a,b'; por defecto al azar")
    sp.add_argument("--strategy", choices=["sp", "fp"], default="sp")
    sp.add_argument("--fp-distance", type=int, default=0)
    sp.set_defaults(func=cmd_endring)

    sp = sub.add_parser("census", help="|S^p| y cantidad de supersingulares")
    sp.add_argument("--p-min", type=int, required=True)
    sp.add_argument("--p-max", type=int, required=True)
    sp.set_defaults(func=cmd_census)

    sp = sub.add_parser("walk", help="caminata aleatoria y si termina en S^p")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--length", type=int, default=8)
    sp.add_argument("--j", default=None)
    sp.set_defaults(func=cmd_walk)

    for name, fn in (("hash", cmd_hash), ("attack", cmd_attack)):
        sp = sub.add_parser(name, help="hash CGL" if name == "hash" else "segunda preimagen CGL")
        sp.add_argument("--p", type=int, required=True)
        sp.add_argument("--input", default="", help="entrada en hexadecimal")
        sp.add_argument("--bits", type=int, default=None)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("superorders", help="órdenes maximales que contienen al suborden de Bass")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--j", default=None)
    sp.add_argument("--limit", type=int, default=16)
    sp.set_defaults(func=cmd_superorders)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = get_settings(seed=args.seed, ell=args.ell, threads=args.threads, phi_file=args.phi_file)
        return args.func(args, settings)
    except EndRingError as e:
        log_error(args.command, f"{type(e).__name__}: {e}")
        return e.exit_code
    except ValueError as e:
        log_error(args.command, str(e))
        return 2


if __name__ == "__main__":
    sys.exit(main())

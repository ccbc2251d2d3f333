"""Command-line interface: ``orbitflow <lattice|incidence|stretch|evolve|mc|golden|fit>``.

Exit codes: 0 success, 1 validation failure, 2 golden mismatch, 3 numerical blowup.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .ensemble import ENSEMBLES, NORMALIZATIONS, EnsembleSpec, sample_field
from .galerkin import INTEGRATORS, BlowupError, EvolutionConfig, evolve
from .harness import (
    THREADS_ENV,
    golden_tables,
    load_golden,
    monte_carlo,
    power_law_fit,
    sample_diagnostics,
)
from .incidence import incidence_row
from .lattice import TRUNCATIONS, burnside_total, enumerate_lattice, orbit_table
from .transfer import NONLINEARITIES

logger = logging.getLogger("orbitflow")

EXIT_OK, EXIT_INVALID, EXIT_GOLDEN, EXIT_BLOWUP = 0, 1, 2, 3


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would collide with the golden-mismatch code
    def error(self, message):
        raise ValidationError(message)


# Serialization


def fmt_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def to_json(obj: Any, indent: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{to_json(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(x, (dict, list, tuple)) for x in obj):
            return "[" + ", ".join(to_json(x) for x in obj) + "]"
        return "[\n" + ",\n".join(inner + to_json(x, indent + 1) for x in obj) + f"\n{pad}]"
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'
    if obj is None:
        return "null"
    if hasattr(obj, "item"):  # numpy scalar
        obj = obj.item()
    return fmt_value(obj)


def to_csv(records: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    buf = io.StringIO()
    cols = list(columns or (records[0].keys() if records else []))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow([fmt_value(_plain(r.get(c))) for c in cols])
    return buf.getvalue()


def _plain(v):
    if hasattr(v, "item"):
        return v.item()
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return v


def emit(args, records: list[dict], extra: dict | None = None, columns=None) -> None:
    """Write CSV (default) or JSON to ``--output`` / the format path, else stdout."""
    if args.json is not None:
        fmt, path = "json", args.json
    else:
        fmt, path = "csv", args.csv
    path = path if path not in (None, "-") else args.output
    if fmt == "json":
        payload: Any = records if extra is None else {"rows": records, **extra}
        text = to_json(payload) + "\n"
    else:
        text = to_csv(records, columns)
        if extra:
            for k, v in extra.items():
                logger.info("%s: %s", k, to_json(v).replace("\n", " "))
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# Config file


def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys use flag names."""
    out: dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as err:
        raise ValidationError(f"cannot read config {path}: {err}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value.strip("\"'")
    return out


def _apply_config(parser: argparse.ArgumentParser, config: dict[str, str]) -> None:
    actions = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, value in config.items():
        action = actions.get(key)
        if action is None or key in ("help", "config"):
            raise ValidationError(f"unknown config key {key!r} for '{parser.prog}'")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValidationError(f"config key {key!r} expects a boolean")
            defaults[key] = value.lower() in ("true", "1", "yes")
        else:
            try:
                defaults[key] = action.type(value) if action.type else value
            except (TypeError, ValueError) as err:
                raise ValidationError(f"config key {key!r}: {err}") from None
            if action.choices is not None and defaults[key] not in action.choices:
                raise ValidationError(f"config key {key!r} must be one of {list(action.choices)}")
    parser.set_defaults(**defaults)


# Argument helpers


def _n_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(".."))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a..b, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"invalid range {text!r}")
    return lo, hi


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _require(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise ValidationError(f"--{n.replace('_', '-')} is required")


def _spec(args, normalize: str | None = None) -> EnsembleSpec:
    return EnsembleSpec(
        kind=args.ensemble, seed=args.seed, s=args.s, M=args.m, normalize=normalize or args.normalize
    )


# Subcommands


def cmd_lattice(args) -> int:
    _require(args, "n")
    ix = enumerate_lattice(args.n, args.truncation)
    rows = [dict(r, N=args.n) for r in orbit_table(ix)]
    extra = {
        "N": args.n,
        "truncation": args.truncation,
        "n_modes": ix.n_modes,
        "n_orb": ix.n_orb,
        "n_sh": ix.n_sh,
        "burnside_n_orb": burnside_total(ix),
    }
    emit(args, rows, extra, columns=["N", "rep", "size", "r"])
    return EXIT_OK


def cmd_incidence(args) -> int:
    if args.n_range is not None:
        lo, hi = args.n_range
    elif args.n is not None:
        lo = hi = args.n
    else:
        raise ValidationError("--n or --n-range is required")
    rows = [incidence_row(N, args.truncation) for N in range(lo, hi + 1)]
    cols = ["N", "truncation", "S", "S_over_N3", "S_argmax_rep", "S_argmax_size"]
    if args.weighted:
        cols += ["I_w", "I_w_over_N2", "I_w_argmax_rep"]
    extra = None
    if args.fit:
        if hi - lo < 1:
            raise ValidationError("--fit needs an --n-range with at least two values")
        fits = {"S": power_law_fit([(r["N"], r["S"]) for r in rows if r["S"] > 0])}
        if args.weighted:
            fits["I_w"] = power_law_fit([(r["N"], r["I_w"]) for r in rows if r["I_w"] > 0])
        extra = {
            "fits": {
                k: {"exponent": f.exponent, "prefactor": f.prefactor, "n_range": list(f.n_range)}
                for k, f in fits.items()
            }
        }
    emit(args, [{c: r[c] for c in cols} for r in rows], extra, columns=cols)
    return EXIT_OK


def cmd_stretch(args) -> int:
    _require(args, "n")
    if args.samples < 1:
        raise ValidationError("--samples must be >= 1")
    ix = enumerate_lattice(args.n, args.truncation)
    spec = _spec(args)
    if args.aggregate:
        row = monte_carlo(ix, spec, args.samples, args.threads, args.nonlinearity)
        emit(args, [row.as_dict()])
        return EXIT_OK
    diag = sample_diagnostics(ix, spec, range(args.samples), args.threads, args.nonlinearity)
    cols = ["sample_id", "rho_v", "rho_abs_v", "inf_norm_v", "nu_c_star"]
    rows = [dict(zip(cols, [i, *map(float, d)])) for i, d in enumerate(diag)]
    emit(args, rows, columns=cols)
    return EXIT_OK


def cmd_evolve(args) -> int:
    _require(args, "n", "nu", "dt", "t_end")
    ix = enumerate_lattice(args.n, args.truncation)
    config = EvolutionConfig(
        nu=args.nu,
        dt=args.dt,
        t_end=args.t_end,
        integrator=args.integrator,
        output_every=args.output_every,
        nonlinearity=args.nonlinearity,
    )
    u0 = sample_field(_spec(args), ix, args.sample_id)
    try:
        records = evolve(u0, config)
    except BlowupError as err:
        print(f"orbitflow: blowup: {err}", file=sys.stderr)
        emit(args, [r.as_dict() for r in err.records])
        return EXIT_BLOWUP
    emit(args, [r.as_dict() for r in records])
    return EXIT_OK


_MC_TABLES = {
    # name: (ensemble, N values, fit range)
    "isotropic": ("isotropic", range(1, 9), (2, 8)),
    "kolmogorov": ("kolmogorov", range(1, 5), (2, 4)),
    "sign-cancel": ("isotropic", range(1, 6), None),
}


def cmd_mc(args) -> int:
    names = list(_MC_TABLES) if args.table == "all" else [args.table]
    golden = load_golden()
    ref_key = {"isotropic": "mc_isotropic", "kolmogorov": "mc_kolmogorov", "sign-cancel": "sign_cancel"}
    rows, fits = [], {}
    for name in names:
        kind, n_values, fit_range = _MC_TABLES[name]
        spec = EnsembleSpec(kind=kind, seed=args.seed, normalize=args.normalize)
        ref = {r[0]: r for r in golden[ref_key[name]]["rows"]}
        table_rows = []
        for N in n_values:
            if args.n_max is not None and N > args.n_max:
                break
            samples = args.samples if N <= 4 else args.samples_large
            row = monte_carlo(enumerate_lattice(N), spec, samples, args.threads, args.nonlinearity)
            rec = {"table": name, **row.as_dict()}
            rec["reference_rho_v"] = ref[N][1] if N in ref else None
            if name == "sign-cancel" and N in ref:
                rec["reference_ratio"] = ref[N][4]
            table_rows.append(rec)
            logger.info("%s N=%d samples=%d mean rho=%.4g", name, N, samples, row.mean_rho_v)
        rows.extend(table_rows)
        if fit_range is not None:
            pts = [(r["N"], r["mean_rho_v"]) for r in table_rows if fit_range[0] <= r["N"] <= fit_range[1]]
            if len(pts) >= 2:
                f = power_law_fit(pts)
                fits[name] = {
                    "exponent": f.exponent,
                    "prefactor": f.prefactor,
                    "n_range": list(f.n_range),
                    "reference_exponent": golden[ref_key[name]]["fit_exponent"],
                }
    cols = ["table", "N", "samples", "mean_rho_v", "stderr_rho_v", "mean_nu_c_star", "stderr_nu_c_star",
            "mean_rho_abs_v", "mean_inf_norm_v", "cancellation_ratio", "reference_rho_v", "reference_ratio"]
    emit(args, rows, {"fits": fits} if fits else None, columns=cols)
    return EXIT_OK


def cmd_golden(args) -> int:
    report = golden_tables()
    for m in report.mismatches:
        print(f"orbitflow: golden mismatch: {m}", file=sys.stderr)
    rows = [
        {"table": m.table, "row": m.row, "column": m.column, "expected": m.expected, "actual": float(m.actual)}
        for m in report.mismatches
    ]
    emit(args, rows, {"checked": report.checked, "mismatches": len(report.mismatches)},
         columns=["table", "row", "column", "expected", "actual"])
    logger.info("golden: %d cells checked, %d mismatches", report.checked, len(report.mismatches))
    return EXIT_OK if report.ok else EXIT_GOLDEN


def cmd_fit(args) -> int:
    if args.points:
        pts = []
        for item in args.points.split(","):
            try:
                n, v = item.split(":")
                pts.append((float(n), float(v)))
            except ValueError:
                raise ValidationError(f"bad point {item!r}; expected N:value") from None
    elif args.input:
        with open(args.input, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "N" not in reader.fieldnames or args.column not in reader.fieldnames:
                raise ValidationError(f"input needs columns 'N' and {args.column!r}")
            pts = [(float(r["N"]), float(r[args.column])) for r in reader if r[args.column] != ""]
    else:
        raise ValidationError("--points or --input is required")
    if args.n_range is not None:
        lo, hi = args.n_range
        pts = [p for p in pts if lo <= p[0] <= hi]
    f = power_law_fit(pts)
    emit(args, [{"exponent": f.exponent, "prefactor": f.prefactor, "n_min": f.n_range[0],
                 "n_max": f.n_range[1], "points": len(pts)}])
    return EXIT_OK


# Parser


def _output_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--csv", nargs="?", const="-", default=None, metavar="PATH", help="CSV output (default)")
    g.add_argument("--json", nargs="?", const="-", default=None, metavar="PATH", help="JSON output")
    p.add_argument("--output", "-o", default=None, help="output path for the chosen format")


def _ensemble_flags(p, normalize_default="energy"):
    p.add_argument("--ensemble", choices=ENSEMBLES, default="isotropic")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--s", type=float, default=None, help="Sobolev exponent (sobolev ensemble)")
    p.add_argument("--m", type=float, default=1.0, help="Sobolev envelope amplitude M")
    p.add_argument("--normalize", choices=NORMALIZATIONS, default=normalize_default)


def build_parser() -> _Parser:
    parser = _Parser(prog="orbitflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def common(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="key = value file; flags override it")
        p.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
        _output_flags(p)
        return p

    p = common("lattice", "lattice, orbit and shell counts")
    p.add_argument("--n", type=int)
    p.add_argument("--truncation", choices=TRUNCATIONS, default="cube")
    p.set_defaults(func=cmd_lattice)

    p = common("incidence", "incidence sums S(N) and I_w")
    p.add_argument("--n", type=int)
    p.add_argument("--n-range", type=_n_range, default=None, metavar="A..B")
    p.add_argument("--truncation", choices=TRUNCATIONS, default="cube")
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--fit", action="store_true")
    p.set_defaults(func=cmd_incidence)

    p = common("stretch", "stretching diagnostics of random fields")
    p.add_argument("--n", type=int)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--truncation", choices=TRUNCATIONS, default="cube")
    p.add_argument("--aggregate", action="store_true", help="emit mean/stderr instead of per-sample rows")
    p.add_argument("--nonlinearity", choices=tuple(NONLINEARITIES), default="gradient")
    p.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${THREADS_ENV})")
    _ensemble_flags(p)
    p.set_defaults(func=cmd_stretch)

    p = common("evolve", "Galerkin time evolution with diagnostics")
    p.add_argument("--n", type=int)
    p.add_argument("--nu", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--integrator", choices=INTEGRATORS, default="etdrk4")
    p.add_argument("--output-every", type=int, default=None)
    p.add_argument("--truncation", choices=TRUNCATIONS, default="cube")
    p.add_argument("--nonlinearity", choices=tuple(NONLINEARITIES), default="gradient")
    p.add_argument("--sample-id", type=int, default=0)
    _ensemble_flags(p)
    p.set_defaults(func=cmd_evolve)

    p = common("mc", "Monte Carlo reproduction of the isotropic, Kolmogorov and sign-cancellation tables")
    p.add_argument("--table", choices=[*_MC_TABLES, "all"], default="all")
    p.add_argument("--samples", type=int, default=2000, help="samples per N for N <= 4")
    p.add_argument("--samples-large", type=int, default=200, help="samples per N for N >= 5")
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--seed", type=_u64, default=1)
    p.add_argument("--normalize", choices=NORMALIZATIONS, default="enstrophy")
    p.add_argument("--nonlinearity", choices=tuple(NONLINEARITIES), default="gradient")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_mc)

    p = common("golden", "exact-table regression")
    p.set_defaults(func=cmd_golden)

    p = common("fit", "power-law fit of (N, value) points")
    p.add_argument("--points", default=None, help="comma-separated N:value pairs")
    p.add_argument("--input", default=None, help="CSV file with an N column")
    p.add_argument("--column", default="value")
    p.add_argument("--n-range", type=_n_range, default=None, metavar="A..B")
    p.set_defaults(func=cmd_fit)
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            sp = _subparser(parser, args.command)
            _apply_config(sp, read_config(args.config))
            args = parser.parse_args(argv)
        logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        if getattr(args, "threads", None) is not None and args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        return args.func(args)
    except ValidationError as err:
        print(f"orbitflow: error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as err:
        print(f"orbitflow: invalid input: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

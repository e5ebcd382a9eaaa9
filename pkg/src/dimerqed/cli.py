"""Command-line entry point.

Exit status: 0 success, 1 usage error, 2 configuration error, 3 solver
failure at a single parameter point.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, report
from .config import ConfigError, fixture_path, list_fixtures, load_config
from .effective import classify_mechanisms
from .liouville import SolverError
from .model import ParameterError
from .operators import InvalidStateError
from .sweep import (Table, _FAILURES, evaluate_model, run_evolution, run_spectrum,
                    run_sweep)

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _formats(text: str) -> tuple[str, ...]:
    fmts = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in fmts if f not in report.FORMATS]
    if bad or not fmts:
        raise argparse.ArgumentTypeError(
            f"formats must be drawn from {','.join(report.FORMATS)}")
    return fmts


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="TOML run file, or the name of a shipped fixture")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        dest="overrides",
                        help="override a value; bare keys go to [system]")
    common.add_argument("--out", metavar="DIR", help="write files here instead of stdout")
    common.add_argument("--format", type=_formats, default=("csv",),
                        help="comma list of csv,json,svg (default csv)")
    common.add_argument("--threads", type=_positive_int, default=1)

    ap = _Parser(prog="dimerqed", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("steady", parents=[common], help="steady-state observables at one point")
    sub.add_parser("evolve", parents=[common], help="time evolution from [evolve]")
    sub.add_parser("sweep", parents=[common], help="run the [sweep] grid")
    sub.add_parser("spectrum", parents=[common], help="emission spectrum from [spectrum]")
    sub.add_parser("classify", parents=[common], help="mechanism labels at one point")
    v = sub.add_parser("validate", parents=[common], help="run the reference checks")
    v.add_argument("--only", metavar="N,M", default="",
                   help="comma list of check numbers")
    v.add_argument("--strict", action="store_true",
                   help="exit 3 if any check fails")
    sub.add_parser("fixtures", help="list shipped fixture names")
    return ap


def _resolve_config(name: str | None) -> Path:
    if name is None:
        raise ConfigError("--config is required")
    p = Path(name)
    if p.exists():
        return p
    return fixture_path(name)


def _write(result, args, stem: str) -> None:
    if args.out:
        for path in report.emit(result, args.out, stem, args.format):
            print(path)
        return
    writers = {"csv": report.to_csv, "json": report.to_json, "svg": report.to_svg}
    sys.stdout.write(writers[args.format[0]](result))


def _cmd_steady(spec, args) -> int:
    p = spec.base
    row: dict = {}
    failed = False
    for m in spec.models:
        try:
            row.update(evaluate_model(p, m, [o for o in spec.observables
                                             if o != "spectrum"]))
        except _FAILURES as exc:
            print(f"{m}: {type(exc).__name__}: {exc}", file=sys.stderr)
            failed = True
    if failed:
        return EXIT_SOLVER
    # failures already returned above, so the error columns are empty
    row = {k: v for k, v in row.items() if not k.endswith(".error")}
    row["mechanisms"] = ";".join(sorted(classify_mechanisms(p).mechanisms))
    table = Table([], list(row), [row], {"spec_hash": spec.spec_hash(),
                                         "version": __version__, "shape": []})
    if "svg" in args.format:
        args.format = tuple(f for f in args.format if f != "svg") or ("csv",)
    _write(table, args, "steady")
    return EXIT_OK


def _cmd_classify(spec, args) -> int:
    c = classify_mechanisms(spec.base)
    if "json" in args.format:
        print(json.dumps({"mechanisms": sorted(c.mechanisms),
                          "conditions": c.conditions}, indent=1))
    else:
        print("mechanisms:", ", ".join(sorted(c.mechanisms)) or "none")
        for k, v in c.conditions.items():
            print(f"  {'yes' if v else 'no ':<3} {k}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    from .validation import validate_paper_fixtures
    only = [int(x) for x in args.only.split(",") if x.strip()] or None
    res = validate_paper_fixtures(only=only, threads=args.threads)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        doc = [{"number": r.number, "name": r.name, "measured": r.measured,
                "target": r.target, "tolerance": r.tolerance,
                "verdict": r.verdict, "seconds": r.seconds} for r in res]
        (out / "validation.json").write_text(json.dumps(doc, indent=1))
    if args.strict and not all(r.passed for r in res):
        return EXIT_SOLVER
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "fixtures":
        print("\n".join(list_fixtures()))
        return EXIT_OK
    if args.command == "validate":
        return _cmd_validate(args)
    try:
        path = _resolve_config(args.config)
        spec = load_config(path, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stem = path.stem
    try:
        if args.command == "steady":
            return _cmd_steady(spec, args)
        if args.command == "classify":
            return _cmd_classify(spec, args)
        if args.command == "sweep":
            if not spec.axes:
                print("config error: [sweep] defines no axis", file=sys.stderr)
                return EXIT_CONFIG
            res = run_sweep(spec, args.threads)
            _write(res, args, stem)
            if res.failures:
                print(f"{len(res.failures)} grid point(s) failed; see the error columns",
                      file=sys.stderr)
            return EXIT_OK
        if args.command == "evolve":
            _write(run_evolution(spec), args, stem + "_evolve")
            return EXIT_OK
        if args.command == "spectrum":
            _write(run_spectrum(spec), args, stem + "_spectrum")
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, ParameterError, InvalidStateError) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point.

    hjrestrict run SCENARIO [--out DIR] [--refine K] [--seed N] [--format json|csv]
    hjrestrict validate SCENARIO
    hjrestrict catalog

Exit codes: 0 all checks pass, 1 a check failed, 2 hypothesis violated,
3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..errors import ConfigurationError, HJRestrictError
from ..geometry.catalog import CHARTS, MANIFOLDS
from ..hamiltonian.catalog import HAMILTONIANS
from ..hjsolver.io import write_binary, write_csv
from .experiments import run_scenario
from .scenario import EXPERIMENTS, SCHEMA, load_scenario

EXIT_OK, EXIT_FAIL, EXIT_HYPOTHESIS, EXIT_CONFIG = 0, 1, 2, 3

log = logging.getLogger("hjrestrict")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hjrestrict", description="Hamilton-Jacobi restriction/extension experiments.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver details to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write a report")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--out", default=None, help="output directory (default: scenario output.dir or .)")
    run.add_argument("--refine", type=_positive_int, default=1, help="grid refinement multiplier")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--format", choices=("json", "csv"), default=None, help="report format (default json)")

    val = sub.add_parser("validate", help="check a scenario against the schema")
    val.add_argument("scenario")

    cat = sub.add_parser("catalog", help="list built-in manifolds, charts, Hamiltonians and experiments")
    cat.add_argument("--schema", action="store_true", help="print the scenario JSON schema instead")
    return ap


def _write_outputs(report, scenario, out_dir: Path, fmt: str) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = scenario.name
    written = []
    if fmt == "csv":
        path = out_dir / f"{stem}.checks.csv"
        path.write_text(report.to_csv())
    else:
        path = out_dir / f"{stem}.report.json"
        path.write_text(report.to_json())
    written.append(path)
    snap = scenario.section("output").get("snapshots", "none")
    for key, gf in sorted(report.artifacts.items()):
        if snap == "csv":
            p = out_dir / f"{stem}.{key}.csv"
            write_csv(gf, p)
        elif snap == "binary":
            p = out_dir / f"{stem}.{key}.hjgf"
            write_binary(gf, p)
        else:
            continue
        written.append(p)
    return written


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario, refine=args.refine, seed=args.seed)
    out_cfg = scenario.section("output")
    out_dir = Path(args.out or out_cfg.get("dir", "."))
    fmt = args.format or out_cfg.get("format", "json")
    report = run_scenario(scenario)
    for path in _write_outputs(report, scenario, out_dir, fmt):
        log.info("wrote %s", path)
    print("\n".join(report.summary_lines()))
    return report.exit_code


def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    print(f"{args.scenario}: valid ({scenario.experiment})")
    return EXIT_OK


def cmd_catalog(args) -> int:
    if args.schema:
        print(json.dumps(SCHEMA, indent=2, sort_keys=True))
        return EXIT_OK
    listing = {
        "manifolds": sorted(MANIFOLDS),
        "charts": sorted(CHARTS),
        "hamiltonians": sorted(HAMILTONIANS),
        "experiments": list(EXPERIMENTS),
    }
    print(json.dumps(listing, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "validate": cmd_validate, "catalog": cmd_catalog}[args.command]
    try:
        return handler(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HJRestrictError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

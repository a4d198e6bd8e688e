"""Command-line front end: scenario files, result tables and network dumps.

Scenario files are flat ``key = value`` text; ``#`` starts a comment::

    n_wholesalers = 100
    ratio_alpha = 2
    ratio_beta = 10
    wholesaler_dist = reg        # reg | poiss | pow
    retailer_dist = poiss
    retailer_mean_in_degree = 2
    rho = 0
    ordered = false
    coupled = true
    capacity_mode = realized     # realized | theoretical
    horizontal_policy = coalition  # coalition | pairs
    replications = 1000
    seed = 42
    gap_threshold = 0.05

Missing keys take the 2:1:10 baseline defaults.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from dataclasses import fields
from pathlib import Path

from . import __version__
from .allocation import CapacityMode
from .degrees import Family
from .errors import ConfigInvalid, ParseError, SCRNError
from .experiment import (
    DEFAULT_RHO_GRID,
    TABLE1_CASES,
    Cell,
    ScenarioConfig,
    replication_rng,
    run_figure3_sweep,
    run_scenario,
    run_table1,
)
from .network import HorizontalPolicy, build_network, dump_network

log = logging.getLogger("scrn")

CSV_HEADER = (
    "case", "wholesaler_dist", "retailer_dist", "retailer_mean", "rho",
    "mean_ofr", "std_error", "replications", "rejected",
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3
EXIT_IO = 4

_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}
_CONVERTERS = {
    "n_wholesalers": int,
    "ratio_alpha": float,
    "ratio_beta": float,
    "wholesaler_dist": Family.parse,
    "retailer_dist": Family.parse,
    "retailer_mean_in_degree": float,
    "rho": float,
    "ordered": lambda v: _BOOL[v.lower()],
    "coupled": lambda v: _BOOL[v.lower()],
    "capacity_mode": CapacityMode,
    "horizontal_policy": HorizontalPolicy,
    "replications": int,
    "seed": int,
    "gap_threshold": float,
}
CONFIG_KEYS = tuple(_CONVERTERS)


def parse_config_text(text: str) -> ScenarioConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONVERTERS:
            raise ParseError("unknown key", line=lineno, field=key)
        if key in values:
            raise ParseError("duplicate key", line=lineno, field=key)
        try:
            values[key] = _CONVERTERS[key](value)
        except (ValueError, KeyError):
            raise ParseError(f"bad value {value!r}", line=lineno, field=key) from None
    return ScenarioConfig(**values)


def parse_config(path) -> ScenarioConfig:
    return parse_config_text(Path(path).read_text())


def format_config(config: ScenarioConfig) -> str:
    """Config file text that parses back to ``config``."""
    out = []
    for key in CONFIG_KEYS:
        value = getattr(config, key)
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif hasattr(value, "value"):
            text = value.value
        else:
            text = repr(value)
        out.append(f"{key} = {text}")
    return "\n".join(out) + "\n"


def config_echo(config: ScenarioConfig) -> dict:
    echo = {}
    for f in fields(config):
        if f.name not in _CONVERTERS:
            continue
        value = getattr(config, f.name)
        echo[f.name] = value.value if hasattr(value, "value") else value
    return echo


def _row(cell: Cell) -> list[str]:
    c, s = cell.config, cell.stats
    return [
        cell.case, c.wholesaler_dist.value, c.retailer_dist.value,
        f"{c.retailer_mean_in_degree:.6f}", f"{c.rho:.6f}",
        f"{s.mean_ofr:.6f}", f"{s.std_error:.6f}",
        str(s.replications_used), str(s.rejected_samples),
    ]


def render_csv(cells: list[Cell]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for cell in sorted(cells, key=lambda c: c.key):
        writer.writerow(_row(cell))
    return buf.getvalue()


def render_json(cells: list[Cell], base: ScenarioConfig, timestamp: str | None = None) -> str:
    manifest = {
        "tool": "scrn",
        "version": __version__,
        "master_seed": base.seed,
        "timestamp": timestamp,
        "config": config_echo(base),
        "rows": [
            {**dict(zip(CSV_HEADER[:3], _row(cell)[:3])),
             "retailer_mean": cell.config.retailer_mean_in_degree,
             "rho": cell.config.rho,
             "mean_ofr": round(cell.stats.mean_ofr, 6),
             "std_error": round(cell.stats.std_error, 6),
             "replications": cell.stats.replications_used,
             "rejected": cell.stats.rejected_samples,
             "config": config_echo(cell.config)}
            for cell in sorted(cells, key=lambda c: c.key)
        ],
    }
    return json.dumps(manifest, indent=2) + "\n"


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the manifest timestamp for reproducible output
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = time.gmtime(int(epoch)) if epoch else time.gmtime()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", t)


def emit_results(cells: list[Cell], fmt: str, out, base: ScenarioConfig | None = None) -> None:
    """Write a result grid as CSV or a JSON manifest to a path, or stdout for ``-``/None."""
    if fmt == "csv":
        text = render_csv(cells)
    elif fmt == "json":
        text = render_json(cells, base or cells[0].config, _timestamp())
    else:
        raise ConfigInvalid(f"unknown output format {fmt!r}")
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _parse_grid(text: str) -> tuple[float, ...]:
    try:
        grid = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigInvalid(f"bad rho grid {text!r}") from None
    if not grid:
        raise ConfigInvalid("empty rho grid")
    return grid


def _base_config(args) -> ScenarioConfig:
    config = parse_config(args.config) if getattr(args, "config", None) else ScenarioConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.reps is not None:
        changes["replications"] = args.reps
    return config.with_(**changes) if changes else config


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--reps", type=int, default=None, help="replications per cell")
    common.add_argument("--out", default="-", help="output path ('-' for stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--workers", type=int, default=1, help="worker processes per cell")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="scrn", description="Supply-chain random network agility simulator"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run one scenario file")
    p.add_argument("config")

    p = sub.add_parser("table1", parents=[common], help="degree-distribution grids, cases a-d")
    p.add_argument("--case", choices=(*TABLE1_CASES, "all"), default="all")
    p.add_argument("--config", help="base scenario file (defaults to the 2:1:10 baseline)")

    p = sub.add_parser("figure3", parents=[common], help="horizontal-link sweep")
    p.add_argument("--grid", type=_parse_grid, default=DEFAULT_RHO_GRID,
                   help="comma-separated rho values (default 0,0.1,...,1)")
    p.add_argument("--config", help="base scenario file (defaults to the 2:1:10 baseline)")

    p = sub.add_parser("dump-network", parents=[common], help="write one sampled network")
    p.add_argument("config")
    p.add_argument("--index", type=int, default=0, help="replication index to sample")
    return parser


def _progress(cell: Cell) -> None:
    log.info("%s %s/%s mean=%g rho=%g  ofr=%.4f se=%.4f", cell.case,
             cell.config.wholesaler_dist.value, cell.config.retailer_dist.value,
             cell.config.retailer_mean_in_degree, cell.config.rho,
             cell.stats.mean_ofr, cell.stats.std_error)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        base = _base_config(args)
        if args.command == "run":
            cells = [Cell("run", base, run_scenario(base, args.workers))]
        elif args.command == "table1":
            cases = TABLE1_CASES if args.case == "all" else (args.case,)
            cells = run_table1(base, cases, workers=args.workers, progress=_progress)
        elif args.command == "figure3":
            cells = run_figure3_sweep(base, args.grid, workers=args.workers, progress=_progress)
        else:
            network = build_network(base, replication_rng(base.seed, args.index))
            if args.out in (None, "-"):
                dump_network(network, sys.stdout)
            else:
                with open(args.out, "w") as fh:
                    dump_network(network, fh)
            return EXIT_OK
        emit_results(cells, args.format, args.out, base)
    except (ParseError, ConfigInvalid) as exc:
        print(f"scrn: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SCRNError as exc:
        print(f"scrn: simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except OSError as exc:
        print(f"scrn: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

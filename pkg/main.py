"""Command-line entry point.

    uv run main.py verify --suite all --seed 42
    uv run main.py price --t 1 --strike 0 1 2 --nu 0
    uv run main.py constants --alpha 0.5 1.0 1.5
    uv run main.py simulate --process stable --alpha 1.2 --t 2
    uv run main.py report runs/reports.json other/reports.json
    uv run main.py browse
"""

import argparse
import asyncio
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

import analytic
import bm_engine
import stable_engine
from browser import ReportBrowser
from config import (
    CONSTANTS_NAME,
    DEFAULT_DT,
    DEFAULT_MAX_STEPS,
    DEFAULT_PRICE_PATHS,
    DEFAULT_SIMULATE_PATHS,
    FLOAT_DIGITS,
    PRICE_NAME,
    REPORTS_NAME,
    SIMULATE_NAME,
    SUMMARY_NAME,
    ExitStatus,
    ProcessKind,
    RunConfig,
    Verdict,
    load_config,
    parse_override,
)
from database import DatabaseConnection
from errors import ConfigError, DomainError, QuadratureError, StoreError, UnknownExperimentError
from experiments import REGISTRY, run_suite, stream_id_for
from models import ReportStore, config_payload
from samplers import RngStream
from verify import ExperimentReport, summarize

logger = logging.getLogger(__name__)

console = Console()

VERDICT_STYLES = {Verdict.PASS: "green", Verdict.FAIL: "bold red", Verdict.INCONCLUSIVE: "yellow"}

PRICE_COLUMNS = ["t", "K", "nu", "price", "stderr", "n_paths", "seed", "price_hex", "stderr_hex"]
SIMULATE_COLUMNS = ["process", "alpha", "t", "path", "theta", "clock", "status", "seed", "theta_hex", "clock_hex"]
CONSTANTS_COLUMNS = [
    "alpha",
    "r_alpha",
    "k_alpha",
    "ratio",
    "expected_ratio",
    "quad_error",
    "k_alpha_hex",
    "r_alpha_hex",
]


def fmt(value: float) -> str:
    """Float at the printed precision; empty for missing values."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{value:.{FLOAT_DIGITS}g}"


def hexed(value: float) -> str:
    return "" if value is None else float(value).hex()


def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def exit_status(reports: Sequence[ExperimentReport]) -> int:
    """0 when every verdict passed, 4 on any failure, 3 when something is inconclusive."""
    verdicts = {report.verdict for report in reports}
    if Verdict.FAIL in verdicts:
        return ExitStatus.FAILED
    if Verdict.INCONCLUSIVE in verdicts:
        return ExitStatus.INCONCLUSIVE
    return ExitStatus.OK


def write_csv(path: Path, columns: List[str], rows: List[Dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    logger.info("wrote %d rows to %s", len(rows), path)


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)


def reports_table(reports: Sequence[ExperimentReport], title: str) -> Table:
    table = Table(title=title)
    for column in ("Experiment", "Verdict", "Estimate", "Target", "Tolerance", "n", "Runtime"):
        table.add_column(column, justify="left" if column in ("Experiment", "Verdict") else "right")
    for report in reports:
        style = VERDICT_STYLES[report.verdict]
        table.add_row(
            report.name,
            f"[{style}]{report.verdict}[/]",
            fmt(report.estimate),
            fmt(report.target),
            fmt(report.tolerance),
            str(report.n),
            f"{report.runtime:.1f}s",
        )
    counts = summarize(reports)
    table.caption = ", ".join(f"{counts[str(verdict)]} {verdict}" for verdict in Verdict.values())
    return table


def record(config: RunConfig, db_path: Optional[Path], command: str, reports: Sequence[ExperimentReport]) -> int:
    store = ReportStore(DatabaseConnection(db_path or config.db_path))
    return asyncio.run(store.record_run(command, config, reports))


def cmd_verify(args: argparse.Namespace, config: RunConfig) -> int:
    reports = run_suite(config)
    write_json(config.output_dir / REPORTS_NAME, [report.to_payload() for report in reports])
    console.print(reports_table(reports, f"verify (seed {config.seed})"))
    run_id = record(config, args.db, "verify", reports)
    console.print(f"stored as run {run_id}")
    return exit_status(reports)


def merge_report_files(paths: Sequence[Path], stored: Sequence[ExperimentReport] = ()) -> List[ExperimentReport]:
    """Stored reports overlaid by reports from reports.json files; later entries win per experiment."""
    merged: Dict[str, ExperimentReport] = {report.name: report for report in stored}
    for path in paths:
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise StoreError(f"Cannot read reports from {path}: {e}")
        entries = payload if isinstance(payload, list) else payload.get("reports", [])
        for entry in entries:
            try:
                report = ExperimentReport.from_payload(entry)
            except DomainError as e:
                raise StoreError(f"{path}: {e}")
            merged[report.name] = report
    return [merged[name] for name in sorted(merged)]


def load_stored_reports(db_path: Path, run_ids: Sequence[int]) -> List[ExperimentReport]:
    store = ReportStore(DatabaseConnection(db_path))
    reports: List[ExperimentReport] = []
    for run_id in run_ids:
        reports.extend(asyncio.run(store.load_experiment_reports(run_id)))
    return reports


def cmd_report(args: argparse.Namespace, config: RunConfig) -> int:
    if not args.files and not args.run:
        raise ConfigError("report needs reports.json files or --run ids")
    stored = load_stored_reports(args.db or config.db_path, args.run) if args.run else []
    reports = merge_report_files(args.files, stored)
    if not reports:
        console.print("[yellow]no reports found[/]")
        return ExitStatus.INCONCLUSIVE
    summary = {
        "sources": [f"run:{run_id}" for run_id in args.run or []] + [str(path) for path in args.files],
        "summary": summarize(reports),
        "reports": [report.to_payload() for report in reports],
    }
    write_json(config.output_dir / SUMMARY_NAME, summary)
    console.print(reports_table(reports, f"report ({len(summary['sources'])} sources)"))
    record(config, args.db, "report", reports)
    return exit_status(reports)


def cmd_price(args: argparse.Namespace, config: RunConfig) -> int:
    n_paths = config.n_paths or DEFAULT_PRICE_PATHS
    dt = config.dt or DEFAULT_DT
    stream = RngStream(config.seed, stream_id_for("price"))
    rows = []
    table = Table(title=f"Asian call (paths {n_paths}, seed {config.seed})")
    for column in PRICE_COLUMNS[:5]:
        table.add_column(column, justify="right")
    for i, (t, nu) in enumerate((t, nu) for t in args.t for nu in args.nu):
        prices = bm_engine.asian_call_grid(t, args.strike, nu, n_paths, dt, stream.substream(i).generator())
        for strike, price in zip(args.strike, prices):
            rows.append(
                {
                    "t": fmt(t),
                    "K": fmt(strike),
                    "nu": fmt(nu),
                    "price": fmt(price.mean),
                    "stderr": fmt(price.stderr),
                    "n_paths": 2 * price.n,
                    "seed": config.seed,
                    "price_hex": hexed(price.mean),
                    "stderr_hex": hexed(price.stderr),
                }
            )
            table.add_row(*(rows[-1][column] for column in PRICE_COLUMNS[:5]))
    write_csv(config.output_dir / PRICE_NAME, PRICE_COLUMNS, rows)
    console.print(table)
    return ExitStatus.OK


def cmd_constants(args: argparse.Namespace, config: RunConfig) -> int:
    rows = []
    table = Table(title="Winding constants")
    for column in CONSTANTS_COLUMNS[:6]:
        table.add_column(column, justify="right")
    for alpha in args.alpha:
        constants = analytic.cone_constants(alpha, args.tol)
        rows.append(
            {
                "alpha": fmt(alpha),
                "r_alpha": fmt(constants.r_alpha),
                "k_alpha": fmt(constants.k_alpha),
                "ratio": fmt(constants.ratio),
                "expected_ratio": fmt(constants.expected_ratio),
                "quad_error": fmt(constants.quad_error),
                "k_alpha_hex": hexed(constants.k_alpha),
                "r_alpha_hex": hexed(constants.r_alpha),
            }
        )
        table.add_row(*(rows[-1][column] for column in CONSTANTS_COLUMNS[:6]))
    write_csv(config.output_dir / CONSTANTS_NAME, CONSTANTS_COLUMNS, rows)
    console.print(table)
    return ExitStatus.OK


def cmd_simulate(args: argparse.Namespace, config: RunConfig) -> int:
    n_paths = config.n_paths or DEFAULT_SIMULATE_PATHS
    dt = config.dt or DEFAULT_DT
    gen = RngStream(config.seed, stream_id_for(f"simulate.{args.process}")).generator()
    t = args.t[0]
    if args.process == ProcessKind.BM:
        result = bm_engine.winding_driver(t, n_paths, dt, gen, args.max_steps)
        alpha = 2.0
        status = np.where(result.exhausted, "exhausted", "ok")
    else:
        alpha = args.alpha[0]
        result = stable_engine.stable_windings_batch(alpha, n_paths, dt, gen, clock_target=t, max_steps=args.max_steps)
        status = np.where(result.rejected, "rejected", np.where(result.exhausted, "exhausted", "ok"))
    rows = [
        {
            "process": str(args.process),
            "alpha": fmt(alpha),
            "t": fmt(t),
            "path": i,
            "theta": fmt(float(result.theta[i])),
            "clock": fmt(float(result.clock[i])),
            "status": status[i],
            "seed": config.seed,
            "theta_hex": "" if math.isnan(result.theta[i]) else hexed(result.theta[i]),
            "clock_hex": "" if math.isnan(result.clock[i]) else hexed(result.clock[i]),
        }
        for i in range(n_paths)
    ]
    write_csv(config.output_dir / SIMULATE_NAME, SIMULATE_COLUMNS, rows)
    kept = int(np.sum(status == "ok"))
    console.print(f"{kept} of {n_paths} paths finished; written to {config.output_dir / SIMULATE_NAME}")
    return ExitStatus.OK if kept else ExitStatus.INCONCLUSIVE


def cmd_browse(args: argparse.Namespace, config: RunConfig) -> int:
    ReportBrowser(ReportStore(DatabaseConnection(args.db or config.db_path))).run()
    return ExitStatus.OK


COMMANDS = {
    "verify": cmd_verify,
    "report": cmd_report,
    "price": cmd_price,
    "constants": cmd_constants,
    "simulate": cmd_simulate,
    "browse": cmd_browse,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key=value config file; flags override its values")
    common.add_argument("--seed", type=int, help="master seed (64-bit unsigned)")
    common.add_argument("--paths", type=int, help="Monte Carlo paths; experiments use their own defaults when unset")
    common.add_argument("--dt", type=float, help="time step")
    common.add_argument("--parallelism", type=int, help="experiments run concurrently")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--db", type=Path, help="results database (default: <out>/runs.db)")
    common.add_argument(
        "--set", action="append", default=[], metavar="NAME=VALUE", help="experiment parameter override"
    )
    common.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("-v", "--verbose", action="store_true", help="same as --log-level INFO")

    parser = argparse.ArgumentParser(
        prog="cone-windings",
        description="Simulate planar windings and exponential functionals and verify them against closed forms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", parents=[common], help="run registered experiments")
    verify.add_argument(
        "--suite",
        action="append",
        help=f"experiment names or tags, comma separated ('all' or one of {', '.join(sorted(REGISTRY))})",
    )

    report = sub.add_parser("report", parents=[common], help="merge prior reports.json files into one summary")
    report.add_argument("files", nargs="*", type=Path)
    report.add_argument("--run", type=int, action="append", help="stored run id to include; repeatable")

    price = sub.add_parser("price", parents=[common], help="Asian call prices over a (t, K, nu) grid")
    price.add_argument("--t", type=float, nargs="+", default=[1.0])
    price.add_argument("--strike", type=float, nargs="+", default=[0.0])
    price.add_argument("--nu", type=float, nargs="+", default=[0.0])

    constants = sub.add_parser("constants", parents=[common], help="r(alpha) and k(alpha) table")
    constants.add_argument("--alpha", type=float, nargs="+", default=[1.0])
    constants.add_argument("--tol", type=float, default=1e-6, help="relative quadrature tolerance")

    simulate = sub.add_parser("simulate", parents=[common], help="per-path winding statistics as CSV")
    simulate.add_argument("--process", type=ProcessKind, choices=ProcessKind.values(), default=ProcessKind.BM)
    simulate.add_argument("--alpha", type=float, nargs=1, default=[1.0])
    simulate.add_argument("--t", type=float, nargs=1, default=[1.0], help="horizon (bm) or clock target (stable)")
    simulate.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)

    sub.add_parser("browse", parents=[common], help="browse stored runs")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file values with the command-line flags applied on top."""
    config = load_config(args.config) if args.config else RunConfig()
    suite = None
    if getattr(args, "suite", None):
        suite = [tag.strip() for entry in args.suite for tag in entry.split(",") if tag.strip()]
    return config.merged(
        seed=args.seed,
        n_paths=args.paths,
        dt=args.dt,
        parallelism=args.parallelism,
        output_dir=args.out,
        suite=suite,
        overrides=dict(parse_override(text) for text in args.set) if args.set else None,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging("INFO" if args.verbose else args.log_level)

    try:
        config = resolve_config(args)
        logger.debug("configuration: %s", config_payload(config))
        return COMMANDS[args.command](args, config)
    except (ConfigError, UnknownExperimentError, DomainError, QuadratureError) as e:
        console.print(f"[bold red]error:[/] {e}")
        parser.print_usage(sys.stderr)
        return ExitStatus.USAGE
    except (StoreError, OSError) as e:
        console.print(f"[bold red]I/O error:[/] {e}")
        return ExitStatus.IO_ERROR


if __name__ == "__main__":
    sys.exit(main())

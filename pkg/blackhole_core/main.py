"""Command-line entrypoint: run one scenario and write its artifacts."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

if __package__ in {None, ''}:
    sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from blackhole_core.app.compat.dotenv import load_env_file
from blackhole_core.app.services.reports import emit_report
from blackhole_core.app.services.scenarios import SCENARIOS, build_config, run_scenario
from blackhole_core.runtime.guard import RunGuard


def _load_env() -> bool:
    """Load BLACKHOLE_ENV_FILE (or ./.env) when python-dotenv is available."""

    return load_env_file(os.environ.get("BLACKHOLE_ENV_FILE"))


def _setup_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(message)s",
    )


def _parse_args(argv: Optional[Iterable[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Targeted blackhole attack emulation on a SWaT-like plant")
    parser.add_argument("--config", type=Path, help="Flat key = value scenario file")
    parser.add_argument("--seed", type=int, help="Seed of the simulation's random generator")
    parser.add_argument("--scenario", choices=SCENARIOS, help="Pipeline to run")
    parser.add_argument("--drop-duration-s", type=float, help="How long the sniper drops matching packets")
    parser.add_argument("--out", help="Output directory for the CSV artifacts")
    parser.add_argument("--profile-dir", help="Reuse lts.csv/id_map.csv from an earlier profile run")
    parser.add_argument(
        "--emit-ground-truth",
        action="store_true",
        default=None,
        help="Fill the critical and dropped_by_adversary columns of trace.csv",
    )
    parser.add_argument("--no-plot", action="store_true", help="Skip levels.png")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    return parser.parse_args(list(argv) if argv is not None else None)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "seed": args.seed,
        "scenario": args.scenario,
        "drop_duration_s": args.drop_duration_s,
        "out": args.out,
        "profile_dir": args.profile_dir,
        "emit_ground_truth": args.emit_ground_truth,
    }


def run(argv: Optional[Iterable[str]] = None) -> int:
    args = _parse_args(argv)
    _setup_logging(args.verbose)
    _load_env()

    guard = RunGuard()
    config = guard.execute_job(
        "config",
        lambda: build_config(config_path=args.config, overrides=_overrides(args), environ=os.environ),
    )
    if config is not None:
        report = guard.execute_job("scenario", lambda: run_scenario(config))
        if report is not None:
            guard.execute_job(
                "report",
                lambda: emit_report(
                    report,
                    Path(config.out),
                    emit_ground_truth=config.emit_ground_truth,
                    plot=not args.no_plot,
                ),
            )

    if guard.has_errors:
        print(guard.error_line(), file=sys.stderr)
        return 1
    return 0


def main() -> int:
    return run()


if __name__ == "__main__":
    sys.exit(main())

"""
app/cli.py

    python -m app.cli {coverage,compare,failure-modes,run} [flaggor]

Flaggor skriver över konfigurationsfilen, som i sin tur skriver över
AUDIT_BAI_*-inställningarna. Exitkoder: 0 ok, 2 valideringsfel, 3 I/O-fel.
"""

import argparse
import logging
import sys
from typing import Any, Optional

from pydantic import ValidationError

from app.config import settings
from app.services.config_loader import ExperimentConfigError, load_experiment_config
from app.services.export import emit
from app.services.harness import run_experiment

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3

COMMANDS = {
    "coverage": "coverage",
    "compare": "compare",
    "failure-modes": "failure_modes",
    "run": "run",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="audit-bai",
        description="Best-arm identification med domarpoäng och propensitetsloggade audits.",
    )
    parser.add_argument("command", choices=list(COMMANDS))
    parser.add_argument("--config", help="key=value-fil med ExperimentConfig-fält")
    parser.add_argument("--trials", type=int, dest="n_trials", help="försök per cell")
    parser.add_argument("--seed", type=int, dest="base_seed", help="bas-seed (försök i får seed+i)")
    parser.add_argument("--delta", dest="deltas", help="ett eller flera delta, kommaseparerade")
    parser.add_argument("--policy", dest="policies", help="en eller flera policyer, kommaseparerade")
    parser.add_argument("--gap", dest="gaps", help="gap för compare, kommaseparerade")
    parser.add_argument("--env", dest="environment", help="inbyggd miljö eller sökväg till miljöfil")
    parser.add_argument("--out", dest="out_dir", help="utdatakatalog")
    parser.add_argument("--workers", type=int, help="antal processer")
    parser.add_argument("--format", choices=["csv", "json"])
    parser.add_argument("--dump-logs", action="store_true", default=None,
                        help="skriv TrialResult + SampleRecord per försök som JSONL")
    parser.add_argument("-v", "--verbose", action="store_true", help="DEBUG-loggning")
    return parser


def cli_overrides(args: argparse.Namespace) -> dict[str, Any]:
    keys = (
        "n_trials", "base_seed", "deltas", "policies", "gaps", "environment",
        "out_dir", "workers", "format", "dump_logs",
    )
    overrides = {k: getattr(args, k) for k in keys if getattr(args, k) is not None}
    overrides["experiment"] = COMMANDS[args.command]
    return overrides


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else settings.log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        cfg = load_experiment_config(args.config, cli_overrides(args), settings)
        trials = [] if cfg.dump_logs else None
        report = run_experiment(cfg, trials)
        paths = emit(report, cfg.out_dir, cfg.format, trials)
    except (ExperimentConfigError, ValidationError, ValueError) as e:
        logger.error(f"Valideringsfel: {e}")
        return EXIT_VALIDATION
    except OSError as e:
        logger.error(f"I/O-fel: {e}")
        return EXIT_IO

    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

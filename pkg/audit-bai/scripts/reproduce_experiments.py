"""
Kör hela experimentsviten med standardinställningar och skriver en CSV
per experiment till results/ (eller --out).

    python scripts/reproduce_experiments.py --workers 4
"""

import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from app.services.config_loader import load_experiment_config  # noqa: E402
from app.services.export import emit  # noqa: E402
from app.services.harness import run_experiment  # noqa: E402

logger = logging.getLogger("reproduce_experiments")

SUITE = [
    {"experiment": "coverage", "deltas": "0.01,0.05,0.1,0.2", "mus": "0.5"},
    {"experiment": "compare"},
    {"experiment": "failure_modes"},
]


def main() -> int:
    parser = argparse.ArgumentParser(description="Reproducera täcknings-, jämförelse- och felfallsexperimenten.")
    parser.add_argument("--out", default="results")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    for overrides in SUITE:
        cfg = load_experiment_config(
            overrides={**overrides, "out_dir": args.out, "workers": args.workers, "base_seed": args.seed}
        )
        report = run_experiment(cfg)
        for path in emit(report, cfg.out_dir, "csv"):
            logger.info(f"{cfg.experiment}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

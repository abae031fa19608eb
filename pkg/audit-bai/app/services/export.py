"""
app/services/export.py

Skriver rapporten som CSV eller JSON med samma kolumner och samma
avrundade värden, och valfritt försöksloggarna som JSONL.
"""

import logging
from pathlib import Path
from typing import Literal, Optional

from app.models.experiment import REPORT_COLUMNS, AggregateReport
from app.models.trial import TrialLog

logger = logging.getLogger(__name__)

FLOAT_DECIMALS = 6


def report_frame(report: AggregateReport):
    """Rapporten som DataFrame, avrundad en gång så att CSV och JSON delar värden."""
    frame = report.to_frame()
    numeric = frame.select_dtypes("number").columns
    frame[numeric] = frame[numeric].round(FLOAT_DECIMALS)
    return frame[REPORT_COLUMNS]


def emit(
    report: AggregateReport,
    out_dir: str,
    fmt: Literal["csv", "json"] = "csv",
    trials: Optional[list[TrialLog]] = None,
) -> list[Path]:
    if not report.rows:
        raise ValueError(f"Rapporten för '{report.experiment}' är tom, inget att skriva")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frame = report_frame(report)
    written: list[Path] = []

    if fmt == "csv":
        path = out / f"{report.experiment}.csv"
        frame.to_csv(path, index=False, float_format=f"%.{FLOAT_DECIMALS}f", na_rep="")
    elif fmt == "json":
        path = out / f"{report.experiment}.json"
        frame.to_json(path, orient="records", indent=2, double_precision=FLOAT_DECIMALS + 4)
    else:
        raise ValueError(f"Okänt format: {fmt}")
    written.append(path)
    logger.info(f"Skrev {len(frame)} rader till {path}")

    if trials is not None:
        log_path = out / f"{report.experiment}_trials.jsonl"
        with log_path.open("w", encoding="utf-8") as fh:
            for entry in trials:
                fh.write(entry.model_dump_json() + "\n")
        written.append(log_path)
        logger.info(f"Skrev {len(trials)} försöksloggar till {log_path}")

    return written

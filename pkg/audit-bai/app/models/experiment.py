"""
app/models/experiment.py

Experimentkonfiguration och aggregerad rapport.

Konfigurationsfilerna är ren key=value-text, så listfält tar emot
kommaseparerade strängar ("0.01,0.05") likaväl som riktiga listor.
"""

from typing import Literal, Optional

import pandas as pd
from pydantic import BaseModel, Field, field_validator, model_validator

from app.models.policy import PolicyKind


ExperimentKind = Literal["coverage", "compare", "failure_modes", "run"]

# Fast header, ordningen är en del av CSV-kontraktet
REPORT_COLUMNS = [
    "experiment", "config_id", "policy", "delta", "gap", "seed_base", "n_trials",
    "mean_cost", "sd_cost", "audit_rate", "accuracy", "coverage", "ci_low", "ci_high",
]

# Standardantal försök per experiment när n_trials inte anges
DEFAULT_TRIALS = {"coverage": 1000, "compare": 20, "failure_modes": 30, "run": 1}


def _split_list(value):
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return value


# ── Input ─────────────────────────────────────────────────────────────────────

class ExperimentConfig(BaseModel):
    experiment: ExperimentKind = "run"
    n_trials: Optional[int] = Field(None, ge=1)
    base_seed: int = 42
    environment: str = "default"     # inbyggt namn (default, heterogeneous, indistinguishable_a|b) eller sökväg
    policies: Optional[list[PolicyKind]] = None     # None → experimentets standardlista
    deltas: list[float] = Field(default_factory=lambda: [0.05])
    gaps: list[float] = Field(default_factory=lambda: [0.10, 0.15, 0.20])
    mus: list[float] = Field(default_factory=lambda: [0.3, 0.5, 0.7])
    sample_sizes: list[int] = Field(default_factory=lambda: [50, 100, 200, 500])

    rho: float = Field(0.1, gt=0, le=1)
    pi_min: float = Field(0.05, gt=0, le=1)
    c_f: float = Field(1.0, gt=0)
    c_y: float = Field(20.0, gt=0)
    t_max: int = Field(20_000, ge=1)
    n_init: int = Field(5, ge=1)
    init_mode: Literal["warm", "literal"] = "warm"
    stratify_by_score: bool = False

    out_dir: str = "results"
    format: Literal["csv", "json"] = "csv"
    workers: int = Field(1, ge=1)
    dump_logs: bool = False

    model_config = {"extra": "forbid"}

    @field_validator("policies", "deltas", "gaps", "mus", "sample_sizes", mode="before")
    @classmethod
    def _comma_lists(cls, value):
        return _split_list(value)

    @field_validator("policies")
    @classmethod
    def _check_policies(cls, value: Optional[list[str]]) -> Optional[list[str]]:
        if value is not None and not value:
            raise ValueError("Policylistan är tom, ange minst en policy")
        return value

    @field_validator("deltas")
    @classmethod
    def _check_deltas(cls, value: list[float]) -> list[float]:
        if not value:
            raise ValueError("Minst ett delta krävs")
        if any(not 0.0 < d < 1.0 for d in value):
            raise ValueError(f"Alla delta måste ligga i (0,1): {value}")
        return value

    @field_validator("sample_sizes")
    @classmethod
    def _check_sizes(cls, value: list[int]) -> list[int]:
        if not value or any(n < 1 for n in value):
            raise ValueError(f"Stickprovsstorlekarna måste vara positiva: {value}")
        return value

    @model_validator(mode="after")
    def _check_budget(self):
        if self.rho < self.pi_min:
            raise ValueError(f"rho={self.rho} är lägre än pi_min={self.pi_min}")
        return self

    @property
    def trials(self) -> int:
        return self.n_trials if self.n_trials is not None else DEFAULT_TRIALS[self.experiment]

    def seed_for(self, trial_id: int) -> int:
        return self.base_seed + trial_id


# ── Output ────────────────────────────────────────────────────────────────────

class ReportRow(BaseModel):
    experiment: str
    config_id: str
    policy: str = ""
    delta: Optional[float] = None
    gap: Optional[float] = None
    seed_base: int
    n_trials: int
    mean_cost: Optional[float] = None
    sd_cost: Optional[float] = None
    audit_rate: Optional[float] = None
    accuracy: Optional[float] = Field(None, ge=0, le=1)
    coverage: Optional[float] = Field(None, ge=0, le=1)
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None


class AggregateReport(BaseModel):
    experiment: str
    rows: list[ReportRow] = Field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [r.model_dump() for r in self.rows], columns=REPORT_COLUMNS
        )

"""
app/models/trial.py

Loggposter och resultat för en enskild BAI-körning.

SampleRecord är det som faktiskt loggas per dragning. Propensiteten π
sparas som den realiserades, den härleds aldrig om i efterhand.
"""

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from app.models.environment import CostModel


# ── Loggpost ─────────────────────────────────────────────────────────────────

class SampleRecord(BaseModel):
    t: int = Field(ge=0)
    arm_id: int = Field(ge=0)
    context: str = "default"
    f: float = Field(ge=0, le=1)
    pi: float = Field(ge=0, le=1)
    audited: bool
    y: Optional[float] = Field(None, ge=0, le=1)
    cost: float = Field(0.0, ge=0)
    eligible: bool = True     # False bara för never-baslinjen

    @model_validator(mode="after")
    def _label_iff_audited(self):
        if self.audited and self.y is None:
            raise ValueError(f"Runda {self.t}: auditerad post saknar etikett y")
        if not self.audited and self.y is not None:
            raise ValueError(f"Runda {self.t}: etikett y finns men posten är inte auditerad")
        if self.audited and self.pi <= 0:
            raise ValueError(f"Runda {self.t}: auditerad post med pi={self.pi}")
        return self


# ── Motorkonfiguration ───────────────────────────────────────────────────────

class EngineConfig(BaseModel):
    delta: float = Field(0.05, gt=0, lt=1)
    pi_min: float = Field(0.05, gt=0, le=1)
    rho: float = Field(0.1, gt=0, le=1)
    cost_model: CostModel = Field(default_factory=CostModel)
    t_max: int = Field(20_000, ge=1)
    n_init: int = Field(5, ge=1)
    init_mode: Literal["warm", "literal"] = "warm"
    tie_break: Literal["lowest_index"] = "lowest_index"
    allow_baseline: bool = False    # tillåt never-policyn (utan stopp)

    def check_arms(self, num_arms: int) -> None:
        if num_arms < 2:
            raise ValueError(f"Minst två armar krävs, fick {num_arms}")
        if self.t_max < num_arms * self.n_init:
            raise ValueError(
                f"t_max={self.t_max} räcker inte till initieringen "
                f"({num_arms} armar × {self.n_init} dragningar)"
            )


# ── Resultat ─────────────────────────────────────────────────────────────────

class TrialResult(BaseModel):
    trial_id: int = 0
    seed: int
    policy: str
    selected_arm: int
    stop_round: int
    n_pulls: int
    n_audits: int
    audit_rate: float
    total_cost: float
    correct: Optional[bool] = None     # None när bästa armen inte är unik
    termination: Literal["stopped", "budget_exhausted"]
    final_estimates: list[float] = Field(default_factory=list)


class TrialLog(BaseModel):
    """En rad i trials.jsonl: resultatet plus hela dragningsloggen."""
    config_id: str
    result: TrialResult
    samples: list[SampleRecord] = Field(default_factory=list)

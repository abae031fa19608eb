from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


PolicyKind = Literal[
    "uniform",
    "price_of_precision",
    "uncertainty_weighted",
    "neyman",
    "oracle",
    "always",
    "never",
]


class AuditPolicyConfig(BaseModel):
    kind: PolicyKind = "uniform"
    rho: float = Field(0.1, gt=0, le=1)         # målnivå för genomsnittlig auditsannolikhet
    pi_min: float = Field(0.05, gt=0, le=1)     # positivitetsgolv
    warmup_pulls: int = Field(10, ge=0)         # auditerade sampel innan plug-in litas på
    stratify_by_score: bool = False             # 4 lika breda F-bins per arm
    pop_scale: float = Field(1.0, gt=0)         # skalning för price_of_precision
    oracle_g: Optional[list[float]] = None      # sanna g_k, bara för kind="oracle"

    model_config = {"extra": "ignore"}

    @model_validator(mode="after")
    def _check_budget(self):
        if self.kind in ("always", "never"):
            return self
        if self.rho < self.pi_min:
            raise ValueError(
                f"rho={self.rho} är lägre än pi_min={self.pi_min}: budgeten är ogenomförbar"
            )
        return self

    @property
    def label(self) -> str:
        return self.kind

"""
app/models/environment.py

Generativa beskrivningar av en BAI-instans: armarnas sanna medelvärden,
domarens bias, brusnivå, kontextsegment och kostnadsmodell.

Y är alltid i [0,1] och domarens poäng F klipps till [0,1].
"""

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


# ── Kostnader ────────────────────────────────────────────────────────────────

class CostModel(BaseModel):
    c_f: float = Field(1.0, gt=0)     # per domarobservation
    c_y: float = Field(20.0, gt=0)    # per audit (mänsklig granskning)


# ── Diskret simultanfördelning över (F, Y) ───────────────────────────────────

class JointTableEntry(BaseModel):
    f: float = Field(ge=0, le=1)
    y: float = Field(ge=0, le=1)
    p: float = Field(ge=0, le=1)


class JointTableInstance(BaseModel):
    """En tabell per arm. Sannolikheterna summerar till 1 per arm."""
    name: str = "joint_table"
    arms: list[list[JointTableEntry]]

    @model_validator(mode="after")
    def _check_probabilities(self):
        for k, table in enumerate(self.arms):
            total = sum(e.p for e in table)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"Arm {k}: sannolikheterna summerar till {total}, inte 1")
        return self

    @property
    def num_arms(self) -> int:
        return len(self.arms)


# ── Kontextsegment ───────────────────────────────────────────────────────────

class ContextSegment(BaseModel):
    """
    Ett kontextsegment x. b_k(x) = bias[k] + bias_shift[k].
    noise_scale multiplicerar noise_sd inom segmentet.
    """
    name: str
    weight: float = Field(gt=0)
    bias_shift: Optional[list[float]] = None
    noise_scale: float = Field(1.0, ge=0)


# ── Instans ──────────────────────────────────────────────────────────────────

class EnvironmentSpec(BaseModel):
    name: str = "custom"
    arm_means: list[float] = Field(default_factory=list)
    bias: list[float] = Field(default_factory=list)   # b_k per arm
    noise_sd: float = Field(0.15, ge=0)
    outcome_model: Literal["bernoulli", "beta", "joint_table"] = "bernoulli"
    beta_concentration: float = Field(50.0, gt=0)      # bara för outcome_model="beta"
    segments: list[ContextSegment] = Field(default_factory=list)
    joint_table: Optional[JointTableInstance] = None

    @model_validator(mode="after")
    def _check_shape(self):
        if self.outcome_model == "joint_table":
            if self.joint_table is None:
                raise ValueError("outcome_model='joint_table' kräver joint_table")
            if not self.arm_means:
                self.arm_means = [
                    sum(e.p * e.y for e in table) for table in self.joint_table.arms
                ]
            return self

        if not self.arm_means:
            raise ValueError("arm_means saknas")
        if any(not 0.0 <= m <= 1.0 for m in self.arm_means):
            raise ValueError(f"Alla armmedelvärden måste ligga i [0,1]: {self.arm_means}")
        if not self.bias:
            self.bias = [0.0] * len(self.arm_means)
        if len(self.bias) != len(self.arm_means):
            raise ValueError(
                f"bias har {len(self.bias)} värden men det finns {len(self.arm_means)} armar"
            )
        for seg in self.segments:
            if seg.bias_shift is not None and len(seg.bias_shift) != len(self.arm_means):
                raise ValueError(f"Segment '{seg.name}': bias_shift har fel längd")
        return self

    @property
    def num_arms(self) -> int:
        return len(self.arm_means)

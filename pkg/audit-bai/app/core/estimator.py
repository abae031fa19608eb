"""
app/core/estimator.py

Prediction-powered skattning av armmedelvärden från adaptivt insamlade,
propensitetsloggade sampel:

    θ̂_k = μ̂_F,k + μ̂_R,k,   R_s = A_s/π_s · (Y_s − F_s)

Tillståndet är summor, inte samplelistor. O(1) per uppdatering.
Harnessen sparar de fullständiga SampleRecord-loggarna separat.
"""

from dataclasses import dataclass, replace

from app.core.boundary import CsBudget, width_proxy, width_residual
from app.models.trial import SampleRecord


# ── Tillstånd ────────────────────────────────────────────────────────────────

@dataclass(frozen=True, slots=True)
class ArmState:
    arm_id: int
    n_pulls: int = 0
    sum_f: float = 0.0
    sum_r: float = 0.0
    sum_r_sq: float = 0.0
    n_audits: int = 0

    @property
    def mu_f(self) -> float:
        return self.sum_f / self.n_pulls if self.n_pulls else 0.0

    @property
    def mu_r(self) -> float:
        return self.sum_r / self.n_pulls if self.n_pulls else 0.0

    @property
    def audit_rate(self) -> float:
        return self.n_audits / self.n_pulls if self.n_pulls else 0.0


@dataclass(frozen=True, slots=True)
class ConfidenceInterval:
    lower: float
    upper: float
    w_f: float = 0.0
    w_r: float = 0.0

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower


# Före första dragningen: hela utfallsrummet
UNBOUNDED = ConfidenceInterval(0.0, 1.0)


# ── Operationer ──────────────────────────────────────────────────────────────

def check_positivity(rec: SampleRecord, pi_min: float) -> None:
    """Avvisar poster loggade under golvet. Vi klampar aldrig i efterhand."""
    if rec.eligible and rec.pi < pi_min:
        raise PositivityViolation(
            f"Runda {rec.t}, arm {rec.arm_id}: loggad pi={rec.pi:.4g} < pi_min={pi_min:.4g}"
        )


def update(state: ArmState, rec: SampleRecord) -> ArmState:
    if rec.arm_id != state.arm_id:
        raise RecordMismatchError(
            f"Post för arm {rec.arm_id} skickades till arm {state.arm_id}"
        )
    if rec.eligible and rec.pi <= 0:
        raise PositivityViolation(
            f"Runda {rec.t}, arm {rec.arm_id}: giltig post med pi={rec.pi}, kräver pi > 0"
        )

    if not rec.audited:
        return replace(state, n_pulls=state.n_pulls + 1, sum_f=state.sum_f + rec.f)

    if rec.y is None:
        raise RecordMismatchError(f"Runda {rec.t}: auditerad post saknar y")
    if rec.pi <= 0:
        raise RecordMismatchError(f"Runda {rec.t}: auditerad post med pi={rec.pi}")

    r = (rec.y - rec.f) / rec.pi
    return replace(
        state,
        n_pulls=state.n_pulls + 1,
        sum_f=state.sum_f + rec.f,
        sum_r=state.sum_r + r,
        sum_r_sq=state.sum_r_sq + r * r,
        n_audits=state.n_audits + 1,
    )


def point_estimate(state: ArmState) -> float:
    if state.n_pulls == 0:
        raise NoDataError(f"Arm {state.arm_id} har inga dragningar ännu")
    return (state.sum_f + state.sum_r) / state.n_pulls


def interval(state: ArmState, budget: CsBudget, pi_min: float) -> ConfidenceInterval:
    if state.n_pulls == 0:
        return UNBOUNDED

    theta = point_estimate(state)
    w_f = width_proxy(state.n_pulls, budget.delta_k)
    w_r = width_residual(state.n_pulls, state.sum_r_sq, pi_min, budget.delta_k)
    return ConfidenceInterval(theta - w_f - w_r, theta + w_f + w_r, w_f, w_r)


def replay(records: list[SampleRecord], num_arms: int) -> list[ArmState]:
    """Bygger om armtillstånden från en logg, t.ex. för revision av en körning."""
    states = [ArmState(arm_id=k) for k in range(num_arms)]
    for rec in records:
        states[rec.arm_id] = update(states[rec.arm_id], rec)
    return states


# ── Egna undantagsklasser ─────────────────────────────────────────────────────

class NoDataError(ValueError):
    """Punktskattning efterfrågad innan armen dragits."""

class RecordMismatchError(ValueError):
    """Posten hör till en annan arm eller saknar etikett trots audit."""

class PositivityViolation(ValueError):
    """Loggad propensitet under pi_min för en audit-berättigad post."""

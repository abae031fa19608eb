"""
app/core/allocator.py

Auditpolicyer: hur sannolikt är det att vi köper den sanna etiketten Y
för den här dragningen?

    uniform               π = ρ
    price_of_precision    π = clip((σ̂_R/σ̂_F) · sqrt(c_F/c_Y) · skala, π_min, 1)
    uncertainty_weighted  π = clip(λ · gap⁻¹ · |μ̂_R| · ĝ, π_min, 1)   (regulariserat)
    neyman                π = clip(λ · ŝ_k(F), π_min, 1),   ŝ = sqrt(ĝ)
    oracle                π = clip(λ · sqrt(g_k), π_min, 1), sanna g
    always / never        π = 1 / π = 0   (never bara som baslinje)

λ_t löses per runda över rundans två kandidatarmar så att medel-π = ρ.
Ordningen är: båda kandidaternas F → poäng per (arm, F) → λ över paret → klipp.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from app.models.policy import AuditPolicyConfig
from app.models.trial import SampleRecord

logger = logging.getLogger(__name__)

G_PRIOR = 0.25          # prior för E[(Y−F)²] innan uppvärmningen är klar
SCORE_REG = 0.05        # regularisering i uncertainty_weighted
N_SCORE_BINS = 4        # lika breda F-bins vid stratifiering

LAMBDA_LO = 1e-9
LAMBDA_HI = 1e9

ADAPTIVE_KINDS = ("uncertainty_weighted", "neyman", "oracle")


# ── Plug-in-tillstånd ────────────────────────────────────────────────────────

def score_bin(f: float) -> int:
    return min(int(f * N_SCORE_BINS), N_SCORE_BINS - 1)


@dataclass
class _Moments:
    pulls: int = 0
    audits: int = 0
    sum_f: float = 0.0
    sum_f_sq: float = 0.0
    sum_r: float = 0.0
    sum_r_sq: float = 0.0
    ipw_sq: float = 0.0      # Σ A/π · (Y − F)²

    def g_hat(self) -> float:
        return self.ipw_sq / self.pulls if self.pulls else G_PRIOR


@dataclass
class VarianceProxyState:
    """
    Löpande skattningar per arm (och per F-bin vid stratifiering) av
    g_k = E[(Y−F)² | k], IPW-viktat och normerat med antalet dragningar.
    Ägs av exakt ett försök.
    """
    num_arms: int
    warmup_pulls: int = 10
    arms: list[_Moments] = field(default_factory=list)
    strata: dict[tuple[int, int], _Moments] = field(default_factory=dict)

    def __post_init__(self):
        if not self.arms:
            self.arms = [_Moments() for _ in range(self.num_arms)]

    def observe(self, rec: SampleRecord) -> None:
        r = (rec.y - rec.f) / rec.pi if rec.audited else 0.0
        key = (rec.arm_id, score_bin(rec.f))
        stratum = self.strata.get(key)
        if stratum is None:
            stratum = self.strata[key] = _Moments()
        for m in (self.arms[rec.arm_id], stratum):
            m.pulls += 1
            m.sum_f += rec.f
            m.sum_f_sq += rec.f * rec.f
            m.sum_r += r
            m.sum_r_sq += r * r
            if rec.audited:
                m.audits += 1
                m.ipw_sq += (rec.y - rec.f) ** 2 / rec.pi

    def warm(self, arm: int) -> bool:
        return self.arms[arm].audits >= self.warmup_pulls

    def g_hat(self, arm: int, f: Optional[float] = None) -> float:
        if f is not None:
            stratum = self.strata.get((arm, score_bin(f)))
            if stratum is not None and stratum.audits >= self.warmup_pulls:
                return stratum.g_hat()
        if not self.warm(arm):
            return G_PRIOR
        return self.arms[arm].g_hat()

    def s_hat(self, arm: int, f: Optional[float] = None) -> float:
        return math.sqrt(self.g_hat(arm, f))

    def mu_r(self, arm: int) -> float:
        m = self.arms[arm]
        return m.sum_r / m.pulls if m.pulls else 0.0

    def sd_f(self, arm: int) -> float:
        m = self.arms[arm]
        return _sample_sd(m.pulls, m.sum_f, m.sum_f_sq)

    def sd_r(self, arm: int) -> float:
        m = self.arms[arm]
        return _sample_sd(m.pulls, m.sum_r, m.sum_r_sq)


def _sample_sd(n: int, total: float, total_sq: float) -> float:
    if n < 2:
        return 0.0
    var = (total_sq - total * total / n) / (n - 1)
    return math.sqrt(max(var, 0.0))


# ── Poäng och propensitet ────────────────────────────────────────────────────

def _clip(value: float, pi_min: float) -> float:
    return min(max(value, pi_min), 1.0)


def score(
    cfg: AuditPolicyConfig,
    vp: VarianceProxyState,
    arm: int,
    f: Optional[float],
    gap_estimate: float,
) -> float:
    """Onormerad poäng som λ skalar. f=None ger armnivån."""
    if cfg.kind == "neyman":
        return vp.s_hat(arm, f if cfg.stratify_by_score else None)
    if cfg.kind == "oracle":
        if cfg.oracle_g is None:
            raise ValueError("oracle-policyn kräver oracle_g")
        return math.sqrt(cfg.oracle_g[arm])
    if cfg.kind == "uncertainty_weighted":
        gap = max(gap_estimate, 0.0)
        return (
            (1.0 / (gap + SCORE_REG))
            * (abs(vp.mu_r(arm)) + SCORE_REG)
            * (vp.g_hat(arm) + SCORE_REG)
        )
    raise ValueError(f"Policyn '{cfg.kind}' har ingen λ-skalad poäng")


def propensity(
    cfg: AuditPolicyConfig,
    vp: VarianceProxyState,
    arm: int,
    f: float,
    gap_estimate: float,
    lam: float,
    cost_ratio: float = 0.05,
) -> float:
    """
    Auditsannolikhet för en dragning av `arm` med domarpoäng f.
    cost_ratio = c_F / c_Y används bara av price_of_precision.
    """
    kind = cfg.kind
    if kind == "uniform":
        return cfg.rho
    if kind == "always":
        return 1.0
    if kind == "never":
        return 0.0

    if kind == "price_of_precision":
        # Uppvärmning med jämn auditering tills σ̂_R bygger på riktiga audits
        if not vp.warm(arm):
            return cfg.rho
        sd_f = vp.sd_f(arm)
        if sd_f <= 0:
            return 1.0
        ratio = vp.sd_r(arm) / sd_f
        return _clip(ratio * math.sqrt(cost_ratio) * cfg.pop_scale, cfg.pi_min)

    if lam <= 0:
        raise ValueError(f"lambda måste vara positiv för '{kind}', fick {lam}")
    return _clip(lam * score(cfg, vp, arm, f, gap_estimate), cfg.pi_min)


def pair_lambda(
    cfg: AuditPolicyConfig,
    vp: VarianceProxyState,
    arms: tuple[int, int],
    gap_estimate: float,
    fs: Optional[tuple[float, float]] = None,
) -> float:
    """
    λ_t över rundans kandidatpar. 1.0 för policyer som inte normeras.

    `fs` är kandidaternas domarpoäng i rundan. λ måste lösas över samma
    poäng som propensiteten sedan använder, annars hamnar medel-π fel
    vid stratifiering.
    """
    if cfg.kind not in ADAPTIVE_KINDS:
        return 1.0
    if fs is None:
        fs = (None, None)
    scores = [score(cfg, vp, k, f, gap_estimate) for k, f in zip(arms, fs)]
    return solve_lambda(scores, cfg.rho, cfg.pi_min)


# ── Budgetnormering ──────────────────────────────────────────────────────────

def _clipped_mean(lam: float, s_values: list[float], pi_min: float) -> float:
    return sum(_clip(lam * s, pi_min) for s in s_values) / len(s_values)


def solve_lambda(s_values: list[float], rho: float, pi_min: float) -> float:
    """
    Löser medel_i clip(λ·s_i, π_min, 1) = ρ för λ ∈ [1e-9, 1e9].

    Medlet är styckvis linjärt och icke-avtagande i λ med brytpunkter i
    π_min/s_i och 1/s_i, så vi halverar över de sorterade brytpunkterna
    och interpolerar exakt inom segmentet.
    """
    if not s_values:
        raise ValueError("s_values får inte vara tom")
    if any(s < 0 for s in s_values):
        raise ValueError(f"Poängen måste vara icke-negativa: {s_values}")
    if rho < pi_min:
        raise ValueError(f"rho={rho} < pi_min={pi_min}: budgeten är ogenomförbar")

    positive = [s for s in s_values if s > 0]
    if not positive:
        # Alla poäng noll: varje λ ger π_min överallt
        logger.debug("solve_lambda: alla poäng är noll, golvet π_min styr")
        return 1.0

    points = sorted({LAMBDA_LO, LAMBDA_HI, *(
        b for s in positive for b in (pi_min / s, 1.0 / s) if LAMBDA_LO < b < LAMBDA_HI
    )})
    means = [_clipped_mean(p, s_values, pi_min) for p in points]

    if means[-1] < rho:
        # Budgeten kan inte nås när nollpoäng håller medlet nere, mättad policy
        logger.debug(f"solve_lambda: max medel-π {means[-1]:.4f} < rho={rho}")
        return min(max(1.0 / s for s in positive), LAMBDA_HI)
    if means[0] >= rho:
        return points[0]

    lo, hi = 0, len(points) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if means[mid] < rho:
            lo = mid
        else:
            hi = mid

    m_lo, m_hi = means[lo], means[hi]
    if m_hi == m_lo:
        return points[lo]
    return points[lo] + (rho - m_lo) * (points[hi] - points[lo]) / (m_hi - m_lo)


def neyman_oracle_policy(g_values: list[float], rho: float, pi_min: float) -> list[float]:
    """π⋆_i = clip(λ⋆ · sqrt(g_i), π_min, 1) med λ⋆ från budgetvillkoret."""
    s_values = [math.sqrt(g) for g in g_values]
    lam = solve_lambda(s_values, rho, pi_min)
    return [_clip(lam * s, pi_min) for s in s_values]


def objective(g_values: list[float], pi_values: list[float]) -> float:
    """Σ g_i/π_i, IPW-variansens policyberoende del."""
    return sum(g / p for g, p in zip(g_values, pi_values))


# ── Egna undantagsklasser ─────────────────────────────────────────────────────

class BaselinePolicyError(ValueError):
    """never-policyn bryter mot positiviteten och får bara köras som baslinje."""

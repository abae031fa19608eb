"""
app/core/boundary.py

Tidsuniforma gränsfunktioner (stitched boundary) och konfidensbredder
för domarmedelvärdet och IPW-residualmedelvärdet.

    ψ(v; α) = 1.7 · sqrt( v · ( log log(2v) + 0.72 · log(5.2/α) ) )

Naturlig logaritm genomgående. Konstanterna är kalibrerade för ln.

Domänregler:
  - ψ är odefinierad för 2v ≤ 1 → variansen golvas till v_eff = max(v, 1)
  - uttrycket under roten klampas till 0
  - varje arm får δ_k = δ/K, varje sekvens (proxy, residual) använder δ_k/2
"""

import math

import numpy as np
from pydantic import BaseModel, Field, model_validator


# ── Parametrar ───────────────────────────────────────────────────────────────

class BoundaryParams(BaseModel):
    leading_coeff: float = 1.7
    log_coeff: float = 0.72
    alpha_scale: float = 5.2
    range_coeff: float = 0.45

    model_config = {"frozen": True}

    @property
    def range_log_scale(self) -> float:
        # log(10.4/δ_k) i residualens intervallterm
        return 2.0 * self.alpha_scale


DEFAULT_PARAMS = BoundaryParams()


class CsBudget(BaseModel):
    delta: float = Field(gt=0, lt=1)
    num_arms: int = Field(ge=1)
    delta_k: float = 0.0

    model_config = {"frozen": True}

    @model_validator(mode="before")
    @classmethod
    def _derive_delta_k(cls, data):
        if isinstance(data, dict) and data.get("delta") and data.get("num_arms"):
            data = dict(data)
            data["delta_k"] = float(data["delta"]) / int(data["num_arms"])
        return data

    @classmethod
    def for_arms(cls, delta: float, num_arms: int) -> "CsBudget":
        return cls(delta=delta, num_arms=num_arms)


# ── ψ ───────────────────────────────────────────────────────────────────────

def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha måste ligga i (0,1), fick {alpha}")


def psi(v: float, alpha: float, params: BoundaryParams = DEFAULT_PARAMS) -> float:
    _check_alpha(alpha)
    if v < 0:
        raise ValueError(f"Variansprocessen kan inte vara negativ: v={v}")

    v_eff = max(v, 1.0)
    radicand = v_eff * (
        math.log(math.log(2.0 * v_eff))
        + params.log_coeff * math.log(params.alpha_scale / alpha)
    )
    return params.leading_coeff * math.sqrt(max(radicand, 0.0))


def psi_array(v: np.ndarray, alpha: float, params: BoundaryParams = DEFAULT_PARAMS) -> np.ndarray:
    """Vektoriserad ψ för täckningsexperimentet. Samma golv och klampning som psi()."""
    _check_alpha(alpha)
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("Variansprocessen kan inte vara negativ")

    v_eff = np.maximum(v, 1.0)
    radicand = v_eff * (
        np.log(np.log(2.0 * v_eff))
        + params.log_coeff * math.log(params.alpha_scale / alpha)
    )
    return params.leading_coeff * np.sqrt(np.maximum(radicand, 0.0))


# ── Bredder ──────────────────────────────────────────────────────────────────

def width_proxy(n_pulls: int, delta_k: float, params: BoundaryParams = DEFAULT_PARAMS) -> float:
    """
    Bredd för domarmedelvärdet. F ∈ [0,1] ger en sub-gaussisk martingal med
    variansprocess N/4. Före första dragningen är bredden odefinierad och
    anroparen använder då intervallet [0,1].
    """
    if n_pulls < 1:
        raise ValueError("width_proxy kräver minst en dragning")
    return psi(n_pulls / 4.0, delta_k / 2.0, params) / n_pulls


def width_residual(
    n_pulls: int,
    v_hat: float,
    pi_min: float,
    delta_k: float,
    params: BoundaryParams = DEFAULT_PARAMS,
) -> float:
    """
    Bredd för IPW-residualens medelvärde:

        [ ψ(V̂; δ_k/2) + 0.45 · (2/π_min) · log(10.4/δ_k) ] / N

    V̂ är den ocentrerade kvadratsumman av residualerna. Utan audits är
    V̂ = 0 och bara intervalltermen (M = 2/π_min) bär bredden.
    """
    if n_pulls < 1:
        raise ValueError("width_residual kräver minst en dragning")
    if pi_min <= 0:
        raise ValueError(f"pi_min måste vara positiv, fick {pi_min}")
    return (psi(v_hat, delta_k / 2.0, params) + range_term(pi_min, delta_k, params)) / n_pulls


def range_term(pi_min: float, delta_k: float, params: BoundaryParams = DEFAULT_PARAMS) -> float:
    m_range = 2.0 / pi_min
    return params.range_coeff * m_range * math.log(params.range_log_scale / delta_k)

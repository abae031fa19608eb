"""
app/core/environment.py

Seedbara syntetiska generatorer för armar, kontexter, domarpoäng och etiketter.

    Y ~ outcome_model(θ_k)
    F = clip(Y + b_k(x) + ε, 0, 1),   ε ~ N(0, noise_sd²)

Dragningsordning per runda (får inte ändras, strömmarna måste vara reproducerbara):
  1. kontextsegment   (bara om fler än ett segment finns)
  2. utfall Y         (eller tabellrad för joint_table)
  3. domarbrus ε      (dras alltid, även när noise_sd = 0)
Motorn drar båda kandidaternas poster i en runda först och därefter
auditmynten, i kandidatordning, från samma ström.

Ett seed per försök: 42 + trial_id. Ingen global RNG.
"""

import logging
from typing import NamedTuple, Optional

import numpy as np

from app.models.environment import (
    EnvironmentSpec, JointTableEntry, JointTableInstance,
)

logger = logging.getLogger(__name__)

DEFAULT_CONTEXT = "default"


# ── Instansbibliotek ─────────────────────────────────────────────────────────

def default_instance() -> EnvironmentSpec:
    """Fyra Bernoulli-armar, homogen bias 0.1, brus 0.15."""
    return EnvironmentSpec(
        name="default",
        arm_means=[0.7, 0.6, 0.5, 0.4],
        bias=[0.1, 0.1, 0.1, 0.1],
        noise_sd=0.15,
    )


def gap_instance(gap: float) -> EnvironmentSpec:
    """
    θ = (0.6 + Δ, 0.6, 0.5, 0.4). Bara toppararmen flyttas, så Δ = 0.1
    ger standardinstansen.
    """
    if not 0.0 < gap <= 0.4:
        raise ValueError(f"gap måste ligga i (0, 0.4], fick {gap}")
    spec = default_instance()
    return spec.model_copy(update={
        "name": f"gap_{gap:g}",
        "arm_means": [round(0.6 + gap, 10), 0.6, 0.5, 0.4],
    })


def heterogeneous_instance() -> EnvironmentSpec:
    """
    Två armar där domarens kvalitet skiljer sig kraftigt:

        arm 0  θ = 0.7, bias 0    F ≈ Y,   g ≈ 0.0013
        arm 1  θ = 0.5, bias 1.0  F ≈ 1,   g ≈ 0.48

    Domaren rankar armarna fel, och arm 1 är den som behöver etiketter.
    """
    return EnvironmentSpec(
        name="heterogeneous",
        arm_means=[0.7, 0.5],
        bias=[0.0, 1.0],
        noise_sd=0.05,
    )


def indistinguishable_pair() -> tuple[JointTableInstance, JointTableInstance]:
    """
    Två tvåarmade instanser där F ~ Bernoulli(0.5) för varje arm i båda,
    men bästa armen skiljer sig:

        A: arm 0  Y = 0.2 | F=0, 1.0 | F=1   (θ = 0.6)
           arm 1  Y = 0.0 | F=0, 0.8 | F=1   (θ = 0.4)
        B: armarna byter plats.
    """
    high = [
        JointTableEntry(f=0.0, y=0.2, p=0.5),
        JointTableEntry(f=1.0, y=1.0, p=0.5),
    ]
    low = [
        JointTableEntry(f=0.0, y=0.0, p=0.5),
        JointTableEntry(f=1.0, y=0.8, p=0.5),
    ]
    instance_a = JointTableInstance(name="indistinguishable_a", arms=[high, low])
    instance_b = JointTableInstance(name="indistinguishable_b", arms=[low, high])
    return instance_a, instance_b


def joint_table_environment(inst: JointTableInstance) -> EnvironmentSpec:
    return EnvironmentSpec(
        name=inst.name,
        outcome_model="joint_table",
        joint_table=inst,
        noise_sd=0.0,
    )


def builtin_environment(name: str) -> EnvironmentSpec:
    if name == "default":
        return default_instance()
    if name == "heterogeneous":
        return heterogeneous_instance()
    if name in ("indistinguishable_a", "indistinguishable_b"):
        instance_a, instance_b = indistinguishable_pair()
        return joint_table_environment(instance_a if name.endswith("_a") else instance_b)
    raise ValueError(
        f"Okänd inbyggd miljö: '{name}'. "
        f"Tillgängliga: ['default', 'heterogeneous', 'indistinguishable_a', "
        f"'indistinguishable_b']"
    )


def best_arm(spec: EnvironmentSpec) -> Optional[int]:
    """Unik maximerare av θ, annars None (korrekthet är då odefinierad)."""
    means = spec.arm_means
    top = max(means)
    winners = [k for k, m in enumerate(means) if m == top]
    return winners[0] if len(winners) == 1 else None


# ── Dragning ─────────────────────────────────────────────────────────────────

def _check_arm(spec: EnvironmentSpec, arm: int) -> None:
    if not 0 <= arm < spec.num_arms:
        raise ValueError(f"Ogiltigt armindex {arm} (instansen har {spec.num_arms} armar)")


def _segment_weights(spec: EnvironmentSpec) -> np.ndarray:
    w = np.array([s.weight for s in spec.segments], dtype=float)
    return np.cumsum(w / w.sum())


def sample_round(
    spec: EnvironmentSpec, arm: int, rng: np.random.Generator
) -> tuple[str, float, float]:
    """
    Drar (kontext, F, Y) för en dragning av `arm`. Y hålls dold för
    inläraren om posten inte auditeras.
    """
    _check_arm(spec, arm)

    context = DEFAULT_CONTEXT
    bias = spec.bias[arm] if spec.bias else 0.0
    noise_sd = spec.noise_sd
    if len(spec.segments) > 1:
        idx = int(np.searchsorted(_segment_weights(spec), rng.random(), side="right"))
        seg = spec.segments[min(idx, len(spec.segments) - 1)]
        context = seg.name
        if seg.bias_shift is not None:
            bias += seg.bias_shift[arm]
        noise_sd *= seg.noise_scale
    elif spec.segments:
        context = spec.segments[0].name

    if spec.outcome_model == "joint_table":
        table = spec.joint_table.arms[arm]
        u = rng.random()
        acc = 0.0
        entry = table[-1]
        for e in table:
            acc += e.p
            if u < acc:
                entry = e
                break
        rng.normal(0.0, 0.0)   # håller dragningsordningen lika för alla familjer
        return context, entry.f, entry.y

    theta = spec.arm_means[arm]
    if spec.outcome_model == "bernoulli":
        y = 1.0 if rng.random() < theta else 0.0
    else:
        y = float(np.clip(_beta_draw(rng, theta, spec.beta_concentration), 0.0, 1.0))

    eps = rng.normal(0.0, noise_sd)
    f = min(max(y + bias + eps, 0.0), 1.0)
    return context, f, y


def _beta_draw(rng: np.random.Generator, theta: float, concentration: float) -> float:
    # Beta(θκ, (1−θ)κ) har medel θ. Ränderna degenererar till punktmassa.
    if theta <= 0.0 or theta >= 1.0:
        return theta
    return rng.beta(theta * concentration, (1.0 - theta) * concentration)


def sample_batch(
    spec: EnvironmentSpec, arm: int, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Vektoriserad variant för Monte Carlo. Returnerar (segmentindex, F, Y).
    OBS: strömmen är inte bitidentisk med n anrop till sample_round.
    """
    _check_arm(spec, arm)

    seg_idx = np.zeros(n, dtype=int)
    bias = np.full(n, spec.bias[arm] if spec.bias else 0.0)
    noise_sd = np.full(n, spec.noise_sd)
    if len(spec.segments) > 1:
        seg_idx = np.minimum(
            np.searchsorted(_segment_weights(spec), rng.random(n), side="right"),
            len(spec.segments) - 1,
        )
        shifts = np.array([
            s.bias_shift[arm] if s.bias_shift is not None else 0.0 for s in spec.segments
        ])
        scales = np.array([s.noise_scale for s in spec.segments])
        bias = bias + shifts[seg_idx]
        noise_sd = noise_sd * scales[seg_idx]

    if spec.outcome_model == "joint_table":
        table = spec.joint_table.arms[arm]
        cum = np.cumsum([e.p for e in table])
        rows = np.minimum(np.searchsorted(cum, rng.random(n), side="right"), len(table) - 1)
        f = np.array([e.f for e in table])[rows]
        y = np.array([e.y for e in table])[rows]
        return seg_idx, f, y

    theta = spec.arm_means[arm]
    if spec.outcome_model == "bernoulli":
        y = (rng.random(n) < theta).astype(float)
    elif 0.0 < theta < 1.0:
        kappa = spec.beta_concentration
        y = rng.beta(theta * kappa, (1.0 - theta) * kappa, size=n)
    else:
        y = np.full(n, theta)

    f = np.clip(y + bias + rng.normal(0.0, 1.0, size=n) * noise_sd, 0.0, 1.0)
    return seg_idx, f, y


# ── Residualens andramoment ──────────────────────────────────────────────────

class ResidualMoment(NamedTuple):
    value: float
    std_error: float


def true_residual_second_moment(
    spec: EnvironmentSpec,
    arm: int,
    n_samples: int = 1_000_000,
    seed: int = 0,
) -> ResidualMoment:
    """
    g_k = E[(Y − F)² | k]. Exakt uppräkning för tabellinstanser, annars
    Monte Carlo med rapporterat standardfel.
    """
    _check_arm(spec, arm)

    if spec.outcome_model == "joint_table":
        table = spec.joint_table.arms[arm]
        return ResidualMoment(sum(e.p * (e.y - e.f) ** 2 for e in table), 0.0)

    rng = np.random.default_rng(seed)
    _, f, y = sample_batch(spec, arm, n_samples, rng)
    sq = (y - f) ** 2
    value = float(sq.mean())
    se = float(sq.std(ddof=1) / np.sqrt(n_samples))
    logger.debug(f"g[{arm}] för '{spec.name}': {value:.6f} ± {se:.2e} ({n_samples} sampel)")
    return ResidualMoment(value, se)

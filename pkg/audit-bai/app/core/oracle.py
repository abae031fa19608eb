"""
app/core/oracle.py

Oberoende brute-force-verifierare. Referensvärden räknas fram här,
de tas aldrig från minnet.

  - exact_arm_stats       exakt uppräkning på små tabellinstanser
  - grid_optimal_policy   uttömmande rutnätssökning över budgetgiltiga policyer
  - judge_only_error_rate domar-only-inlärare på det oskiljbara instansparet
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from app.models.environment import JointTableInstance

logger = logging.getLogger(__name__)

MAX_GRID_STRATA = 4
BUDGET_TOL = 1e-9


# ── Exakta armstatistikor ────────────────────────────────────────────────────

class ArmMoments(NamedTuple):
    theta: float
    mu_f: float
    mu_r: float
    g: float


def exact_arm_stats(inst: JointTableInstance, arm: int) -> ArmMoments:
    """θ = E[Y], μ_F = E[F], μ_R = E[Y−F], g = E[(Y−F)²] genom uppräkning."""
    if not 0 <= arm < inst.num_arms:
        raise ValueError(f"Ogiltigt armindex {arm}")
    table = inst.arms[arm]
    return ArmMoments(
        theta=math.fsum(e.p * e.y for e in table),
        mu_f=math.fsum(e.p * e.f for e in table),
        mu_r=math.fsum(e.p * (e.y - e.f) for e in table),
        g=math.fsum(e.p * (e.y - e.f) ** 2 for e in table),
    )


# ── Rutnätsoptimering av auditpolicy ─────────────────────────────────────────

@dataclass(frozen=True)
class GridPolicy:
    propensities: tuple[float, ...]
    step: float

    @property
    def mean(self) -> float:
        return sum(self.propensities) / len(self.propensities)


def grid_optimal_policy(
    g_values: Sequence[float],
    rho: float,
    pi_min: float,
    step: float = 0.005,
) -> tuple[GridPolicy, float]:
    """
    Minimerar Σ g_i/π_i under medel(π) = ρ, π_i ∈ [π_min, 1].

    De första m−1 strata söks på rutnätet π_min, π_min+step, ..., 1;
    sista stratumet bestäms av budgeten och måste hamna i [π_min, 1].
    """
    m = len(g_values)
    if not 1 <= m <= MAX_GRID_STRATA:
        raise ValueError(f"Rutnätssökningen klarar 1–{MAX_GRID_STRATA} strata, fick {m}")
    if not pi_min <= rho <= 1:
        raise ValueError(f"rho={rho} måste ligga i [pi_min={pi_min}, 1]")

    g = np.asarray(g_values, dtype=float)
    if m == 1:
        return GridPolicy((rho,), step), float(g[0] / rho)

    grid = np.arange(pi_min, 1.0 + step / 2, step)
    grid = grid[grid <= 1.0 + BUDGET_TOL]
    free = m - 1
    total = m * rho

    best_obj = math.inf
    best_pi: tuple[float, ...] = ()

    # Yttersta dimensionerna loopas, de två innersta vektoriseras
    for prefix in itertools.product(grid, repeat=max(free - 2, 0)):
        mesh = np.meshgrid(*([grid] * (free - len(prefix))), indexing="ij")
        cols = [np.full(mesh[0].shape, p) for p in prefix] + list(mesh)
        last = total - sum(cols)
        feasible = (last >= pi_min - BUDGET_TOL) & (last <= 1.0 + BUDGET_TOL)
        if not feasible.any():
            continue
        last = np.clip(last, pi_min, 1.0)
        obj = sum(g[i] / cols[i] for i in range(free)) + g[free] / last
        obj = np.where(feasible, obj, np.inf)
        idx = np.unravel_index(int(np.argmin(obj)), obj.shape)
        if obj[idx] < best_obj:
            best_obj = float(obj[idx])
            best_pi = tuple(float(col[idx]) for col in cols) + (float(last[idx]),)

    if not best_pi:
        raise GridInfeasibleError(
            f"Ingen rutnätspunkt uppfyller budgeten rho={rho} med step={step}"
        )
    return GridPolicy(best_pi, step), best_obj


# ── Domar-only-omöjlighet ────────────────────────────────────────────────────

DecisionRule = Callable[[list[np.ndarray]], int]


def judge_mean_rule(streams: list[np.ndarray]) -> int:
    """argmax av domarmedel, lägsta index vid lika."""
    return int(np.argmax([s.mean() for s in streams]))


def judge_recent_rule(streams: list[np.ndarray], window: int = 100) -> int:
    """argmax av medel över de senaste `window` domarpoängen."""
    return int(np.argmax([s[-window:].mean() for s in streams]))


def _judge_streams(inst: JointTableInstance, per_arm: int, rng: np.random.Generator) -> list[np.ndarray]:
    streams = []
    u = rng.random((inst.num_arms, per_arm))
    for k, table in enumerate(inst.arms):
        cum = np.cumsum([e.p for e in table])
        rows = np.minimum(np.searchsorted(cum, u[k], side="right"), len(table) - 1)
        streams.append(np.array([e.f for e in table])[rows])
    return streams


def judge_only_error_rate(
    instances: tuple[JointTableInstance, JointTableInstance],
    decision_rule: DecisionRule = judge_mean_rule,
    n_trials: int = 1000,
    horizon: int = 1000,
    seed: int = 42,
) -> tuple[float, float]:
    """
    Simulerar en inlärare som aldrig auditerar: round-robin över armarna i
    `horizon` dragningar och sedan decision_rule på domarpoängen.
    Försök i använder seed + i för båda instanserna.
    """
    errors = []
    for inst in instances:
        thetas = [exact_arm_stats(inst, k).theta for k in range(inst.num_arms)]
        k_star = int(np.argmax(thetas))
        per_arm = max(horizon // inst.num_arms, 1)
        wrong = 0
        for i in range(n_trials):
            rng = np.random.default_rng(seed + i)
            if decision_rule(_judge_streams(inst, per_arm, rng)) != k_star:
                wrong += 1
        errors.append(wrong / n_trials)

    logger.info(
        f"Domar-only ({decision_rule.__name__}, horisont {horizon}, {n_trials} försök): "
        f"fel {errors[0]:.3f} / {errors[1]:.3f}"
    )
    return errors[0], errors[1]


# ── Egna undantagsklasser ─────────────────────────────────────────────────────

class GridInfeasibleError(ValueError):
    """Rutnätet är för grovt för att uppfylla budgeten."""

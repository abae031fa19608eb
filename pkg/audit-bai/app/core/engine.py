"""
app/core/engine.py

PP-LUCB, yttre loopen: välj kandidater, kontrollera stopp, dra båda
kandidaterna och delegera auditbeslutet till allokeraren.

Per runda:
  1. räkna om θ̂_k och [L_k, U_k] från armsummorna (ingen cache)
  2. b = argmax θ̂_k, c = argmax_{k≠b} U_k   (cfg.tie_break, lägsta index)
  3. stoppa om L_b > max_{k≠b} U_k          (strikt)
  4. dra (x, F, Y) för b och c, lös λ_t över parets F, sedan auditmynten

Kostnadsbok: c_F per dragning (två per runda) + c_Y per audit.
Initieringen räknas som rundor, en dragning per runda.
"""

import logging
from typing import Optional

import numpy as np

from app.core.allocator import (
    BaselinePolicyError, VarianceProxyState, pair_lambda, propensity,
)
from app.core.boundary import CsBudget
from app.core.environment import best_arm, sample_round, true_residual_second_moment
from app.core.estimator import (
    ArmState, ConfidenceInterval, check_positivity, interval, point_estimate, update,
)
from app.models.environment import CostModel, EnvironmentSpec
from app.models.policy import AuditPolicyConfig
from app.models.trial import EngineConfig, SampleRecord, TrialResult

logger = logging.getLogger(__name__)


# ── Kandidater och stopp ─────────────────────────────────────────────────────

TIE_BREAK_RULES = ("lowest_index",)


def select_candidates(
    states: list[ArmState],
    intervals: list[ConfidenceInterval],
    tie_break: str = "lowest_index",
) -> tuple[int, int]:
    if len(states) < 2:
        raise ValueError(f"Minst två armar krävs, fick {len(states)}")
    if tie_break not in TIE_BREAK_RULES:
        raise ValueError(
            f"Okänd tie_break-regel: '{tie_break}'. Tillgängliga: {list(TIE_BREAK_RULES)}"
        )

    estimates = [point_estimate(s) for s in states]
    b = 0
    for k in range(1, len(estimates)):
        if estimates[k] > estimates[b]:
            b = k

    c: Optional[int] = None
    for k, ci in enumerate(intervals):
        if k == b:
            continue
        if c is None or ci.upper > intervals[c].upper:
            c = k
    return b, c


def should_stop(intervals: list[ConfidenceInterval], b: int) -> bool:
    best_other = max(ci.upper for k, ci in enumerate(intervals) if k != b)
    return intervals[b].lower > best_other


def ledger_cost(log: list[SampleRecord], cost_model: CostModel) -> float:
    n_audits = sum(1 for rec in log if rec.audited)
    return cost_model.c_f * len(log) + cost_model.c_y * n_audits


# ── Försök ───────────────────────────────────────────────────────────────────

def _validate(env: EnvironmentSpec, cfg: EngineConfig, policy: AuditPolicyConfig) -> AuditPolicyConfig:
    cfg.check_arms(env.num_arms)

    if policy.kind == "never":
        if not cfg.allow_baseline:
            raise BaselinePolicyError(
                "never-policyn bryter mot positiviteten (π ≥ π_min) och är bara "
                "tillåten i baslinjeläge (allow_baseline=True)"
            )
        logger.warning("Kör never-baslinjen utan giltig konfidenssekvens, stopp avstängt")
        return policy

    if policy.kind == "uniform" and policy.rho < cfg.pi_min:
        raise ValueError(f"uniform rho={policy.rho} ligger under motorns pi_min={cfg.pi_min}")
    if policy.kind != "always" and policy.pi_min < cfg.pi_min:
        raise ValueError(
            f"Policyns pi_min={policy.pi_min} ligger under motorns pi_min={cfg.pi_min}"
        )

    if policy.kind == "oracle" and policy.oracle_g is None:
        g = [true_residual_second_moment(env, k).value for k in range(env.num_arms)]
        logger.info(f"Oracle-g beräknat för '{env.name}': {[round(v, 5) for v in g]}")
        policy = policy.model_copy(update={"oracle_g": g})
    return policy


def run_trial(
    env: EnvironmentSpec,
    cfg: EngineConfig,
    policy: AuditPolicyConfig,
    seed: int,
    trial_id: int = 0,
) -> tuple[TrialResult, list[SampleRecord]]:
    """
    Kör ett komplett PP-LUCB-försök. Deterministiskt givet seed.

    Returnerar resultatet och hela dragningsloggen med loggad π per post.
    Når vi t_max utan separation blir termination="budget_exhausted" och
    vald arm är aktuell b(t).
    """
    policy = _validate(env, cfg, policy)

    num_arms = env.num_arms
    baseline = policy.kind == "never"
    budget = CsBudget.for_arms(cfg.delta, num_arms)
    costs = cfg.cost_model
    cost_ratio = costs.c_f / costs.c_y

    rng = np.random.default_rng(seed)
    states = [ArmState(arm_id=k) for k in range(num_arms)]
    vp = VarianceProxyState(num_arms=num_arms, warmup_pulls=policy.warmup_pulls)
    log: list[SampleRecord] = []
    t = 0

    if baseline:
        init_pi = 0.0
    elif policy.kind == "always":
        init_pi = 1.0
    elif cfg.init_mode == "literal":
        init_pi = cfg.pi_min
    else:
        init_pi = max(policy.rho, cfg.pi_min)

    def record(arm: int, draw: tuple[str, float, float], pi: float) -> None:
        context, f, y = draw
        audited = bool(rng.random() < pi)
        rec = SampleRecord(
            t=t,
            arm_id=arm,
            context=context,
            f=f,
            pi=pi,
            audited=audited,
            y=y if audited else None,
            cost=costs.c_f + (costs.c_y if audited else 0.0),
            eligible=not baseline,
        )
        check_positivity(rec, cfg.pi_min)
        states[arm] = update(states[arm], rec)
        vp.observe(rec)
        log.append(rec)

    # Initiering: n_init dragningar per arm, round-robin
    for _ in range(cfg.n_init):
        for k in range(num_arms):
            t += 1
            record(k, sample_round(env, k, rng), init_pi)

    while True:
        intervals = [interval(s, budget, cfg.pi_min) for s in states]
        b, c = select_candidates(states, intervals, cfg.tie_break)

        if not baseline and should_stop(intervals, b):
            termination = "stopped"
            break
        if t >= cfg.t_max:
            termination = "budget_exhausted"
            break

        t += 1
        gap = point_estimate(states[b]) - point_estimate(states[c])
        draws = [sample_round(env, k, rng) for k in (b, c)]
        if baseline:
            pis = [0.0, 0.0]
        elif policy.kind == "always":
            pis = [1.0, 1.0]
        else:
            # Båda propensiteterna före första uppdateringen: λ och π ser samma vp
            lam = pair_lambda(policy, vp, (b, c), gap, fs=(draws[0][1], draws[1][1]))
            pis = [
                propensity(policy, vp, k, draw[1], gap, lam, cost_ratio)
                for k, draw in zip((b, c), draws)
            ]
        for k, draw, pi in zip((b, c), draws, pis):
            record(k, draw, pi)

    n_audits = sum(s.n_audits for s in states)
    n_pulls = len(log)
    k_star = best_arm(env)
    result = TrialResult(
        trial_id=trial_id,
        seed=seed,
        policy=policy.label,
        selected_arm=b,
        stop_round=t,
        n_pulls=n_pulls,
        n_audits=n_audits,
        audit_rate=n_audits / n_pulls,
        total_cost=costs.c_f * n_pulls + costs.c_y * n_audits,
        correct=None if k_star is None else b == k_star,
        termination=termination,
        final_estimates=[point_estimate(s) for s in states],
    )

    if termination == "budget_exhausted":
        logger.info(
            f"Försök {trial_id} (seed {seed}, {policy.label}): t_max={cfg.t_max} nådd "
            f"utan separation, väljer arm {b}, kostnad {result.total_cost:.0f}"
        )
    else:
        logger.debug(
            f"Försök {trial_id} (seed {seed}, {policy.label}): stopp vid runda {t}, "
            f"arm {b}, kostnad {result.total_cost:.0f}, auditandel {result.audit_rate:.3f}"
        )
    return result, log

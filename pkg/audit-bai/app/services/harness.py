"""
app/services/harness.py

Experimentdrivaren: täckningsvalidering, jämförelse av auditpolicyer och
studien av degenererade strategier. Kör försök (parallellt om workers > 1),
slår ihop resultaten sorterade på trial_id och aggregerar till rapportrader.

Seeds: försök i använder base_seed + i i varje cell, så policyer jämförs
på parade seeds.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from multiprocess import Pool

from app.core.boundary import CsBudget, psi_array
from app.core.engine import ledger_cost, run_trial
from app.core.environment import (
    gap_instance, indistinguishable_pair, true_residual_second_moment,
)
from app.core.oracle import judge_mean_rule, judge_only_error_rate
from app.models.environment import CostModel, EnvironmentSpec
from app.models.experiment import AggregateReport, ExperimentConfig, ReportRow
from app.models.policy import AuditPolicyConfig, PolicyKind
from app.models.trial import EngineConfig, SampleRecord, TrialLog, TrialResult
from app.services.config_loader import ExperimentConfigError, resolve_environment

logger = logging.getLogger(__name__)

COMPARE_POLICIES: list[PolicyKind] = [
    "oracle", "neyman", "price_of_precision", "uncertainty_weighted", "uniform",
]
BOOTSTRAP_RESAMPLES = 1000
CONFIDENCE_LEVEL = 0.95
LEDGER_TOL = 1e-6
JUDGE_ONLY_TRIALS = 1000
JUDGE_ONLY_HORIZON = 1000


# ── Försöksjobb ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class TrialJob:
    config_id: str
    env: EnvironmentSpec
    engine: EngineConfig
    policy: AuditPolicyConfig
    seed: int
    trial_id: int
    keep_log: bool = False


def run_job(job: TrialJob) -> tuple[TrialResult, list[SampleRecord]]:
    """Körs i en worker. Kostnaden räknas om från loggen innan resultatet lämnas."""
    result, log = run_trial(job.env, job.engine, job.policy, job.seed, job.trial_id)

    recomputed = ledger_cost(log, job.engine.cost_model)
    if abs(recomputed - result.total_cost) > LEDGER_TOL * max(1.0, result.total_cost):
        raise LedgerMismatchError(
            f"{job.config_id} försök {job.trial_id}: rapporterad kostnad "
            f"{result.total_cost} ≠ loggens {recomputed}"
        )
    return result, (log if job.keep_log else [])


def run_jobs(jobs: list[TrialJob], workers: int = 1) -> list[tuple[TrialResult, list[SampleRecord]]]:
    if workers > 1 and len(jobs) > 1:
        with Pool(processes=workers) as pool:
            outcomes = pool.map(run_job, jobs)
    else:
        outcomes = [run_job(job) for job in jobs]
    return sorted(outcomes, key=lambda o: o[0].trial_id)


# ── Aggregering ──────────────────────────────────────────────────────────────

def bootstrap_ci(values, seed: int) -> tuple[float, float]:
    """
    Percentil-bootstrap för medelvärdet (1000 omsampel, 95 %).
    Intervallet innehåller alltid punktskattningen.
    """
    arr = np.asarray(values, dtype=float)
    point = float(arr.mean())
    if arr.size < 2 or np.all(arr == arr[0]):
        return point, point

    rng = np.random.default_rng(seed)
    idx = rng.integers(0, arr.size, size=(BOOTSTRAP_RESAMPLES, arr.size))
    means = arr[idx].mean(axis=1)
    alpha = 1.0 - CONFIDENCE_LEVEL
    low, high = np.percentile(means, [100 * alpha / 2, 100 * (1 - alpha / 2)])
    return min(float(low), point), max(float(high), point)


def summarize(
    cfg: ExperimentConfig,
    config_id: str,
    policy: str,
    results: list[TrialResult],
    delta: Optional[float] = None,
    gap: Optional[float] = None,
) -> ReportRow:
    costs = np.array([r.total_cost for r in results])
    verdicts = [r.correct for r in results if r.correct is not None]
    ci_low, ci_high = bootstrap_ci(costs, cfg.base_seed)

    return ReportRow(
        experiment=cfg.experiment,
        config_id=config_id,
        policy=policy,
        delta=delta,
        gap=gap,
        seed_base=cfg.base_seed,
        n_trials=len(results),
        mean_cost=float(costs.mean()),
        sd_cost=float(costs.std(ddof=1)) if len(costs) > 1 else 0.0,
        audit_rate=float(np.mean([r.audit_rate for r in results])),
        accuracy=float(np.mean(verdicts)) if verdicts else None,
        ci_low=ci_low,
        ci_high=ci_high,
    )


def _engine_config(cfg: ExperimentConfig, delta: float, **overrides) -> EngineConfig:
    values = dict(
        delta=delta,
        pi_min=cfg.pi_min,
        rho=cfg.rho,
        cost_model=CostModel(c_f=cfg.c_f, c_y=cfg.c_y),
        t_max=cfg.t_max,
        n_init=cfg.n_init,
        init_mode=cfg.init_mode,
    )
    values.update(overrides)
    return EngineConfig(**values)


def _policy_config(cfg: ExperimentConfig, kind: PolicyKind, **overrides) -> AuditPolicyConfig:
    values = dict(
        kind=kind,
        rho=cfg.rho,
        pi_min=cfg.pi_min,
        stratify_by_score=cfg.stratify_by_score,
    )
    values.update(overrides)
    return AuditPolicyConfig(**values)


def _oracle_g(env: EnvironmentSpec) -> list[float]:
    g = [true_residual_second_moment(env, k).value for k in range(env.num_arms)]
    logger.info(f"Sanna g för '{env.name}': {[round(v, 5) for v in g]}")
    return g


def _run_cell(
    cfg: ExperimentConfig,
    config_id: str,
    env: EnvironmentSpec,
    engine: EngineConfig,
    policy: AuditPolicyConfig,
    trial_sink: Optional[list[TrialLog]],
) -> list[TrialResult]:
    jobs = [
        TrialJob(
            config_id=config_id,
            env=env,
            engine=engine,
            policy=policy,
            seed=cfg.seed_for(i),
            trial_id=i,
            keep_log=trial_sink is not None,
        )
        for i in range(cfg.trials)
    ]
    outcomes = run_jobs(jobs, cfg.workers)
    if trial_sink is not None:
        trial_sink.extend(
            TrialLog(config_id=config_id, result=res, samples=log) for res, log in outcomes
        )

    results = [res for res, _ in outcomes]
    exhausted = sum(1 for r in results if r.termination == "budget_exhausted")
    if exhausted and policy.kind != "never":
        logger.warning(f"{config_id}: {exhausted}/{len(results)} försök nådde t_max utan stopp")
    return results


def _policies(cfg: ExperimentConfig, default: list[PolicyKind]) -> list[PolicyKind]:
    policies = cfg.policies if cfg.policies is not None else default
    if not policies:
        raise ExperimentConfigError("Policylistan är tom, inget att köra")
    return policies


# ── Experiment ───────────────────────────────────────────────────────────────

def run_coverage(cfg: ExperimentConfig, trial_sink: Optional[list[TrialLog]] = None) -> AggregateReport:
    """
    Anytime-täckning för domarsekvensen (en arm, K = 1): för varje μ simuleras
    cfg.trials Bernoulli(μ)-strömmar; ett försök täcker upp till n om
    |medel_t − μ| ≤ bredd_t för alla t ≤ n.
    """
    if not cfg.deltas:
        raise ExperimentConfigError("Täckningsexperimentet kräver minst ett delta")

    sizes = sorted(cfg.sample_sizes)
    n_max = sizes[-1]
    t = np.arange(1, n_max + 1, dtype=float)
    rows: list[ReportRow] = []

    for mu in cfg.mus:
        streams = np.stack([
            np.random.default_rng(cfg.seed_for(i)).random(n_max) < mu
            for i in range(cfg.trials)
        ]).astype(float)
        running_mean = np.cumsum(streams, axis=1) / t

        for delta in cfg.deltas:
            delta_k = CsBudget.for_arms(delta, 1).delta_k
            width = psi_array(t / 4.0, delta_k / 2.0) / t
            violated = np.logical_or.accumulate(np.abs(running_mean - mu) > width, axis=1)

            rates = []
            for n in sizes:
                covered = ~violated[:, n - 1]
                rate = float(covered.mean())
                rates.append(rate)
                ci_low, ci_high = bootstrap_ci(covered, cfg.base_seed)
                rows.append(ReportRow(
                    experiment="coverage",
                    config_id=f"coverage-d{delta:g}-mu{mu:g}-n{n}",
                    policy="proxy_cs",
                    delta=delta,
                    seed_base=cfg.base_seed,
                    n_trials=cfg.trials,
                    coverage=rate,
                    ci_low=ci_low,
                    ci_high=ci_high,
                ))
            logger.info(
                f"Täckning μ={mu:g} δ={delta:g}: {min(rates):.3f}–{max(rates):.3f} "
                f"(mål {1 - delta:.2f}, spridning {max(rates) - min(rates):.3f})"
            )

    return AggregateReport(experiment="coverage", rows=rows)


def run_compare(cfg: ExperimentConfig, trial_sink: Optional[list[TrialLog]] = None) -> AggregateReport:
    """Policy × gap × delta på θ = (0.6+Δ, 0.6, 0.5, 0.4), parade seeds per cell."""
    policies = _policies(cfg, COMPARE_POLICIES)
    rows: list[ReportRow] = []

    for gap in cfg.gaps:
        env = gap_instance(gap)
        oracle_g = _oracle_g(env) if "oracle" in policies else None
        for delta in cfg.deltas:
            engine = _engine_config(cfg, delta)
            for kind in policies:
                overrides = {"oracle_g": oracle_g} if kind == "oracle" else {}
                if kind == "never":
                    engine_cell = _engine_config(cfg, delta, allow_baseline=True)
                else:
                    engine_cell = engine
                config_id = f"compare-{kind}-gap{gap:g}-d{delta:g}"
                results = _run_cell(
                    cfg, config_id, env, engine_cell, _policy_config(cfg, kind, **overrides), trial_sink
                )
                row = summarize(cfg, config_id, kind, results, delta=delta, gap=gap)
                logger.info(
                    f"{config_id}: kostnad {row.mean_cost:.0f} ± {row.sd_cost:.0f}, "
                    f"auditandel {row.audit_rate:.3f}, träffsäkerhet {row.accuracy}"
                )
                rows.append(row)

    return AggregateReport(experiment="compare", rows=rows)


def run_failure_modes(cfg: ExperimentConfig, trial_sink: Optional[list[TrialLog]] = None) -> AggregateReport:
    """
    Degenererade strategier mot de selektiva:

        no_judge   π ≡ 1, varje dragning auditeras. Samma konfidenssekvens
                   (π_min från experimentet) som de selektiva strategierna
        no_audit   never-baslinjen, argmax av domarmedel vid t_max
        fixed      uniform ρ
        adaptive   uncertainty_weighted

    plus domar-only-inläraren på det oskiljbara instansparet.
    """
    env = resolve_environment(cfg.environment)
    strategies: list[tuple[str, EngineConfig, AuditPolicyConfig]] = []
    for delta in cfg.deltas:
        strategies += [
            ("no_judge",
             _engine_config(cfg, delta),
             _policy_config(cfg, "always", rho=1.0)),
            ("no_audit",
             _engine_config(cfg, delta, allow_baseline=True),
             _policy_config(cfg, "never")),
            ("fixed", _engine_config(cfg, delta), _policy_config(cfg, "uniform")),
            ("adaptive", _engine_config(cfg, delta), _policy_config(cfg, "uncertainty_weighted")),
        ]

    rows: list[ReportRow] = []
    for name, engine, policy in strategies:
        config_id = f"failure_modes-{name}-d{engine.delta:g}"
        results = _run_cell(cfg, config_id, env, engine, policy, trial_sink)
        row = summarize(cfg, config_id, name, results, delta=engine.delta)
        if name == "no_audit":
            logger.warning(
                f"{config_id}: no_audit saknar giltig konfidenssekvens, domarens bias "
                f"korrigeras aldrig (träffsäkerhet {row.accuracy})"
            )
        rows.append(row)

    err_a, err_b = judge_only_error_rate(
        indistinguishable_pair(),
        judge_mean_rule,
        n_trials=JUDGE_ONLY_TRIALS,
        horizon=JUDGE_ONLY_HORIZON,
        seed=cfg.base_seed,
    )
    rows.append(ReportRow(
        experiment="failure_modes",
        config_id=f"failure_modes-judge_only-indistinguishable-h{JUDGE_ONLY_HORIZON}",
        policy="judge_only",
        seed_base=cfg.base_seed,
        n_trials=JUDGE_ONLY_TRIALS,
        accuracy=1.0 - max(err_a, err_b),
    ))
    return AggregateReport(experiment="failure_modes", rows=rows)


def run_single(cfg: ExperimentConfig, trial_sink: Optional[list[TrialLog]] = None) -> AggregateReport:
    """`run`-kommandot: valda policyer på vald miljö, standard ett försök med neyman."""
    env = resolve_environment(cfg.environment)
    rows: list[ReportRow] = []

    for delta in cfg.deltas:
        for kind in _policies(cfg, ["neyman"]):
            baseline = kind == "never"
            engine = _engine_config(cfg, delta, allow_baseline=baseline)
            overrides = {"oracle_g": _oracle_g(env)} if kind == "oracle" else {}
            config_id = f"run-{kind}-{env.name}-d{delta:g}"
            results = _run_cell(cfg, config_id, env, engine, _policy_config(cfg, kind, **overrides), trial_sink)
            for r in results:
                logger.info(
                    f"{config_id} försök {r.trial_id}: arm {r.selected_arm} ({r.termination}) "
                    f"runda {r.stop_round}, {r.n_pulls} dragningar, {r.n_audits} audits, "
                    f"kostnad {r.total_cost:.0f}"
                )
            rows.append(summarize(cfg, config_id, kind, results, delta=delta))

    return AggregateReport(experiment="run", rows=rows)


EXPERIMENTS = {
    "coverage": run_coverage,
    "compare": run_compare,
    "failure_modes": run_failure_modes,
    "run": run_single,
}


def run_experiment(cfg: ExperimentConfig, trial_sink: Optional[list[TrialLog]] = None) -> AggregateReport:
    logger.info(
        f"Startar '{cfg.experiment}': {cfg.trials} försök per cell, "
        f"base_seed={cfg.base_seed}, workers={cfg.workers}"
    )
    return EXPERIMENTS[cfg.experiment](cfg, trial_sink)


# ── Egna undantagsklasser ─────────────────────────────────────────────────────

class LedgerMismatchError(RuntimeError):
    """Rapporterad totalkostnad stämmer inte med loggens."""

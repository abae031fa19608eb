"""
tests/test_environment.py

Testar de syntetiska generatorerna: reproducerbarhet, klippning,
instansbiblioteket och residualens andramoment.
"""

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.stats import chi2_contingency

from app.core.environment import (
    best_arm,
    builtin_environment,
    default_instance,
    gap_instance,
    indistinguishable_pair,
    joint_table_environment,
    sample_batch,
    sample_round,
    true_residual_second_moment,
)
from app.core.oracle import exact_arm_stats
from app.models.environment import (
    ContextSegment, EnvironmentSpec, JointTableEntry, JointTableInstance,
)


def draw(spec, arm, n, seed):
    rng = np.random.default_rng(seed)
    return [sample_round(spec, arm, rng) for _ in range(n)]


# ── Test: instansbibliotek ───────────────────────────────────────────────────

class TestInstances:
    def test_standardinstans(self):
        spec = default_instance()
        assert spec.arm_means == [0.7, 0.6, 0.5, 0.4]
        assert spec.bias == [0.1, 0.1, 0.1, 0.1]
        assert spec.noise_sd == 0.15
        assert best_arm(spec) == 0

    def test_gap_flyttar_bara_toppen(self):
        assert gap_instance(0.1).arm_means == default_instance().arm_means
        assert gap_instance(0.2).arm_means == [0.8, 0.6, 0.5, 0.4]

    @pytest.mark.parametrize("gap", [0.0, -0.1, 0.5])
    def test_ogiltigt_gap(self, gap):
        with pytest.raises(ValueError):
            gap_instance(gap)

    def test_lika_ger_ingen_basta_arm(self):
        spec = EnvironmentSpec(name="tie", arm_means=[0.5, 0.5, 0.3])
        assert best_arm(spec) is None

    def test_oskiljbara_paret(self):
        inst_a, inst_b = indistinguishable_pair()
        assert [exact_arm_stats(inst_a, k).theta for k in range(2)] == pytest.approx([0.6, 0.4])
        assert [exact_arm_stats(inst_b, k).theta for k in range(2)] == pytest.approx([0.4, 0.6])
        for inst in (inst_a, inst_b):
            for table in inst.arms:
                p_f1 = sum(e.p for e in table if e.f == 1.0)
                assert p_f1 == pytest.approx(0.5)

    def test_okand_inbyggd_miljo(self):
        with pytest.raises(ValueError, match="Okänd"):
            builtin_environment("nope")

    def test_tabellmiljo_ger_armmedel(self):
        spec = builtin_environment("indistinguishable_b")
        assert spec.arm_means == pytest.approx([0.4, 0.6])
        assert best_arm(spec) == 1

    def test_heterogen_domarkvalitet(self):
        """Arm 0: F ≈ Y, g = σ²/2. Arm 1: F ≈ 1, g = (1 − 2σφ(0) + σ²/2)/2."""
        spec = builtin_environment("heterogeneous")
        assert best_arm(spec) == 0
        g = [true_residual_second_moment(spec, k, n_samples=200_000).value for k in (0, 1)]
        assert g[0] == pytest.approx(0.00125, abs=2e-4)
        assert g[1] == pytest.approx(0.4807, abs=5e-3)

    def test_heterogen_domare_rankar_fel(self):
        spec = builtin_environment("heterogeneous")
        rng = np.random.default_rng(0)
        judge = [sample_batch(spec, k, 5_000, rng)[1].mean() for k in (0, 1)]
        assert judge[1] > 0.95 > 0.75 > judge[0]


class TestSpecValidation:
    def test_medel_utanfor_intervallet(self):
        with pytest.raises(ValidationError):
            EnvironmentSpec(name="bad", arm_means=[1.2, 0.5])

    def test_bias_fel_langd(self):
        with pytest.raises(ValidationError):
            EnvironmentSpec(name="bad", arm_means=[0.5, 0.4], bias=[0.1])

    def test_tabell_summerar_inte_till_ett(self):
        with pytest.raises(ValidationError):
            JointTableInstance(arms=[[JointTableEntry(f=0, y=0, p=0.4)]])


# ── Test: dragning ───────────────────────────────────────────────────────────

class TestSampleRound:
    def test_reproducerbar(self):
        spec = default_instance()
        assert draw(spec, 1, 200, seed=42) == draw(spec, 1, 200, seed=42)
        assert draw(spec, 1, 200, seed=42) != draw(spec, 1, 200, seed=43)

    def test_degenererad_instans(self):
        spec = EnvironmentSpec(name="deg", arm_means=[1.0, 0.0], noise_sd=0.0)
        for _, f, y in draw(spec, 0, 50, seed=1):
            assert (f, y) == (1.0, 1.0)

    def test_klippning(self):
        spec = EnvironmentSpec(name="wild", arm_means=[0.9, 0.1], bias=[0.5, -0.5], noise_sd=0.4)
        for arm in (0, 1):
            for _, f, y in draw(spec, arm, 500, seed=3):
                assert 0.0 <= f <= 1.0
                assert 0.0 <= y <= 1.0

    def test_tabellrader(self):
        spec = builtin_environment("indistinguishable_a")
        allowed = {(0.0, 0.2), (1.0, 1.0)}
        for _, f, y in draw(spec, 0, 100, seed=5):
            assert (f, y) in allowed

    def test_ogiltig_arm(self):
        with pytest.raises(ValueError):
            sample_round(default_instance(), 4, np.random.default_rng(0))

    def test_kontextsegment(self):
        spec = EnvironmentSpec(
            name="seg",
            arm_means=[0.5, 0.5],
            noise_sd=0.0,
            segments=[
                ContextSegment(name="easy", weight=1.0),
                ContextSegment(name="hard", weight=3.0, bias_shift=[0.2, 0.2]),
            ],
        )
        samples = draw(spec, 0, 2000, seed=11)
        contexts = [c for c, _, _ in samples]
        assert set(contexts) == {"easy", "hard"}
        assert contexts.count("hard") / len(contexts) == pytest.approx(0.75, abs=0.05)
        for c, f, y in samples:
            expected = min(y + (0.2 if c == "hard" else 0.0), 1.0)
            assert f == pytest.approx(expected)


class TestSampleBatch:
    def test_medel_for_arm_ett(self):
        _, _, y = sample_batch(default_instance(), 0, 100_000, np.random.default_rng(42))
        assert y.mean() == pytest.approx(0.7, abs=0.005)

    def test_domarbias_utan_klippning(self):
        """Beta-utfall i det inre: E[F] − E[Y] = b_k exakt när inget klipps."""
        spec = EnvironmentSpec(
            name="beta",
            arm_means=[0.5, 0.4],
            bias=[0.05, -0.05],
            noise_sd=0.01,
            outcome_model="beta",
            beta_concentration=50,
        )
        for arm, b in ((0, 0.05), (1, -0.05)):
            _, f, y = sample_batch(spec, arm, 100_000, np.random.default_rng(arm))
            assert f.mean() - y.mean() == pytest.approx(b, abs=2e-3)
            assert y.mean() == pytest.approx(spec.arm_means[arm], abs=3e-3)

    def test_paret_har_samma_domarfordelning(self):
        inst_a, inst_b = indistinguishable_pair()
        _, f_a, _ = sample_batch(joint_table_environment(inst_a), 0, 5000, np.random.default_rng(1))
        _, f_b, _ = sample_batch(joint_table_environment(inst_b), 0, 5000, np.random.default_rng(2))
        table = [
            [np.sum(f_a == 0.0), np.sum(f_a == 1.0)],
            [np.sum(f_b == 0.0), np.sum(f_b == 1.0)],
        ]
        _, p_value, _, _ = chi2_contingency(table)
        assert p_value > 1e-4


# ── Test: residualens andramoment ────────────────────────────────────────────

class TestResidualMoment:
    def test_exakt_for_tabell(self):
        spec = joint_table_environment(indistinguishable_pair()[0])
        moment = true_residual_second_moment(spec, 0)
        assert moment.value == pytest.approx(0.02)
        assert moment.std_error == 0.0

    def test_noll_utan_brus_och_bias(self):
        spec = EnvironmentSpec(name="exact", arm_means=[0.7, 0.2], noise_sd=0.0)
        assert true_residual_second_moment(spec, 0, n_samples=10_000).value == 0.0

    def test_monte_carlo_standardfel(self):
        moment = true_residual_second_moment(default_instance(), 0, n_samples=200_000)
        assert moment.std_error <= 1e-3
        assert 0.0 < moment.value < 0.25

    def test_deterministisk(self):
        a = true_residual_second_moment(default_instance(), 1, n_samples=50_000, seed=3)
        b = true_residual_second_moment(default_instance(), 1, n_samples=50_000, seed=3)
        assert a == b

"""
tests/test_config_loader.py

Testar key=value-filerna och prioritetsordningen Settings < fil < CLI.
"""

import pytest

from app.config import Settings
from app.core.environment import default_instance
from app.services.config_loader import (
    ExperimentConfigError,
    load_environment_file,
    load_experiment_config,
    resolve_environment,
)

CONFIG = """\
# jämförelse med två delta
experiment=compare
n_trials=3
deltas=0.01,0.05
policies=neyman,uniform
stratify_by_score=true
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "compare.env"
    path.write_text(CONFIG)
    return str(path)


@pytest.fixture
def plain_settings():
    return Settings(_env_file=None, base_seed=7, workers=2, out_dir="from-settings")


class TestLoadExperimentConfig:
    def test_filvarden(self, config_file, plain_settings):
        cfg = load_experiment_config(config_file, settings=plain_settings)
        assert cfg.experiment == "compare"
        assert cfg.n_trials == 3
        assert cfg.deltas == [0.01, 0.05]
        assert cfg.policies == ["neyman", "uniform"]
        assert cfg.stratify_by_score is True

    def test_settings_ar_lagsta_lagret(self, config_file, plain_settings):
        cfg = load_experiment_config(config_file, settings=plain_settings)
        assert cfg.base_seed == 7
        assert cfg.workers == 2
        assert cfg.out_dir == "from-settings"

    def test_cli_vinner_over_fil(self, config_file, plain_settings):
        cfg = load_experiment_config(
            config_file, {"n_trials": 1, "deltas": "0.2", "base_seed": None}, plain_settings
        )
        assert cfg.n_trials == 1
        assert cfg.deltas == [0.2]
        assert cfg.base_seed == 7

    def test_seeds(self, plain_settings):
        cfg = load_experiment_config(settings=plain_settings)
        assert [cfg.seed_for(i) for i in range(3)] == [7, 8, 9]

    def test_okand_nyckel(self, tmp_path, plain_settings):
        path = tmp_path / "bad.env"
        path.write_text("experiment=compare\nhorizon=500\n")
        with pytest.raises(ExperimentConfigError):
            load_experiment_config(str(path), settings=plain_settings)

    def test_tom_policylista(self, plain_settings):
        with pytest.raises(ExperimentConfigError):
            load_experiment_config(overrides={"policies": ""}, settings=plain_settings)

    def test_ogiltigt_delta(self, plain_settings):
        with pytest.raises(ExperimentConfigError):
            load_experiment_config(overrides={"deltas": "0.05,1.5"}, settings=plain_settings)

    def test_fil_saknas(self, tmp_path, plain_settings):
        with pytest.raises(FileNotFoundError):
            load_experiment_config(str(tmp_path / "missing.env"), settings=plain_settings)

    def test_standardantal_forsok(self, plain_settings):
        for experiment, expected in (("coverage", 1000), ("compare", 20), ("failure_modes", 30), ("run", 1)):
            cfg = load_experiment_config(overrides={"experiment": experiment}, settings=plain_settings)
            assert cfg.trials == expected


class TestEnvironmentFiles:
    def test_miljofil(self, tmp_path):
        path = tmp_path / "two_arms.env"
        path.write_text("arm_means=0.8,0.3\nbias=0.1,0.0\nnoise_sd=0.05\n")
        spec = load_environment_file(str(path))
        assert spec.name == "two_arms"
        assert spec.arm_means == [0.8, 0.3]
        assert spec.bias == [0.1, 0.0]
        assert spec.noise_sd == 0.05

    def test_inbyggd(self):
        assert resolve_environment("default") == default_instance()

    def test_heterogen_inbyggd(self):
        spec = resolve_environment("heterogeneous")
        assert spec.num_arms == 2
        assert spec.bias == [0.0, 1.0]

    def test_sokvag(self, tmp_path):
        path = tmp_path / "beta.env"
        path.write_text("name=beta_arms\narm_means=0.5,0.4\noutcome_model=beta\n")
        spec = resolve_environment(str(path))
        assert spec.name == "beta_arms"
        assert spec.outcome_model == "beta"

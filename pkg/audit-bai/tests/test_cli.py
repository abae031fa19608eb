"""
tests/test_cli.py

Testar kommandoraden: underkommandon, flaggor och exitkoder.
"""

import pandas as pd

from app.cli import EXIT_IO, EXIT_OK, EXIT_VALIDATION, main


def write_config(tmp_path, text="t_max=300\nn_trials=3\n"):
    path = tmp_path / "fast.env"
    path.write_text(text)
    return str(path)


class TestCli:
    def test_compare_skriver_csv(self, tmp_path):
        out = tmp_path / "out"
        code = main([
            "compare", "--config", write_config(tmp_path), "--trials", "1",
            "--gap", "0.3", "--policy", "uniform,neyman", "--out", str(out),
        ])
        assert code == EXIT_OK
        frame = pd.read_csv(out / "compare.csv")
        assert list(frame["policy"]) == ["uniform", "neyman"]
        assert (frame["n_trials"] == 1).all()

    def test_json_och_loggar(self, tmp_path):
        out = tmp_path / "out"
        code = main([
            "run", "--config", write_config(tmp_path), "--trials", "1",
            "--format", "json", "--dump-logs", "--out", str(out),
        ])
        assert code == EXIT_OK
        assert (out / "run.json").exists()
        assert len((out / "run_trials.jsonl").read_text().splitlines()) == 1

    def test_failure_modes_bindestreck(self, tmp_path):
        out = tmp_path / "out"
        code = main([
            "failure-modes", "--config", write_config(tmp_path, "t_max=100\n"),
            "--trials", "1", "--out", str(out),
        ])
        assert code == EXIT_OK
        assert (out / "failure_modes.csv").exists()

    def test_ogiltigt_delta(self, tmp_path):
        assert main(["run", "--delta", "1.5", "--out", str(tmp_path)]) == EXIT_VALIDATION

    def test_okand_policy(self, tmp_path):
        assert main(["run", "--policy", "greedy", "--out", str(tmp_path)]) == EXIT_VALIDATION

    def test_tom_policylista(self, tmp_path):
        assert main(["compare", "--policy", "", "--out", str(tmp_path)]) == EXIT_VALIDATION

    def test_konfigurationsfil_saknas(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "missing.env")]) == EXIT_IO

    def test_utkatalog_ar_en_fil(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        code = main(["run", "--config", write_config(tmp_path), "--out", str(blocker)])
        assert code == EXIT_IO

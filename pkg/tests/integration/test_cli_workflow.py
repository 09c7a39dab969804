"""The whole command-line workflow on the smoke config."""

from pathlib import Path

import pandas as pd
import pytest
from click.testing import CliRunner

from vae_conformal.cli.main import cli
from vae_conformal.experiment import RESULT_COLUMNS, UNIFORMITY_COLUMNS, load_records
from vae_conformal.pipeline import TIMING_COLUMNS

pytestmark = pytest.mark.slow


def _invoke(fixtures_dir: Path, out: Path, *args: str) -> None:
    result = CliRunner().invoke(
        cli, ["--config", str(fixtures_dir / "smoke.yaml"), "--out", str(out), *args]
    )
    assert result.exit_code == 0, result.output


@pytest.fixture
def trained(fixtures_dir: Path, tmp_path: Path) -> Path:
    out = tmp_path / "run"
    _invoke(fixtures_dir, out, "generate")
    _invoke(fixtures_dir, out, "train")
    return out


class TestCliWorkflow:
    def test_train_writes_artifacts(self, trained: Path):
        artifacts = trained / "artifacts"
        for name in ("weights.bin", "calibration.txt", "artifacts.json", "loss_history.csv"):
            assert (artifacts / name).exists()
        scores = (artifacts / "calibration.txt").read_text().split()
        assert len(scores) == 30
        assert len(pd.read_csv(artifacts / "loss_history.csv")) == 3

    def test_training_is_reproducible(self, trained: Path, fixtures_dir: Path, tmp_path: Path):
        again = tmp_path / "again"
        _invoke(fixtures_dir, again, "generate")
        _invoke(fixtures_dir, again, "train")
        for name in ("weights.bin", "calibration.txt"):
            assert (trained / "artifacts" / name).read_bytes() == (
                again / "artifacts" / name
            ).read_bytes()

    def test_experiment_and_report(self, trained: Path, fixtures_dir: Path):
        _invoke(fixtures_dir, trained, "experiment")
        out = trained / "experiment"
        results = pd.read_csv(out / "results.csv")
        assert list(results.columns) == RESULT_COLUMNS
        assert results.iloc[0]["episodes"] == 2

        records = out / "records"
        saved = load_records(records)
        nominal = [r.summary for r in saved if Path(r.name).name.startswith("nominal")]
        attacked = [r.summary for r in saved if Path(r.name).name.startswith("attacked")]
        assert results.iloc[0]["fp"] == sum(s.first_alarm_step is not None for s in nominal)
        assert results.iloc[0]["fn"] == sum(s.detection_delay is None for s in attacked)
        assert all(s.attack_start_step is not None for s in attacked)

        checks = pd.read_csv(out / "uniformity.csv")
        assert list(checks.columns) == UNIFORMITY_COLUMNS
        assert checks.iloc[0]["p_count"] == sum(s.steps for s in nominal) * 5

        timing = pd.read_csv(out / "timing.csv")
        assert list(timing.columns) == TIMING_COLUMNS
        assert list(timing["N"]) == [2, 4]
        assert len(pd.read_csv(out / "latent.csv")) == 30

        assert len(list(records.rglob("*.csv"))) == 4

        _invoke(fixtures_dir, trained, "report", str(records))
        summary = (trained / "report" / "summary.txt").read_text().splitlines()
        assert len(summary) == 4

    def test_attack_eval(self, trained: Path, fixtures_dir: Path):
        _invoke(fixtures_dir, trained, "attack-eval")
        frame = pd.read_csv(trained / "attack" / "attack_eval.csv")
        assert len(frame) == 5
        assert {"clean_pred", "attacked_pred"} <= set(frame.columns)

"""Tests for report panels and record loading."""

from pathlib import Path

import pandas as pd
import pytest

from tests.helpers import make_record
from vae_conformal.errors import FormatError
from vae_conformal.experiment import (
    PANELS,
    load_records,
    panel_frames,
    s_crossing_step,
    write_report,
)
from vae_conformal.sim import save_episode


@pytest.fixture
def records_dir(tmp_path: Path) -> Path:
    directory = tmp_path / "records"
    save_episode(make_record([], steps=10), directory / "n3_d1_t5", "nominal_000")
    save_episode(make_record([6], steps=10, attack_start=4), directory / "n3_d1_t5", "attacked_000")
    return directory


class TestLoadRecords:
    def test_sorted_names(self, records_dir: Path):
        names = [r.name for r in load_records(records_dir)]
        assert names == ["n3_d1_t5/attacked_000", "n3_d1_t5/nominal_000"]

    def test_missing_directory(self, tmp_path: Path):
        with pytest.raises(FormatError, match="does not exist"):
            load_records(tmp_path / "nope")

    def test_empty_directory(self, tmp_path: Path):
        with pytest.raises(FormatError, match="no episode records"):
            load_records(tmp_path)

    def test_malformed_record_names_line(self, records_dir: Path):
        path = records_dir / "n3_d1_t5" / "nominal_000.csv"
        lines = path.read_text().splitlines()
        lines[4] = lines[4].replace(lines[4].split(",")[1], "oops", 1)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(FormatError) as info:
            load_records(records_dir)
        assert info.value.line == 5


class TestPanels:
    def test_panel_frames(self, records_dir: Path):
        record = next(r for r in load_records(records_dir) if r.name.endswith("attacked_000"))
        panels = panel_frames(record)
        assert tuple(panels) == PANELS
        assert list(panels["distance"].columns) == ["t", "d_true", "d_pred"]
        assert list(panels["p_values"].columns) == ["t", "k", "p"]
        assert len(panels["p_values"]) == 10 * 3
        assert list(panels["p_values"]["k"][:3]) == [1, 2, 3]
        assert set(panels["cusum"]["tau"]) == {5.0}

    def test_s_crosses_tau_at_first_alarm(self, records_dir: Path):
        record = next(r for r in load_records(records_dir) if r.name.endswith("attacked_000"))
        crossing = s_crossing_step(record.frame, record.summary.tau)
        assert crossing == record.summary.first_alarm_step == 6
        assert record.summary.detection_delay == 2

    def test_no_crossing(self):
        frame = pd.DataFrame({"t": [0, 1], "s": [0.0, 1.0]})
        assert s_crossing_step(frame, 5.0) is None


class TestWriteReport:
    def test_writes_panels_and_summary(self, records_dir: Path, tmp_path: Path):
        out = tmp_path / "report"
        records = write_report(records_dir, out)
        assert len(records) == 2
        for record in records:
            for panel in PANELS:
                assert (out / record.name / f"{panel}.csv").exists()
        lines = (out / "summary.txt").read_text().splitlines()
        assert len(lines) == 2
        assert "first_alarm=6 s_cross=6" in lines[0]
        assert "outcome=timeout" in lines[1]

"""Per-episode plot data, summaries and optional figures from saved records."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import structlog

from vae_conformal.errors import FormatError, UsageError
from vae_conformal.sim import EpisodeSummary
from vae_conformal.sim.episode import load_episode

log = structlog.get_logger()

PANELS = ("distance", "velocity", "p_values", "log_m", "cusum")


@dataclass(frozen=True)
class LoadedRecord:
    name: str
    frame: pd.DataFrame
    summary: EpisodeSummary


def find_records(directory: Path) -> list[Path]:
    """Step CSVs that have a JSON summary next to them, in sorted order."""
    if not directory.is_dir():
        raise FormatError(directory, "records directory does not exist")
    paths = [p for p in sorted(directory.rglob("*.csv")) if p.with_suffix(".json").exists()]
    if not paths:
        raise FormatError(directory, "no episode records found")
    return paths


def load_records(directory: Path) -> list[LoadedRecord]:
    records = []
    for path in find_records(directory):
        frame, summary = load_episode(path)
        name = path.relative_to(directory).with_suffix("").as_posix()
        records.append(LoadedRecord(name=name, frame=frame, summary=summary))
    return records


def panel_frames(record: LoadedRecord) -> dict[str, pd.DataFrame]:
    frame = record.frame
    p_columns = [c for c in frame.columns if c.startswith("p_")]
    p_long = frame.melt(id_vars="t", value_vars=p_columns, var_name="k", value_name="p")
    p_long["k"] = p_long["k"].str.removeprefix("p_").astype(int)
    return {
        "distance": frame[["t", "d_true", "d_pred"]],
        "velocity": frame[["t", "v", "brake"]],
        "p_values": p_long.sort_values(["t", "k"], kind="stable").reset_index(drop=True),
        "log_m": frame[["t", "log_m"]],
        "cusum": frame[["t", "s"]].assign(tau=record.summary.tau, alarm=frame["alarm"]),
    }


def summary_line(record: LoadedRecord) -> str:
    s = record.summary
    s_max = float(record.frame["s"].max()) if len(record.frame) else 0.0
    crossing = s_crossing_step(record.frame, s.tau)
    return (
        f"{record.name}: outcome={s.outcome} steps={s.steps} N={s.n} tau={s.tau:g} "
        f"attack_start={s.attack_start_step} first_alarm={s.first_alarm_step} s_cross={crossing} "
        f"delay={s.detection_delay} alarms={s.alarm_count} max_s={s_max:.3f} "
        f"final_d={s.final_distance:.3f} final_v={s.final_velocity:.3f}"
    )


def plot_record(record: LoadedRecord, path: Path) -> None:
    try:
        from matplotlib.figure import Figure
    except ImportError as e:
        raise UsageError("plots need matplotlib; install the 'plot' extra") from e

    panels = panel_frames(record)
    fig = Figure(figsize=(8, 10))
    axes = fig.subplots(4, 1, sharex=True)
    dist = panels["distance"]
    axes[0].plot(dist["t"], dist["d_true"], label="ground truth")
    axes[0].plot(dist["t"], dist["d_pred"], label="perception")
    axes[0].set_ylabel("distance [m]")
    axes[0].legend()
    axes[1].plot(panels["velocity"]["t"], panels["velocity"]["v"])
    axes[1].set_ylabel("velocity [m/s]")
    p = panels["p_values"]
    axes[2].scatter(p["t"], p["p"], s=4)
    axes[2].set_ylabel("p-value")
    cusum = panels["cusum"]
    axes[3].plot(cusum["t"], cusum["s"], label="S")
    axes[3].axhline(record.summary.tau, color="red", linestyle="--", label="tau")
    if record.summary.attack_start_step is not None:
        for ax in axes:
            ax.axvline(record.summary.attack_start_step, color="gray", linestyle=":")
    axes[3].set_ylabel("S")
    axes[3].set_xlabel("frame")
    axes[3].legend()
    fig.suptitle(f"{record.name} ({record.summary.outcome})")
    fig.savefig(path)


def write_report(records_dir: Path, out_dir: Path, plots: bool = False) -> list[LoadedRecord]:
    """One directory of panel CSVs per episode plus ``summary.txt`` at the top."""
    records = load_records(records_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for record in records:
        target = out_dir / record.name
        target.mkdir(parents=True, exist_ok=True)
        for panel, frame in panel_frames(record).items():
            frame.to_csv(target / f"{panel}.csv", index=False, float_format="%.10g")
        if plots:
            plot_record(record, target / "episode.png")
    (out_dir / "summary.txt").write_text("".join(summary_line(r) + "\n" for r in records))
    log.info("report written", records=len(records), out_dir=str(out_dir), plots=plots)
    return records


def s_crossing_step(frame: pd.DataFrame, tau: float) -> int | None:
    """First frame whose CUSUM statistic exceeds ``tau``."""
    hits = np.flatnonzero(frame["s"].to_numpy() > tau)
    return int(frame["t"].iloc[hits[0]]) if hits.size else None

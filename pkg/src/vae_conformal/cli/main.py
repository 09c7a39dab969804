import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import click
import numpy as np
import pandas as pd
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from vae_conformal import __version__
from vae_conformal.errors import (
    ConfigError,
    ContractViolation,
    FormatError,
    NumericError,
    StructuralError,
    UsageError,
)

console = Console()

EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERIC = 3

DATASET_DIR = "dataset"
ARTIFACTS_DIR = "artifacts"
EXPERIMENT_DIR = "experiment"
ATTACK_DIR = "attack"
REPORT_DIR = "report"
TUNED_FILE = "tuned.csv"


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Map package errors onto the stable exit codes."""
    try:
        yield
    except NumericError as e:
        console.print(f"[red]Numeric failure: {escape(str(e))}[/red]")
        raise SystemExit(EXIT_NUMERIC) from e
    except (ConfigError, ContractViolation, StructuralError, UsageError) as e:
        console.print(f"[red]Validation error: {escape(str(e))}[/red]")
        raise SystemExit(EXIT_VALIDATION) from e
    except (FormatError, OSError) as e:
        console.print(f"[red]I/O error: {escape(str(e))}[/red]")
        raise SystemExit(EXIT_IO) from e


def _load_config(ctx: click.Context):
    """Load the run config once per invocation and apply the group's flag overrides."""
    from vae_conformal.config import ConfigLoader, RunConfig, apply_overrides
    from vae_conformal.logging_config import bind_run_context

    if "config" not in ctx.obj:
        path = ctx.obj.get("config_path")
        config = ConfigLoader(Path(path)).load() if path else RunConfig()
        config = apply_overrides(config, seed=ctx.obj.get("seed"), output_dir=ctx.obj.get("out"))
        bind_run_context(command=ctx.info_name, seed=config.seed)
        ctx.obj["config"] = config
    return ctx.obj["config"]


def _artifacts(config, p_floor=None):
    from vae_conformal.pipeline import OfflineArtifacts

    return OfflineArtifacts.load(config.output_dir / ARTIFACTS_DIR, p_floor)


@click.group()
@click.version_option(version=__version__, prog_name="vae-conformal")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="Run config YAML")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Override the master seed")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Override output_dir")
@click.option(
    "--log-level",
    default="WARNING",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
)
@click.option(
    "--log-file",
    type=click.Path(dir_okay=False),
    default=None,
    help="Append JSON log lines here instead of stderr",
)
@click.pass_context
def cli(
    ctx: click.Context,
    config_path: str | None,
    seed: int | None,
    out: str | None,
    log_level: str,
    log_file: str | None,
) -> None:
    """VAE regression with conformal adversarial detection on a braking simulator."""
    from vae_conformal.logging_config import configure_logging

    configure_logging(level=log_level, log_file=Path(log_file) if log_file else None)
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["seed"] = seed
    ctx.obj["out"] = Path(out) if out else None


@cli.command()
@click.pass_context
def validate(ctx: click.Context) -> None:
    """Validate the run config and print what it describes."""
    with _exit_codes():
        config = _load_config(ctx)

    table = Table(title="Run config")
    table.add_column("Setting", style="cyan")
    table.add_column("Value")
    table.add_row("seed", str(config.seed))
    table.add_row("output_dir", str(config.output_dir))
    table.add_row("dataset", f"{config.dataset.count} images, {config.scene.image_side}px side")
    calibration = config.dataset.count - config.split.proper
    table.add_row("split", f"{config.split.proper} proper / {calibration} calibration")
    if config.calibration.source == "trajectories":
        c = config.calibration
        frames = c.trajectories * c.frames_per_trajectory
        table.add_row("calibration", f"{frames} trajectory frames, {c.strata} strata")
    else:
        table.add_row("calibration", f"held-out split, {config.calibration.strata} strata")
    table.add_row("epochs", f"{config.schedule.phase1.epochs} + {config.schedule.phase2.epochs}")
    episodes = config.experiment.episodes
    table.add_row("episodes", f"{episodes} nominal + {episodes} attacked")
    for d in config.detector_rows():
        table.add_row("detector", f"N={d.n} delta={d.delta:g} tau={d.tau:g}")
    table.add_row("detectors", config.experiment.detectors)
    console.print(table)
    console.print("[green]Config valid.[/green]")


@cli.command()
@click.pass_context
def generate(ctx: click.Context) -> None:
    """Render the labeled synthetic dataset."""
    from vae_conformal.sim import generate_dataset, save_dataset

    with _exit_codes():
        config = _load_config(ctx)
        dataset = generate_dataset(
            config.dataset.count,
            label_range=(config.dataset.label_low, config.dataset.label_high),
            nuisance=config.scene.to_nuisance(),
            image_side=config.scene.image_side,
            seed=config.seed_streams()["data"],
        )
        path = save_dataset(config.output_dir / DATASET_DIR, dataset)
    console.print(f"[green]Wrote {len(dataset)} examples to {path}[/green]")


@cli.command()
@click.pass_context
def train(ctx: click.Context) -> None:
    """Train on the proper split and calibrate on the rest."""
    from vae_conformal.pipeline import SplitSpec, offline
    from vae_conformal.sim import load_dataset, trajectory_dataset

    with _exit_codes():
        config = _load_config(ctx)
        dataset = load_dataset(config.output_dir / DATASET_DIR)
        seeds = config.seed_streams()
        seed = seeds["train"]
        calibration_inputs = None
        if config.calibration.source == "trajectories":
            frames = trajectory_dataset(
                config.episode.to_episode(config.scene),
                config.calibration.trajectories,
                config.calibration.frames_per_trajectory,
                seed=seeds["calibration"],
            )
            calibration_inputs = frames.images
        artifacts = offline(
            dataset.images,
            dataset.labels,
            SplitSpec(total=len(dataset), proper=config.split.proper, seed=config.split.seed),
            config.schedule.to_schedule(seed),
            config.architecture(),
            seed=seed,
            p_floor=config.detector.p_floor,
            config=config.echo(),
            strata=config.calibration.strata,
            calibration_inputs=calibration_inputs,
        )
        target = config.output_dir / ARTIFACTS_DIR
        artifacts.save(target)
        history = artifacts.history_frame()
        history.to_csv(target / "loss_history.csv", index=False, float_format="%.10g")
    console.print(
        f"[green]Trained {len(artifacts.history)} epochs, "
        f"{artifacts.calibration.count} calibration scores in {target}[/green]"
    )


def _results_table(frame: pd.DataFrame, title: str = "Detection results") -> Table:
    table = Table(title=title)
    for column in frame.columns:
        table.add_column(column, justify="right")
    for row in frame.itertuples(index=False):
        table.add_row(*(f"{v:g}" if isinstance(v, float) else str(v) for v in row))
    return table


def _plan(config, detectors, episodes: int, seed: int):
    from vae_conformal.experiment import ExperimentPlan

    return ExperimentPlan(
        base=config.episode.to_episode(config.scene, stop_on_alarm=config.experiment.stop_on_alarm),
        attack=config.attack.to_attack(
            start_step=config.attack.start_range[0], default_target=config.attack_target()
        ),
        detectors=detectors,
        episodes=episodes,
        attack_start_range=config.attack.start_range,
        workers=config.experiment.workers,
        seed=seed,
    )


@cli.command()
@click.pass_context
def tune(ctx: click.Context) -> None:
    """Choose (delta, tau) per N on validation episodes and write tuned.csv."""
    from vae_conformal.experiment import tune_grid, tuned_frame

    with _exit_codes():
        config = _load_config(ctx)
        artifacts = _artifacts(config)
        tuning = config.tuning
        plan = _plan(
            config,
            [config.detector.to_detector()],
            tuning.validation_episodes,
            config.seed_streams()["validation"],
        )
        rows = tune_grid(
            artifacts,
            plan,
            tuning.n_values,
            delta_fractions=tuple(tuning.delta_fractions),
            tau_margin=tuning.tau_margin,
        )
        out_dir = config.output_dir / EXPERIMENT_DIR
        out_dir.mkdir(parents=True, exist_ok=True)
        frame = tuned_frame(rows)
        frame.to_csv(out_dir / TUNED_FILE, index=False, float_format="%.10g")

    console.print(_results_table(frame, "Tuned detector rows"))
    console.print(f"[green]Tuned rows in {out_dir / TUNED_FILE}[/green]")


@cli.command()
@click.pass_context
def experiment(ctx: click.Context) -> None:
    """Run nominal and attacked episodes for every detector row."""
    from vae_conformal.experiment import (
        UNIFORMITY_COLUMNS,
        RowResult,
        load_tuned,
        run_experiment,
        save_records,
        uniformity,
    )
    from vae_conformal.model import export_latent
    from vae_conformal.pipeline import SplitSpec, measure_detection_time
    from vae_conformal.sim import generate_dataset, load_dataset

    with _exit_codes():
        config = _load_config(ctx)
        artifacts = _artifacts(config)
        seeds = config.seed_streams()
        out_dir = config.output_dir / EXPERIMENT_DIR
        if config.experiment.detectors == "tuned":
            tuned_path = out_dir / TUNED_FILE
            if not tuned_path.exists():
                raise FileNotFoundError(f"no tuned detector rows at {tuned_path}; run 'tune'")
            detectors = load_tuned(tuned_path, config.detector.to_detector())
        else:
            detectors = config.detector_rows()
        out_dir.mkdir(parents=True, exist_ok=True)
        plan = _plan(config, detectors, config.experiment.episodes, seeds["episodes"])
        records_dir = out_dir / "records"

        def on_row(row: RowResult) -> None:
            if config.experiment.save_records:
                save_records(row, records_dir)

        table, results = run_experiment(artifacts, plan, on_row=on_row)
        table.to_csv(out_dir / "results.csv", index=False, float_format="%.10g")
        checks = pd.DataFrame([uniformity(r) for r in results], columns=UNIFORMITY_COLUMNS)
        checks.to_csv(out_dir / "uniformity.csv", index=False, float_format="%.6g")

        frames = generate_dataset(
            config.experiment.timing_frames,
            label_range=(config.dataset.label_low, config.dataset.label_high),
            nuisance=config.scene.to_nuisance(),
            image_side=config.scene.image_side,
            seed=seeds["episodes"],
        )
        timing = measure_detection_time(
            artifacts,
            frames.images,
            config.experiment.timing_n,
            repeats=config.experiment.timing_repeats,
            seed=seeds["episodes"],
        )
        timing.to_csv(out_dir / "timing.csv", index=False, float_format="%.6g")

        dataset_dir = config.output_dir / DATASET_DIR
        if (dataset_dir / "dataset.bin").exists():
            dataset = load_dataset(dataset_dir)
            _, held_out = SplitSpec(len(dataset), config.split.proper, config.split.seed).indices()
            calib = dataset.subset(held_out)
            latent = export_latent(artifacts.model, calib.images, calib.labels)
            latent.to_csv(out_dir / "latent.csv", index=False, float_format="%.10g")

    console.print(_results_table(table))
    console.print(f"[green]Results in {out_dir}[/green]")


@cli.command("attack-eval")
@click.pass_context
def attack_eval(ctx: click.Context) -> None:
    """Compare clean and FGSM-attacked predictions on held-out examples."""
    from vae_conformal.attack import attack_evaluation, summarize_attack
    from vae_conformal.pipeline import SplitSpec
    from vae_conformal.sim import load_dataset

    with _exit_codes():
        config = _load_config(ctx)
        artifacts = _artifacts(config)
        dataset = load_dataset(config.output_dir / DATASET_DIR)
        _, held_out = SplitSpec(len(dataset), config.split.proper, config.split.seed).indices()
        picked = np.random.default_rng(config.seed_streams()["attack"]).permutation(held_out)
        subset = dataset.subset(picked[: config.experiment.attack_eval_count])
        if not len(subset):
            raise ContractViolation("attack evaluation needs at least one example")
        attack = config.attack.to_attack(start_step=0, default_target=config.attack_target())
        frame = attack_evaluation(artifacts.model, subset.images, subset.labels, attack)
        out_dir = config.output_dir / ATTACK_DIR
        out_dir.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out_dir / "attack_eval.csv", index=False, float_format="%.10g")
        summary = summarize_attack(frame)

    table = Table(title="Attack evaluation")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", justify="right")
    for key, value in summary.items():
        table.add_row(key, f"{value:.4g}")
    console.print(table)


@cli.command()
@click.argument("records_dir", type=click.Path(file_okay=False))
@click.option("--plots", is_flag=True, help="Also render one PNG per episode (needs matplotlib)")
@click.option("--report-dir", type=click.Path(file_okay=False), default=None)
@click.pass_context
def report(ctx: click.Context, records_dir: str, plots: bool, report_dir: str | None) -> None:
    """Turn saved episode records into plot-data CSVs and a summary."""
    from vae_conformal.experiment import write_report

    with _exit_codes():
        config = _load_config(ctx)
        target = Path(report_dir) if report_dir else config.output_dir / REPORT_DIR
        records = write_report(Path(records_dir), target, plots=plots)

    outcomes = pd.Series([str(r.summary.outcome) for r in records]).value_counts()
    table = Table(title=f"{len(records)} episode record(s)")
    table.add_column("Outcome", style="cyan")
    table.add_column("Count", justify="right")
    for outcome, count in outcomes.items():
        table.add_row(str(outcome), str(count))
    console.print(table)
    console.print(f"[green]Report in {target}[/green]")


if __name__ == "__main__":
    sys.exit(cli())

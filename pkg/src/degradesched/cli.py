"""Command-line front door: dataset generation, training, scheduling, reports.

Exit codes: 0 success, 1 runtime/solver failure, 2 input validation failure.
A JSON file passed with --config overrides any flag of the same name, and
DEGRADESCHED_SEED provides the default seed.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__, storage
from .aging import CycleConditions, default_grid, generate_dataset
from .exampleday import load_example_day
from .lod import EconParams, LodConfig, run_linear_bdc, run_lod, run_traditional
from .milp import InfeasibleCaseError
from .net import TrainConfig
from .quantifier import (
    performance_comparison,
    select_best_combination,
    train_benchmarks,
    train_pair,
)
from .storage import FileFormatError

EXIT_RUNTIME = 1
EXIT_VALIDATION = 2


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _apply_config(config_path: str | None, values: dict) -> dict:
    """Merge a JSON config over the flag values; config wins."""
    if config_path is None:
        return values
    try:
        doc = json.loads(Path(config_path).read_text())
    except FileNotFoundError:
        _fail(EXIT_VALIDATION, f"config file not found: {config_path}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_VALIDATION, f"config file {config_path} is not valid JSON: {exc}")
    unknown = set(doc) - set(values)
    if unknown:
        _fail(EXIT_VALIDATION, f"unknown config keys: {sorted(unknown)}")
    values.update(doc)
    return values


def _train_config(values: dict) -> TrainConfig:
    return TrainConfig(
        initial_lr=values["lr"],
        lr_decay_factor=values["lr_decay"],
        decay_every_epochs=values["decay_every"],
        batch_size=values["batch_size"],
        epochs=values["epochs"],
        train_fraction=values["train_fraction"],
        seed=values["seed"],
    )


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Degradation-aware microgrid scheduling toolkit."""


@main.command("simulate-aging")
@click.option("--grid", "grid_path", type=click.Path(), default=None,
              help="JSON list of cycle-condition objects; defaults to the 35-group grid.")
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Output dataset CSV; a .meta.json sidecar is written next to it.")
@click.option("--noise", type=float, default=0.02, show_default=True,
              help="Relative sigma of the multiplicative degradation noise.")
@click.option("--seed", type=int, default=0, envvar="DEGRADESCHED_SEED", show_default=True)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON file overriding any flag.")
def cmd_simulate_aging(grid_path, out_path, noise, seed, config_path) -> None:
    """Generate a synthetic battery-aging dataset."""
    values = _apply_config(
        config_path, {"grid": grid_path, "out": out_path, "noise": noise, "seed": seed}
    )
    t0 = time.perf_counter()
    inputs = []
    try:
        if values["grid"] is None:
            grid = default_grid()
        else:
            doc = json.loads(Path(values["grid"]).read_text())
            grid = [CycleConditions(**entry) for entry in doc]
            inputs.append(values["grid"])
        dataset = generate_dataset(grid, noise_sigma=values["noise"], seed=values["seed"])
    except FileNotFoundError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        _fail(EXIT_VALIDATION, str(exc))

    out = Path(values["out"])
    manifest_path = out.with_suffix(out.suffix + ".manifest.json")
    try:
        storage.write_dataset(out, dataset, manifest=manifest_path.name)
        storage.write_manifest(
            manifest_path,
            command="simulate-aging",
            config={k: values[k] for k in ("grid", "noise", "seed")},
            inputs=inputs,
            seed=values["seed"],
            timings={"wall_seconds": time.perf_counter() - t0},
        )
    except OSError as exc:
        _fail(EXIT_VALIDATION, f"cannot write output: {exc}")
    click.echo(f"wrote {len(dataset)} rows to {out}")


@main.command("train")
@click.option("--dataset", "dataset_path", type=click.Path(), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Model artifact JSON path.")
@click.option("--variant-search", is_flag=True, default=False,
              help="Train every variant and keep the best composed pair.")
@click.option("--ubdf", type=int, default=None, help="Stage-one variant id (1-6).")
@click.option("--bdp", type=int, default=None, help="Stage-two variant id (1-10).")
@click.option("--with-benchmarks", is_flag=True, default=False,
              help="Also train the single-stage benchmark networks.")
@click.option("--report-dir", type=click.Path(), default=None,
              help="Directory for accuracy-table CSVs (defaults to the artifact's directory).")
@click.option("--epochs", type=int, default=TrainConfig.epochs, show_default=True)
@click.option("--batch-size", type=int, default=TrainConfig.batch_size, show_default=True)
@click.option("--lr", type=float, default=TrainConfig.initial_lr, show_default=True)
@click.option("--lr-decay", type=float, default=TrainConfig.lr_decay_factor, show_default=True)
@click.option("--decay-every", type=int, default=TrainConfig.decay_every_epochs, show_default=True)
@click.option("--train-fraction", type=float, default=TrainConfig.train_fraction, show_default=True)
@click.option("--seed", type=int, default=0, envvar="DEGRADESCHED_SEED", show_default=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
def cmd_train(dataset_path, out_path, variant_search, ubdf, bdp, with_benchmarks,
              report_dir, epochs, batch_size, lr, lr_decay, decay_every,
              train_fraction, seed, config_path) -> None:
    """Train the two-stage quantifier (one pair or a full variant search)."""
    values = _apply_config(config_path, {
        "dataset": dataset_path, "out": out_path, "variant_search": variant_search,
        "ubdf": ubdf, "bdp": bdp, "with_benchmarks": with_benchmarks,
        "report_dir": report_dir, "epochs": epochs, "batch_size": batch_size,
        "lr": lr, "lr_decay": lr_decay, "decay_every": decay_every,
        "train_fraction": train_fraction, "seed": seed,
    })
    t0 = time.perf_counter()
    try:
        dataset = storage.read_dataset(values["dataset"])
        cfg = _train_config(values)
    except FileNotFoundError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except (FileFormatError, ValueError) as exc:
        _fail(EXIT_VALIDATION, str(exc))

    out = Path(values["out"])
    report_to = Path(values["report_dir"]) if values["report_dir"] else out.parent
    report_to.mkdir(parents=True, exist_ok=True)
    metrics: dict = {"seed": values["seed"]}

    try:
        if values["variant_search"]:
            if values["ubdf"] is not None or values["bdp"] is not None:
                _fail(EXIT_VALIDATION, "--variant-search excludes --ubdf/--bdp")
            model, report = select_best_combination(dataset, cfg)
            storage.write_report_table(report_to / "ubdf_models.csv", report.ubdf_table)
            storage.write_report_table(report_to / "bdp_models.csv", report.bdp_table)
            storage.write_report_table(
                report_to / "composed_pairs.csv", report.composed_table
            )
            metrics["selection_failures"] = report.failures
            click.echo(
                f"selected stage-one variant {model.ubdf_id}, "
                f"stage-two variant {model.bdp_id}"
            )
        else:
            if values["ubdf"] is None or values["bdp"] is None:
                _fail(EXIT_VALIDATION, "provide --ubdf and --bdp, or --variant-search")
            try:
                model = train_pair(dataset, values["ubdf"], values["bdp"], cfg)
            except ValueError as exc:
                _fail(EXIT_VALIDATION, str(exc))
        if values["with_benchmarks"]:
            benchmarks = train_benchmarks(dataset, cfg)
            rows = performance_comparison(model, benchmarks, dataset, cfg)
            storage.write_report_table(report_to / "performance_comparison.csv", rows)
            metrics["performance_comparison"] = rows
    except Exception as exc:  # training/runtime failures
        _fail(EXIT_RUNTIME, f"training failed: {exc}")

    manifest_path = out.with_suffix(out.suffix + ".manifest.json")
    metrics["variants"] = {"ubdf": model.ubdf_id, "bdp": model.bdp_id}
    try:
        storage.write_model_artifact(out, model, metrics=metrics, manifest=manifest_path.name)
        storage.write_manifest(
            manifest_path,
            command="train",
            config={k: v for k, v in values.items() if k not in ("dataset", "out")},
            inputs=[values["dataset"]],
            seed=values["seed"],
            timings={"wall_seconds": time.perf_counter() - t0},
        )
    except OSError as exc:
        _fail(EXIT_VALIDATION, f"cannot write output: {exc}")
    click.echo(f"wrote model artifact {out}")


@main.command("schedule")
@click.option("--case", "case_path", type=str, required=True,
              help="Case JSON path, or 'example-day' for the bundled day.")
@click.option("--mode", type=click.Choice(["traditional", "linear-bdc", "lod"]),
              required=True)
@click.option("--model", "model_path", type=click.Path(), required=True,
              help="Trained model artifact (used for degradation costing).")
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--capital-cost", type=float, default=120_000.0, show_default=True)
@click.option("--salvage-value", type=float, default=0.0, show_default=True)
@click.option("--soh-eol", type=float, default=0.8, show_default=True)
@click.option("--linear-rate", type=float, default=0.05, show_default=True,
              help="$/kWh rate for the linear-bdc benchmark.")
@click.option("--alpha", type=float, default=0.03, show_default=True)
@click.option("--max-iterations", type=int, default=200, show_default=True)
@click.option("--patience", type=int, default=10, show_default=True)
@click.option("--soh", type=float, default=1.0, show_default=True,
              help="Day-start battery state of health.")
@click.option("--engine", type=click.Choice(["highs", "bnb"]), default="highs",
              show_default=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
def cmd_schedule(case_path, mode, model_path, out_dir, capital_cost, salvage_value,
                 soh_eol, linear_rate, alpha, max_iterations, patience, soh,
                 engine, config_path) -> None:
    """Solve the day-ahead schedule under one of the three strategies."""
    values = _apply_config(config_path, {
        "case": case_path, "mode": mode, "model": model_path, "out_dir": out_dir,
        "capital_cost": capital_cost, "salvage_value": salvage_value,
        "soh_eol": soh_eol, "linear_rate": linear_rate, "alpha": alpha,
        "max_iterations": max_iterations, "patience": patience, "soh": soh,
        "engine": engine,
    })
    t0 = time.perf_counter()
    inputs = []
    try:
        if values["case"] == "example-day":
            case = load_example_day()
        else:
            case = storage.read_case(values["case"])
            inputs.append(values["case"])
        model = storage.read_model_artifact(values["model"])
        inputs.append(values["model"])
        econ = EconParams(
            capital_cost=values["capital_cost"],
            salvage_value=values["salvage_value"],
            soh_eol=values["soh_eol"],
            linear_bdc_rate=values["linear_rate"],
        )
        lod_cfg = LodConfig(
            alpha=values["alpha"],
            max_iterations=values["max_iterations"],
            patience=values["patience"],
        )
    except FileNotFoundError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except (FileFormatError, ValueError) as exc:
        _fail(EXIT_VALIDATION, str(exc))

    out = Path(values["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    manifest_name = "manifest.json"
    try:
        if values["mode"] == "lod":
            trace = run_lod(case, model, econ, lod_cfg, soh=values["soh"],
                            engine=values["engine"])
            if trace.termination_reason == "infeasible":
                _fail(EXIT_RUNTIME, "scheduling became infeasible during the loop")
            solve_seconds = time.perf_counter() - t0
            best = trace.best
            storage.write_trace(out / "trace.csv", trace)
            storage.write_schedule(out / "schedule.csv", best.schedule, case)
            summary = storage.summary_from_iteration(
                best, solve_seconds, len(trace.iterations)
            )
            summary["best_index"] = trace.best_index
            summary["termination_reason"] = trace.termination_reason
        else:
            runner = run_traditional if values["mode"] == "traditional" else run_linear_bdc
            result = runner(case, model, econ, soh=values["soh"], engine=values["engine"])
            solve_seconds = time.perf_counter() - t0
            storage.write_schedule(out / "schedule.csv", result.schedule, case)
            summary = storage.summary_from_iteration(result, solve_seconds, None)
        storage.write_summary(out / "summary.json", summary, manifest=manifest_name)
        storage.write_manifest(
            out / manifest_name,
            command=f"schedule --mode {values['mode']}",
            config={k: v for k, v in values.items() if k not in ("out_dir",)},
            inputs=inputs,
            seed=None,
            timings={"wall_seconds": time.perf_counter() - t0},
        )
    except InfeasibleCaseError as exc:
        for line in exc.report:
            click.echo(f"infeasible: {line}", err=True)
        sys.exit(EXIT_RUNTIME)
    except OSError as exc:
        _fail(EXIT_VALIDATION, f"cannot write output: {exc}")
    click.echo(
        f"{values['mode']}: total ${summary['total_cost']:.2f} "
        f"(operation ${summary['operation_cost']:.2f}, "
        f"degradation ${summary['degradation_cost']:.2f})"
    )


@main.command("report")
@click.option("--traditional", "trad_path", type=click.Path(), required=True)
@click.option("--linear", "linear_path", type=click.Path(), required=True)
@click.option("--lod", "lod_path", type=click.Path(), required=True)
@click.option("--trace", "trace_path", type=click.Path(), default=None,
              help="LOD trace CSV; echoed as the cost-vs-iteration series.")
@click.option("--out-dir", type=click.Path(), required=True)
def cmd_report(trad_path, linear_path, lod_path, trace_path, out_dir) -> None:
    """Merge per-strategy schedules into plot-ready comparison tables."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        schedules = {}
        for name, p in (("traditional", trad_path), ("linear", linear_path), ("lod", lod_path)):
            if not Path(p).exists():
                _fail(EXIT_VALIDATION, f"missing input: {p}")
            schedules[name] = storage.read_schedule(p)
        storage.write_bess_comparison(
            out / "bess_comparison.csv",
            schedules["traditional"],
            schedules["linear"],
            schedules["lod"],
        )
        if trace_path is not None:
            if not Path(trace_path).exists():
                _fail(EXIT_VALIDATION, f"missing input: {trace_path}")
            rows = storage.read_trace(trace_path)
            storage.write_cost_series(out / "cost_vs_iteration.csv", rows)
    except FileFormatError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except OSError as exc:
        _fail(EXIT_VALIDATION, f"cannot write output: {exc}")
    click.echo(f"wrote comparison tables to {out}")


if __name__ == "__main__":
    main()

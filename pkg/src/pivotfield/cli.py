"""Command-line pipeline: interpolate -> simulate -> place-sensors ->
estimate -> evaluate, with files as the only inter-stage contract.

Every command is deterministic given its inputs and --seed, and writes a
manifest.json capturing provenance (config hash, input digests, outputs,
timings). Exit codes: 0 success, 2 validation failure, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, dataio, metrics
from . import hydraulics as hyd
from . import observability as obs
from .dataio import ScenarioConfig, ValidationError
from .ekf import FilterState, run_assimilation
from .kriging import PARAMETER_NAMES, krige_field, krige_points
from .solver import StepFailure, simulate


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    version: str
    seed: int
    config_hash: str | None
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    started_utc: str = ""
    wall_s: float = 0.0


class _Run:
    """Tracks inputs/outputs and writes the manifest atomically at the end."""

    def __init__(self, command: str, out_dir: Path, seed: int, cfg_hash: str | None):
        self.out_dir = out_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(
            command=command,
            argv=sys.argv[1:],
            version=__version__,
            seed=seed,
            config_hash=cfg_hash,
            started_utc=datetime.now(timezone.utc).isoformat(),
        )
        self._t0 = time.perf_counter()

    def add_input(self, path) -> None:
        self.manifest.inputs[str(path)] = dataio.sha256_file(path)

    def out(self, name: str) -> Path:
        path = self.out_dir / name
        self.manifest.outputs.append(str(path))
        return path

    def finish(self) -> None:
        self.manifest.wall_s = time.perf_counter() - self._t0
        tmp = self.out_dir / ".manifest.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(asdict(self.manifest), fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, self.out_dir / "manifest.json")


def _load_config(args) -> ScenarioConfig:
    cfg = dataio.load_scenario(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "grid", None):
        parts = [int(p) for p in args.grid.replace("x", ",").split(",")]
        if len(parts) != 3:
            raise ValidationError([f"--grid must be NR,NAZ,NZ, got {args.grid!r}"])
        cfg.grid.n_r, cfg.grid.n_az, cfg.grid.n_z = parts
    return cfg


def _write_field_csv(path, grid, params) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_index", "r_m", "theta_rad", "z_m", *PARAMETER_NAMES])
        r, th, z = grid.positions()
        for i in range(grid.n_nodes):
            writer.writerow(
                [i, repr(float(r[i])), repr(float(th[i])), repr(float(z[i]))]
                + [repr(float(getattr(params, name)[i])) for name in PARAMETER_NAMES]
            )


def cmd_interpolate(args) -> int:
    cfg = _load_config(args)
    run = _Run("interpolate", Path(args.out_dir), cfg.seed, dataio.config_hash(cfg))
    run.add_input(args.config)
    samples_path = args.samples or cfg.soil.samples_path
    if not samples_path:
        raise ValidationError(["no soil samples: pass --samples or set soil.samples_path"])
    run.add_input(samples_path)
    samples = dataio.load_soil_samples(samples_path)
    grid = dataio.build_grid(cfg)
    params = krige_field(samples, grid, vertical_anisotropy=cfg.soil.vertical_anisotropy)
    _write_field_csv(run.out("parameter_field.csv"), grid, params)
    surface = grid.surface_indices()
    r, th, _ = grid.positions()
    for name in PARAMETER_NAMES:
        metrics.write_map_csv(
            run.out(f"surface_{name}.csv"),
            surface,
            r[surface],
            th[surface],
            getattr(params, name)[surface],
        )
    if args.check_exactness:
        points = np.array([(s.x, s.y, s.depth) for s in samples])
        worst = 0.0
        for name in PARAMETER_NAMES:
            pred = krige_points(
                samples, name, points, vertical_anisotropy=cfg.soil.vertical_anisotropy
            )
            truth = np.array([getattr(s.parameters, name) for s in samples])
            scale = max(np.abs(truth).max(), 1e-30)
            worst = max(worst, float(np.max(np.abs(pred - truth)) / scale))
        with open(run.out("exactness.json"), "w", encoding="utf-8") as fh:
            json.dump({"max_relative_error_at_samples": worst}, fh, indent=2)
            fh.write("\n")
    run.finish()
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    run = _Run("simulate", Path(args.out_dir), cfg.seed, dataio.config_hash(cfg))
    run.add_input(args.config)
    rng = np.random.default_rng(cfg.seed)
    model = dataio.build_model(cfg, rng, base_dir=Path(args.config).parent)
    x0 = dataio.draw_truth_x0(cfg, model.grid, rng)
    result = simulate(
        model,
        x0,
        horizon=cfg.horizon_days * 86400.0,
        dt_out=cfg.dt_out_s,
        process_noise_std=cfg.noise.process_std,
        rng=rng if cfg.noise.process_std > 0 else None,
    )
    dataio.write_trajectory_csv(run.out("truth_heads.csv"), result.times, result.heads)
    dataio.write_trajectory_csv(
        run.out("truth_water_content.csv"), result.times, result.water_content
    )
    run.finish()
    return 0


def cmd_place_sensors(args) -> int:
    cfg = _load_config(args)
    run = _Run("place-sensors", Path(args.out_dir), cfg.seed, dataio.config_hash(cfg))
    run.add_input(args.config)
    run.add_input(args.trajectory)
    rng = np.random.default_rng(cfg.seed)
    model = dataio.build_model(cfg, rng, base_dir=Path(args.config).parent)
    times, states = dataio.read_trajectory_csv(args.trajectory)
    if states.shape[1] != model.grid.n_nodes:
        raise ValidationError(
            [f"trajectory has {states.shape[1]} nodes, grid expects {model.grid.n_nodes}"]
        )
    candidates = None
    if args.candidates:
        run.add_input(args.candidates)
        candidates = dataio.read_layout_json(args.candidates).nodes
    report = obs.rank_nodes(
        model,
        times,
        states,
        sampling_period=cfg.dt_out_s,
        candidates=candidates,
        thin=args.thin,
        jobs=args.jobs,
    )
    layout = obs.select_sensors(report, args.k)
    obs.write_report_csv(report, model.grid, run.out("observability.csv"))
    obs.write_report_summary(report, args.k, run.out("observability_summary.json"))
    dataio.write_layout_json(
        layout, run.out("layout.json"), extra={"group_o_sum": report.group_sum(layout)}
    )
    run.finish()
    return 0


def _twin_measurements(truth_states, layout, r_std, rng, times):
    nodes = list(layout.nodes)
    series = []
    for k in range(1, truth_states.shape[0]):
        y = truth_states[k, nodes] + rng.normal(0.0, r_std, len(nodes))
        series.append((times[k], y))
    return series


def cmd_estimate(args) -> int:
    cfg = _load_config(args)
    run = _Run("estimate", Path(args.out_dir), cfg.seed, dataio.config_hash(cfg))
    run.add_input(args.config)
    run.add_input(args.layout)
    layout = dataio.read_layout_json(args.layout)
    rng = np.random.default_rng(cfg.seed)
    model = dataio.build_model(cfg, rng, base_dir=Path(args.config).parent)
    if max(layout.nodes) >= model.grid.n_nodes:
        raise ValidationError(
            [f"layout node {max(layout.nodes)} out of range for {model.grid.n_nodes} states"]
        )
    n_steps = int(round(cfg.horizon_days * 86400.0 / cfg.dt_out_s))

    meas_rng = np.random.default_rng(cfg.seed + 1)
    if args.truth:
        run.add_input(args.truth)
        times, truth = dataio.read_trajectory_csv(args.truth)
        n_steps = times.size - 1
        series = _twin_measurements(
            truth, layout, cfg.noise.measurement_std, meas_rng, times
        )
        x0 = dataio.draw_initial_estimate(cfg, truth[0], meas_rng)
    elif args.measurements:
        if not cfg.sensor_map_path:
            raise ValidationError(["measurement runs need sensor_map_path in the config"])
        run.add_input(args.measurements)
        sensor_map = dataio.load_sensor_map(
            dataio._resolve(Path(args.config).parent, cfg.sensor_map_path)
        )
        sensor_map.validate_against(model.grid)
        records = dataio.load_measurements(args.measurements)
        t_origin = datetime.fromisoformat(cfg.start_date).replace(tzinfo=timezone.utc)
        series, _ = dataio.measurement_series(
            records,
            sensor_map,
            layout,
            t_origin,
            cfg.dt_out_s,
            n_steps,
            value_kind=cfg.measurement_value_kind,
        )
        if cfg.initial.guess_low is None:
            raise ValidationError(
                ["real-data runs need initial.guess_low/guess_high in the config"]
            )
        x0 = meas_rng.uniform(
            cfg.initial.guess_low, cfg.initial.guess_high, model.grid.n_nodes
        )
    else:
        series = []
        x0 = dataio.draw_truth_x0(cfg, model.grid, meas_rng)

    fs = FilterState.initial(
        x0,
        n_sensors=len(layout),
        sigma0=cfg.filter.sigma0,
        process_std=cfg.noise.process_std,
        measurement_std=cfg.noise.measurement_std,
    )
    result = run_assimilation(
        model,
        fs,
        layout,
        series,
        t0=0.0,
        dt=cfg.dt_out_s,
        n_steps=n_steps,
        transition=cfg.filter.transition,
        joseph=cfg.filter.joseph,
    )
    dataio.write_trajectory_csv(run.out("estimate_heads.csv"), result.times, result.estimates)
    wc = np.stack([hyd.water_content(row, model.params) for row in result.estimates])
    dataio.write_trajectory_csv(run.out("estimate_water_content.csv"), result.times, wc)
    dataio.write_trajectory_csv(run.out("p_diag.csv"), result.times, result.p_diag)
    with open(run.out("diagnostics.json"), "w", encoding="utf-8") as fh:
        json.dump(
            {
                "updated_steps": result.updated_steps,
                "rejected_measurements": result.rejected_measurements,
                "innovation_count": len(result.innovations),
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    run.finish()
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    run = _Run("evaluate", Path(args.out_dir), cfg.seed, dataio.config_hash(cfg))
    run.add_input(args.config)
    run.add_input(args.truth)
    times_t, truth = dataio.read_trajectory_csv(args.truth)
    rng = np.random.default_rng(cfg.seed)
    model = dataio.build_model(cfg, rng, base_dir=Path(args.config).parent)
    grid, params = model.grid, model.params
    subset = None
    if args.subset:
        run.add_input(args.subset)
        subset = list(dataio.read_layout_json(args.subset).nodes)
    layer = args.layer if args.layer is not None else grid.n_z - 1

    summary = {}
    for label, est_path in zip(_estimate_labels(args.estimate), args.estimate):
        run.add_input(est_path)
        times_e, est = dataio.read_trajectory_csv(est_path)
        if est.shape != truth.shape:
            raise ValidationError(
                [f"{est_path}: shape {est.shape} does not match truth {truth.shape}"]
            )
        head_series = metrics.evaluate_run(times_t, truth, est, subset=subset)
        wc_truth = np.stack([hyd.water_content(r, params) for r in truth])
        wc_est = np.stack([hyd.water_content(r, params) for r in est])
        wc_series = metrics.evaluate_run(times_t, wc_truth, wc_est, subset=subset)
        if args.format == "json":
            for tag, series in (("head", head_series), ("water_content", wc_series)):
                with open(run.out(f"rmse_{tag}_{label}.json"), "w", encoding="utf-8") as fh:
                    json.dump(
                        {
                            "time_s": series.times.tolist(),
                            "rmse": series.rmse.tolist(),
                            "average": series.average,
                            "nrmse": series.nrmse,
                        },
                        fh,
                        indent=2,
                    )
                    fh.write("\n")
        else:
            metrics.write_metric_csv(head_series, run.out(f"rmse_head_{label}.csv"))
            metrics.write_metric_csv(
                wc_series, run.out(f"rmse_water_content_{label}.csv")
            )
        emap = metrics.error_map(truth[-1], est[-1], grid, layer, params=params)
        metrics.write_map_csv(
            run.out(f"error_map_{label}.csv"),
            emap.node_indices,
            emap.r,
            emap.theta,
            emap.error,
        )
        metrics.write_map_csv(
            run.out(f"water_content_map_{label}.csv"),
            emap.node_indices,
            emap.r,
            emap.theta,
            emap.wc_estimate,
        )
        summary[label] = {
            "average_rmse_head_m": head_series.average,
            "nrmse_head": head_series.nrmse,
            "average_rmse_water_content": wc_series.average,
            "nrmse_water_content": wc_series.nrmse,
        }
    with open(run.out("metrics_summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    run.finish()
    return 0


def _estimate_labels(paths) -> list[str]:
    labels = []
    for i, p in enumerate(paths):
        stem = Path(p).parent.name or Path(p).stem
        label = f"case{i + 1}_{stem}" if len(paths) > 1 else stem
        labels.append(label.replace(os.sep, "_"))
    return labels


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pivotfield",
        description="soil-water simulation, sensor placement and EKF estimation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario YAML")
    common.add_argument("--seed", type=int, default=None, help="override config seed")
    common.add_argument("--out-dir", default="out", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="internal parallelism bound")
    common.add_argument("--grid", default=None, help="override grid as NR,NAZ,NZ")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("interpolate", parents=[common], help="krige soil samples onto the grid")
    p.add_argument("--samples", default=None, help="soil sample CSV")
    p.add_argument("--check-exactness", action="store_true")
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("simulate", parents=[common], help="generate a truth trajectory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("place-sensors", parents=[common], help="rank nodes by observability")
    p.add_argument("--trajectory", required=True, help="truth heads CSV")
    p.add_argument("-k", type=int, default=12, help="sensors to select")
    p.add_argument("--thin", type=int, default=1, help="use every n-th snapshot")
    p.add_argument("--candidates", default=None, help="layout JSON restricting candidates")
    p.set_defaults(func=cmd_place_sensors)

    p = sub.add_parser("estimate", parents=[common], help="run the EKF")
    p.add_argument("--layout", required=True, help="sensor layout JSON")
    p.add_argument("--measurements", default=None, help="measurement CSV")
    p.add_argument("--truth", default=None, help="truth CSV for twin-experiment mode")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", parents=[common], help="metrics and maps")
    p.add_argument("--truth", required=True, help="truth or validation trajectory CSV")
    p.add_argument("--estimate", action="append", required=True, help="estimate CSV (repeatable)")
    p.add_argument("--subset", default=None, help="layout JSON of validation nodes")
    p.add_argument("--layer", type=int, default=None, help="z-layer for maps (default surface)")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error:\n{exc}", file=sys.stderr)
        return 2
    except (StepFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Ingestion, preprocessing and run-configuration plumbing.

Covers the unit conversions and normalization used on field data, the CSV
formats (soil samples, weather, tension logs, sensor maps, trajectories),
and the YAML run configuration with its validation and canonical hash.
Timestamps are UTC internally; readings are aligned to the nearest model
step and irregular rows are dropped and counted, never imputed.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from .grid import CylindricalGrid, ParameterField
from .hydraulics import LOAM, SoilParameters
from .kriging import SoilSample, krige_field
from .observability import SensorLayout
from .solver import BoundaryConditions, FieldModel, IrrigationSchedule, SinkField

__all__ = [
    "ValidationError",
    "tension_to_head",
    "minmax_normalize",
    "minmax_invert",
    "load_soil_samples",
    "save_soil_samples",
    "load_weather",
    "SensorMap",
    "load_sensor_map",
    "load_measurements",
    "measurement_series",
    "ScenarioConfig",
    "load_scenario",
    "save_scenario",
    "config_hash",
    "sha256_file",
    "table1_entries",
    "synthetic_soil_samples",
    "build_grid",
    "build_parameters",
    "build_schedule",
    "build_rain",
    "build_model",
    "draw_truth_x0",
    "draw_initial_estimate",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_layout_json",
    "read_layout_json",
]

# 1 kPa of suction corresponds to this many meters of water column
# (rho = 1000 kg/m3, g = 9.80665 m/s2).
M_PER_KPA = 1.0 / 9.80665

SAMPLE_COLUMNS = (
    "x_m",
    "y_m",
    "depth_m",
    "theta_s",
    "theta_r",
    "K_s_m_per_s",
    "alpha_per_m",
    "n",
)


class ValidationError(ValueError):
    """Itemized schema/consistency failures."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("validation failed:\n" + "\n".join(f"- {i}" for i in self.issues))


def tension_to_head(tension):
    """Soil water tension (kPa, >= 0) to pressure head (m, <= 0)."""
    arr = np.asarray(tension, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("tension must be non-negative")
    head = -arr * M_PER_KPA
    return float(head) if np.ndim(tension) == 0 else head


def minmax_normalize(series):
    """Scale a series to [0, 1]; returns (normalized, (min, max)).

    A constant (or single-element) series maps to all 0.5 with a warning,
    and the recorded metadata still inverts exactly.
    """
    arr = np.asarray(series, dtype=float)
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        warnings.warn(
            "constant series: min-max normalization is degenerate, returning 0.5",
            RuntimeWarning,
            stacklevel=2,
        )
        return np.full_like(arr, 0.5), (lo, hi)
    return (arr - lo) / (hi - lo), (lo, hi)


def minmax_invert(normalized, bounds):
    lo, hi = bounds
    arr = np.asarray(normalized, dtype=float)
    if hi == lo:
        return np.full_like(arr, lo)
    return lo + arr * (hi - lo)


def _read_csv_rows(path, required_columns):
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValidationError([f"{path}: empty file, header required"])
        missing = [c for c in required_columns if c not in reader.fieldnames]
        if missing:
            raise ValidationError(
                [f"{path}: missing required column {c!r}" for c in missing]
            )
        return list(reader)


def load_soil_samples(path) -> list[SoilSample]:
    rows = _read_csv_rows(path, SAMPLE_COLUMNS)
    samples = []
    issues = []
    for i, row in enumerate(rows):
        try:
            samples.append(
                SoilSample(
                    x=float(row["x_m"]),
                    y=float(row["y_m"]),
                    depth=float(row["depth_m"]),
                    parameters=SoilParameters(
                        theta_s=float(row["theta_s"]),
                        theta_r=float(row["theta_r"]),
                        K_s=float(row["K_s_m_per_s"]),
                        alpha=float(row["alpha_per_m"]),
                        n=float(row["n"]),
                    ),
                )
            )
        except ValueError as exc:
            issues.append(f"row {i + 2}: {exc}")
    if issues:
        raise ValidationError(issues)
    return samples


def save_soil_samples(samples, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SAMPLE_COLUMNS)
        for s in samples:
            p = s.parameters
            writer.writerow(
                [repr(float(v)) for v in (s.x, s.y, s.depth, p.theta_s, p.theta_r, p.K_s, p.alpha, p.n)]
            )


def load_weather(path) -> list[tuple[date, float]]:
    """Daily precipitation records: (date, mm)."""
    rows = _read_csv_rows(path, ("date", "precipitation_mm"))
    out = []
    issues = []
    for i, row in enumerate(rows):
        try:
            day = date.fromisoformat(row["date"].strip())
            mm = float(row["precipitation_mm"])
            if mm < 0.0 or not math.isfinite(mm):
                raise ValueError(f"bad precipitation {mm}")
            out.append((day, mm))
        except ValueError as exc:
            issues.append(f"row {i + 2}: {exc}")
    if issues:
        raise ValidationError(issues)
    return out


@dataclass(frozen=True)
class SensorMap:
    """sensor_id -> (grid node index, nominal depth in cm)."""

    entries: tuple[tuple[str, int, float], ...]

    def node_of(self, sensor_id: str) -> int:
        for sid, node, _ in self.entries:
            if sid == sensor_id:
                return node
        raise KeyError(sensor_id)

    def sensor_ids(self) -> list[str]:
        return [sid for sid, _, _ in self.entries]

    def validate_against(self, grid: CylindricalGrid) -> None:
        issues = []
        for sid, node, depth_cm in self.entries:
            if not 0 <= node < grid.n_nodes:
                issues.append(
                    f"sensor {sid!r} references node {node} >= {grid.n_nodes}"
                )
                continue
            _, _, z = grid.node_position(node)
            if abs((grid.depth - z) - depth_cm / 100.0) > 0.5 * grid.dz + 1e-9:
                issues.append(
                    f"sensor {sid!r}: node {node} sits at depth "
                    f"{grid.depth - z:.3f} m, label says {depth_cm / 100.0:.3f} m"
                )
        if issues:
            raise ValidationError(issues)


def load_sensor_map(path) -> SensorMap:
    rows = _read_csv_rows(path, ("sensor_id", "node_index", "depth_cm"))
    entries = []
    issues = []
    seen = set()
    for i, row in enumerate(rows):
        sid = row["sensor_id"].strip()
        if sid in seen:
            issues.append(f"row {i + 2}: duplicate sensor id {sid!r}")
            continue
        seen.add(sid)
        try:
            entries.append((sid, int(row["node_index"]), float(row["depth_cm"])))
        except ValueError as exc:
            issues.append(f"row {i + 2}: {exc}")
    if issues:
        raise ValidationError(issues)
    return SensorMap(entries=tuple(entries))


def _parse_timestamp(text: str) -> datetime:
    ts = datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def load_measurements(path) -> list[tuple[datetime, str, float]]:
    """Raw (timestamp, sensor_id, value) records; unparseable rows dropped."""
    rows = _read_csv_rows(path, ("timestamp", "sensor_id", "value"))
    records = []
    dropped = 0
    for row in rows:
        try:
            ts = _parse_timestamp(row["timestamp"])
            value = float(row["value"])
            if not math.isfinite(value):
                raise ValueError("non-finite value")
            records.append((ts, row["sensor_id"].strip(), value))
        except ValueError:
            dropped += 1
    if dropped:
        warnings.warn(f"dropped {dropped} unparseable measurement rows", RuntimeWarning)
    records.sort(key=lambda r: r[0])
    return records


def measurement_series(
    records,
    sensor_map: SensorMap,
    layout: SensorLayout,
    t_origin: datetime,
    dt: float,
    n_steps: int,
    value_kind: str = "head_m",
):
    """Align raw records to filter steps for the given layout.

    Returns (series, dropped) where series is a sorted list of
    (t_seconds, values) with NaN for sensors without a reading, and dropped
    counts records outside the horizon, from unmapped sensors, or from
    sensors not in the layout. ``value_kind`` is head_m or tension_kpa.
    """
    if value_kind not in ("head_m", "tension_kpa"):
        raise ValueError(f"value_kind must be head_m|tension_kpa, got {value_kind!r}")
    if t_origin.tzinfo is None:
        t_origin = t_origin.replace(tzinfo=timezone.utc)
    node_by_sensor = {sid: node for sid, node, _ in sensor_map.entries}
    slot_by_node = {node: i for i, node in enumerate(layout.nodes)}
    by_step: dict[int, np.ndarray] = {}
    dropped = 0
    for ts, sid, value in records:
        node = node_by_sensor.get(sid)
        if node is None or node not in slot_by_node:
            dropped += 1
            continue
        t_rel = (ts - t_origin).total_seconds()
        k = int(round(t_rel / dt))
        if k < 0 or k > n_steps or abs(t_rel - k * dt) > 0.5 * dt:
            dropped += 1
            continue
        if value_kind == "tension_kpa":
            if value < 0.0:
                dropped += 1
                continue
            value = tension_to_head(value)
        vec = by_step.setdefault(k, np.full(len(layout), np.nan))
        vec[slot_by_node[node]] = value
    series = [(k * dt, by_step[k]) for k in sorted(by_step)]
    if dropped:
        warnings.warn(
            f"dropped {dropped} measurements (unmapped sensor or off-horizon)",
            RuntimeWarning,
        )
    return series, dropped


# --------------------------------------------------------------------------
# Run configuration
# --------------------------------------------------------------------------


@dataclass
class GridConfig:
    n_r: int = 6
    n_az: int = 40
    n_z: int = 22
    radius_m: float = 50.0
    depth_m: float = 0.75


@dataclass
class SoilConfig:
    mode: str = "uniform"  # uniform | samples | synthetic
    uniform: dict = field(
        default_factory=lambda: {
            "theta_s": LOAM.theta_s,
            "theta_r": LOAM.theta_r,
            "K_s": LOAM.K_s,
            "alpha": LOAM.alpha,
            "n": LOAM.n,
        }
    )
    samples_path: str | None = None
    synthetic: dict = field(
        default_factory=lambda: {"n_per_band": 20, "relative_amplitude": 0.15}
    )
    variogram_kind: str = "exponential"
    vertical_anisotropy: float = 0.05


@dataclass
class IrrigationConfig:
    # daily constant-rate blocks (the simulated-study forcing)
    daily: dict | None = field(
        default_factory=lambda: {"rate_mm_per_day": 3.6, "hours_on": 8.0, "start_hour": 0.0}
    )
    # explicit entries: {start_s, end_s, rate_m_per_s} or {date, amount_mm[, start_hour, duration_h]}
    entries: list = field(default_factory=list)
    pivot: dict | None = None


@dataclass
class NoiseConfig:
    process_std: float = 1e-6
    measurement_std: float = 6e-2


@dataclass
class InitialConfig:
    truth_low: float = -0.95
    truth_high: float = -0.8
    mismatch_fraction: float = 0.2
    # set both to draw the first estimate independently of the truth
    # (the real-data scenarios use [-6, -5])
    guess_low: float | None = None
    guess_high: float | None = None


@dataclass
class FilterConfig:
    # scenario-level tuning; the raw filter default stays at the very large
    # "uninformative" value, but assimilation runs behave far better with a
    # prior that merely dominates the expected initial error
    sigma0: float = 1.0
    transition: str = "expm"  # expm | euler
    joseph: bool = False


@dataclass
class ScenarioConfig:
    seed: int = 0
    start_date: str = "2019-06-19"
    horizon_days: float = 6.0
    dt_out_s: float = 720.0
    grid: GridConfig = field(default_factory=GridConfig)
    soil: SoilConfig = field(default_factory=SoilConfig)
    boundary_bottom: str = "free-drainage"
    irrigation: IrrigationConfig = field(default_factory=IrrigationConfig)
    weather_path: str | None = None
    net_surface_flux_m_per_s: float = 0.0
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    sensor_map_path: str | None = None
    measurement_value_kind: str = "head_m"

    def to_dict(self) -> dict:
        return asdict(self)


_SECTION_TYPES = {
    "grid": GridConfig,
    "soil": SoilConfig,
    "irrigation": IrrigationConfig,
    "noise": NoiseConfig,
    "initial": InitialConfig,
    "filter": FilterConfig,
}


def _config_from_dict(data: dict) -> ScenarioConfig:
    issues = []
    if not isinstance(data, dict):
        raise ValidationError(["top level must be a mapping"])
    known = {f.name for f in ScenarioConfig.__dataclass_fields__.values()}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            issues.append(f"unknown key {key!r}")
            continue
        if key in _SECTION_TYPES:
            cls = _SECTION_TYPES[key]
            if not isinstance(value, dict):
                issues.append(f"section {key!r} must be a mapping")
                continue
            section_known = {f.name for f in cls.__dataclass_fields__.values()}
            bad = set(value) - section_known
            if bad:
                issues.extend(f"unknown key {key}.{b}" for b in sorted(bad))
            try:
                kwargs[key] = cls(**{k: v for k, v in value.items() if k in section_known})
            except TypeError as exc:
                issues.append(f"section {key!r}: {exc}")
        else:
            kwargs[key] = value
    if issues:
        raise ValidationError(issues)
    cfg = ScenarioConfig(**kwargs)
    # YAML parses unquoted ISO dates into date objects; keep strings inside
    if isinstance(cfg.start_date, date):
        cfg.start_date = cfg.start_date.isoformat()
    for entry in cfg.irrigation.entries:
        if isinstance(entry, dict) and isinstance(entry.get("date"), date):
            entry["date"] = entry["date"].isoformat()
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: ScenarioConfig) -> None:
    issues = []
    if cfg.horizon_days <= 0.0:
        issues.append(f"horizon_days must be positive, got {cfg.horizon_days}")
    if cfg.dt_out_s <= 0.0:
        issues.append(f"dt_out_s must be positive, got {cfg.dt_out_s}")
    try:
        date.fromisoformat(cfg.start_date)
    except ValueError:
        issues.append(f"start_date {cfg.start_date!r} is not an ISO-8601 date")
    g = cfg.grid
    if g.n_r < 1 or g.n_az < 2 or g.n_z < 2:
        issues.append(f"grid counts ({g.n_r}, {g.n_az}, {g.n_z}) invalid")
    if g.radius_m <= 0 or g.depth_m <= 0:
        issues.append("grid radius_m and depth_m must be positive")
    if cfg.soil.mode not in ("uniform", "samples", "synthetic"):
        issues.append(f"soil.mode {cfg.soil.mode!r} unknown")
    if cfg.soil.mode == "samples" and not cfg.soil.samples_path:
        issues.append("soil.mode=samples requires soil.samples_path")
    if cfg.boundary_bottom not in ("free-drainage", "no-total-flux"):
        issues.append(f"boundary_bottom {cfg.boundary_bottom!r} unknown")
    if cfg.noise.process_std < 0 or cfg.noise.measurement_std <= 0:
        issues.append("noise stds must be >= 0 (measurement strictly positive)")
    if cfg.initial.truth_low >= cfg.initial.truth_high:
        issues.append("initial.truth_low must be below truth_high")
    if (cfg.initial.guess_low is None) != (cfg.initial.guess_high is None):
        issues.append("initial.guess_low and guess_high must be set together")
    if cfg.filter.transition not in ("expm", "euler"):
        issues.append(f"filter.transition {cfg.filter.transition!r} unknown")
    if cfg.filter.sigma0 <= 0:
        issues.append("filter.sigma0 must be positive")
    if cfg.measurement_value_kind not in ("head_m", "tension_kpa"):
        issues.append(f"measurement_value_kind {cfg.measurement_value_kind!r} unknown")
    for i, entry in enumerate(cfg.irrigation.entries):
        if not isinstance(entry, dict):
            issues.append(f"irrigation.entries[{i}] must be a mapping")
            continue
        timed = {"start_s", "end_s", "rate_m_per_s"} <= set(entry)
        dated = {"date", "amount_mm"} <= set(entry)
        if not (timed or dated):
            issues.append(
                f"irrigation.entries[{i}] needs start_s/end_s/rate_m_per_s or date/amount_mm"
            )
    if issues:
        raise ValidationError(issues)


def load_scenario(path, validate_files: bool = True) -> ScenarioConfig:
    """Load and cross-validate a YAML run configuration."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    cfg = _config_from_dict(data)
    if validate_files:
        issues = []
        base = path.parent
        for name in ("samples_path", "weather_path", "sensor_map_path"):
            rel = getattr(cfg.soil, "samples_path", None) if name == "samples_path" else getattr(cfg, name)
            if rel is not None and not (base / rel).exists() and not Path(rel).exists():
                issues.append(f"{name} {rel!r} does not exist")
        if issues:
            raise ValidationError(issues)
        if cfg.sensor_map_path:
            sensor_map = load_sensor_map(_resolve(base, cfg.sensor_map_path))
            sensor_map.validate_against(build_grid(cfg))
    return cfg


def _resolve(base: Path, rel: str) -> Path:
    p = Path(rel)
    return p if p.is_absolute() or p.exists() else base / rel


def save_scenario(cfg: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=True, default_flow_style=False)


def config_hash(cfg: ScenarioConfig) -> str:
    canon = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def table1_entries() -> list[dict]:
    """The 2019 field irrigation events (date, amount in mm)."""
    return [
        {"date": "2019-07-04", "amount_mm": 1.81},
        {"date": "2019-07-18", "amount_mm": 1.58},
        {"date": "2019-07-26", "amount_mm": 1.58},
        {"date": "2019-07-30", "amount_mm": 1.51},
        {"date": "2019-08-06", "amount_mm": 3.16},
    ]


# --------------------------------------------------------------------------
# Scenario materialization
# --------------------------------------------------------------------------


def build_grid(cfg: ScenarioConfig) -> CylindricalGrid:
    g = cfg.grid
    return CylindricalGrid(
        n_r=g.n_r, n_az=g.n_az, n_z=g.n_z, radius=g.radius_m, depth=g.depth_m
    )


def synthetic_soil_samples(
    radius: float,
    depth: float,
    rng: np.random.Generator,
    n_per_band: int = 20,
    base: SoilParameters = LOAM,
    relative_amplitude: float = 0.15,
) -> list[SoilSample]:
    """Smoothly heterogeneous parameter samples in three depth bands.

    Each parameter rides its own long-wavelength sinusoid across the field
    (K_s varied on a log scale) plus a little uncorrelated noise, mimicking
    texture-driven heterogeneity.
    """
    n_total = 3 * n_per_band
    r = radius * 0.97 * np.sqrt(rng.uniform(0.02, 1.0, n_total))
    th = rng.uniform(0.0, 2.0 * np.pi, n_total)
    x, y = r * np.cos(th), r * np.sin(th)
    band = np.repeat(np.arange(3), n_per_band)
    depths = (band + rng.uniform(0.15, 0.85, n_total)) * (depth / 3.0)

    base_values = {
        "theta_s": base.theta_s,
        "theta_r": base.theta_r,
        "K_s": base.K_s,
        "alpha": base.alpha,
        "n": base.n,
    }
    fields = {}
    for name, value in base_values.items():
        phase = rng.uniform(0.0, 2.0 * np.pi)
        orient = rng.uniform(0.0, np.pi)
        wavelength = rng.uniform(1.2, 2.5) * radius
        ripple = np.sin(
            2.0 * np.pi * (x * np.cos(orient) + y * np.sin(orient)) / wavelength + phase
        )
        bump = relative_amplitude * ripple + 0.1 * relative_amplitude * rng.standard_normal(n_total)
        if name == "K_s":
            fields[name] = value * np.exp(2.0 * bump)
        else:
            fields[name] = value * (1.0 + bump)

    # keep every sample physically valid
    theta_s = np.clip(fields["theta_s"], 0.2, 0.6)
    theta_r = np.clip(fields["theta_r"], 0.01, theta_s - 0.05)
    nn = np.maximum(fields["n"], 1.1)
    samples = [
        SoilSample(
            x=float(x[i]),
            y=float(y[i]),
            depth=float(depths[i]),
            parameters=SoilParameters(
                theta_s=float(theta_s[i]),
                theta_r=float(theta_r[i]),
                K_s=float(fields["K_s"][i]),
                alpha=float(fields["alpha"][i]),
                n=float(nn[i]),
            ),
        )
        for i in range(n_total)
    ]
    return samples


def build_parameters(
    cfg: ScenarioConfig, grid: CylindricalGrid, rng: np.random.Generator, base_dir=None
) -> ParameterField:
    soil = cfg.soil
    if soil.mode == "uniform":
        p = SoilParameters(**soil.uniform)
        return ParameterField.uniform(grid, p)
    if soil.mode == "samples":
        path = _resolve(Path(base_dir or "."), soil.samples_path)
        samples = load_soil_samples(path)
    else:  # synthetic
        samples = synthetic_soil_samples(
            grid.radius,
            grid.depth,
            rng,
            n_per_band=int(soil.synthetic.get("n_per_band", 20)),
            relative_amplitude=float(soil.synthetic.get("relative_amplitude", 0.15)),
        )
    return krige_field(samples, grid, vertical_anisotropy=soil.vertical_anisotropy)


def _dated_entry_to_block(entry: dict, start: date) -> tuple[float, float, float]:
    day = date.fromisoformat(str(entry["date"]))
    offset_days = (day - start).days
    start_hour = float(entry.get("start_hour", 0.0))
    duration_h = float(entry.get("duration_h", 8.0))
    t0 = offset_days * 86400.0 + start_hour * 3600.0
    rate = float(entry["amount_mm"]) / 1000.0 / (duration_h * 3600.0)
    return (t0, t0 + duration_h * 3600.0, rate)


def build_schedule(cfg: ScenarioConfig) -> IrrigationSchedule:
    irr = cfg.irrigation
    start = date.fromisoformat(cfg.start_date)
    entries: list[tuple[float, float, float]] = []
    if irr.daily:
        rate = float(irr.daily.get("rate_mm_per_day", 0.0)) / 1000.0 / 86400.0
        hours_on = float(irr.daily.get("hours_on", 8.0))
        start_hour = float(irr.daily.get("start_hour", 0.0))
        n_days = int(math.ceil(cfg.horizon_days))
        if rate > 0.0:
            entries.extend(
                (
                    d * 86400.0 + start_hour * 3600.0,
                    d * 86400.0 + (start_hour + hours_on) * 3600.0,
                    rate,
                )
                for d in range(n_days)
            )
    for entry in irr.entries:
        if "date" in entry:
            entries.append(_dated_entry_to_block(entry, start))
        else:
            entries.append(
                (float(entry["start_s"]), float(entry["end_s"]), float(entry["rate_m_per_s"]))
            )
    pivot_kwargs = {}
    if irr.pivot:
        pivot_kwargs = {
            "pivot_angular_speed": float(irr.pivot["angular_speed_rad_per_s"]),
            "pivot_sector_width": (
                float(irr.pivot["sector_width_rad"])
                if irr.pivot.get("sector_width_rad") is not None
                else None
            ),
            "pivot_start_angle": float(irr.pivot.get("start_angle_rad", 0.0)),
        }
    return IrrigationSchedule(entries=tuple(entries), **pivot_kwargs)


def build_rain(cfg: ScenarioConfig, base_dir=None) -> IrrigationSchedule | None:
    """Daily precipitation as a uniform top flux spread over each day."""
    if not cfg.weather_path:
        return None
    records = load_weather(_resolve(Path(base_dir or "."), cfg.weather_path))
    start = date.fromisoformat(cfg.start_date)
    entries = []
    for day, mm in records:
        if mm <= 0.0:
            continue
        offset = (day - start).days
        entries.append((offset * 86400.0, (offset + 1) * 86400.0, mm / 1000.0 / 86400.0))
    return IrrigationSchedule(entries=tuple(entries))


def build_model(
    cfg: ScenarioConfig, rng: np.random.Generator, base_dir=None
) -> FieldModel:
    grid = build_grid(cfg)
    params = build_parameters(cfg, grid, rng, base_dir=base_dir)
    return FieldModel(
        grid=grid,
        params=params,
        bc=BoundaryConditions(bottom=cfg.boundary_bottom),
        schedule=build_schedule(cfg),
        rain=build_rain(cfg, base_dir=base_dir),
        sink=SinkField.zeros(grid),
        net_surface_flux=cfg.net_surface_flux_m_per_s,
    )


def draw_truth_x0(cfg: ScenarioConfig, grid: CylindricalGrid, rng: np.random.Generator):
    return rng.uniform(cfg.initial.truth_low, cfg.initial.truth_high, grid.n_nodes)


def draw_initial_estimate(cfg: ScenarioConfig, truth_x0, rng: np.random.Generator):
    init = cfg.initial
    if init.guess_low is not None:
        return rng.uniform(init.guess_low, init.guess_high, np.asarray(truth_x0).size)
    return (1.0 + init.mismatch_fraction) * np.asarray(truth_x0, dtype=float)


# --------------------------------------------------------------------------
# Trajectory and layout files
# --------------------------------------------------------------------------


def write_trajectory_csv(path, times, states) -> None:
    states = np.asarray(states, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s"] + [f"node_{i}" for i in range(states.shape[1])])
        for t, row in zip(times, states):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def read_trajectory_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "time_s":
            raise ValidationError([f"{path}: expected a trajectory CSV with time_s first"])
        times, rows = [], []
        for rec in reader:
            times.append(float(rec[0]))
            rows.append([float(v) for v in rec[1:]])
    return np.asarray(times), np.asarray(rows)


def write_layout_json(layout: SensorLayout, path, extra: dict | None = None) -> None:
    payload = {"nodes": list(layout.nodes)}
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_layout_json(path) -> SensorLayout:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if "nodes" not in payload:
        raise ValidationError([f"{path}: layout JSON must contain 'nodes'"])
    return SensorLayout(nodes=tuple(int(i) for i in payload["nodes"]))

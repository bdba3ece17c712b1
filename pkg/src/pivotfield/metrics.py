"""Estimation-quality metrics and layer map products.

RMSE is computed per time instant over a node subset, averaged over the run,
and normalized by the magnitude of the mean reference value (NRMSE). For
real-data scenarios the subset should contain only validation sensors that
were excluded from assimilation. Error maps carry the signed per-node
deviation (and its magnitude) on one z-layer, optionally converted to water
content.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import hydraulics as hyd
from .grid import CylindricalGrid, ParameterField

__all__ = [
    "MetricSeries",
    "rmse_at",
    "nrmse",
    "evaluate_run",
    "ErrorMap",
    "error_map",
    "write_metric_csv",
    "write_map_csv",
]


@dataclass
class MetricSeries:
    times: np.ndarray  # (n_instants,)
    rmse: np.ndarray  # (n_instants,)
    average: float
    reference_mean: float  # mean of the reference values over the run
    n_instants: int

    @property
    def nrmse(self) -> float:
        return nrmse(self)


def rmse_at(actual: np.ndarray, estimate: np.ndarray, subset=None) -> float:
    """Root mean square deviation over a node subset at one instant."""
    actual = np.asarray(actual, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if actual.shape != estimate.shape:
        raise ValueError(f"shape mismatch {actual.shape} vs {estimate.shape}")
    if subset is not None:
        subset = np.asarray(subset, dtype=int)
        if subset.size == 0:
            raise ValueError("node subset must be non-empty")
        actual = actual[subset]
        estimate = estimate[subset]
    return float(np.sqrt(np.mean((estimate - actual) ** 2)))


def nrmse(series: MetricSeries) -> float:
    """Average RMSE divided by |mean reference value|."""
    if series.reference_mean == 0.0:
        raise ValueError("reference mean is zero; NRMSE undefined")
    return series.average / abs(series.reference_mean)


def evaluate_run(times, actual, estimates, subset=None) -> MetricSeries:
    """Per-instant RMSE series between two trajectories of equal shape."""
    times = np.asarray(times, dtype=float)
    actual = np.asarray(actual, dtype=float)
    estimates = np.asarray(estimates, dtype=float)
    if actual.shape != estimates.shape or actual.shape[0] != times.size:
        raise ValueError("trajectories must share shape (n_instants, n_nodes)")
    cols = np.asarray(subset, dtype=int) if subset is not None else slice(None)
    if subset is not None and np.asarray(subset).size == 0:
        raise ValueError("node subset must be non-empty")
    series = np.sqrt(np.mean((estimates[:, cols] - actual[:, cols]) ** 2, axis=1))
    return MetricSeries(
        times=times,
        rmse=series,
        average=float(series.mean()),
        reference_mean=float(np.mean(actual[:, cols])),
        n_instants=times.size,
    )


@dataclass
class ErrorMap:
    layer: int
    node_indices: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    error: np.ndarray  # signed, actual - estimate
    abs_error: np.ndarray
    wc_actual: np.ndarray | None = None
    wc_estimate: np.ndarray | None = None
    wc_error: np.ndarray | None = None


def error_map(
    actual: np.ndarray,
    estimate: np.ndarray,
    grid: CylindricalGrid,
    layer: int,
    params: ParameterField | None = None,
) -> ErrorMap:
    """Signed and absolute per-node deviation on one z-layer.

    With a parameter field the states are also converted to water content
    so the map can be rendered in theta units.
    """
    actual = np.asarray(actual, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if actual.shape != (grid.n_nodes,) or estimate.shape != (grid.n_nodes,):
        raise ValueError("states must be full-length vectors")
    nodes = grid.layer_indices(layer)
    rs, ths, _ = grid.positions()
    err = actual[nodes] - estimate[nodes]
    out = ErrorMap(
        layer=layer,
        node_indices=nodes,
        r=rs[nodes],
        theta=ths[nodes],
        error=err,
        abs_error=np.abs(err),
    )
    if params is not None:
        sub = ParameterField(
            theta_s=params.theta_s[nodes],
            theta_r=params.theta_r[nodes],
            K_s=params.K_s[nodes],
            alpha=params.alpha[nodes],
            n=params.n[nodes],
        )
        out.wc_actual = hyd.water_content(actual[nodes], sub)
        out.wc_estimate = hyd.water_content(estimate[nodes], sub)
        out.wc_error = out.wc_actual - out.wc_estimate
    return out


def write_metric_csv(series: MetricSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "rmse"])
        for t, v in zip(series.times, series.rmse):
            writer.writerow([repr(float(t)), repr(float(v))])


def write_map_csv(path, node_indices, r, theta, values) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_index", "r_m", "theta_rad", "value"])
        for i, rr, th, v in zip(node_indices, r, theta, values):
            writer.writerow([int(i), repr(float(rr)), repr(float(th)), repr(float(v))])

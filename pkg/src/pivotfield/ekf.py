"""Discrete-time extended Kalman filter over the field model.

The filter alternates a prediction through the nonlinear model with a linear
measurement update on directly measured pressure heads. Covariance is
propagated with the discrete transition Phi = exp(A dt) built from the
analytic model Jacobian at the pre-step estimate (a first-order
Phi = I + A dt is selectable for speed). Q and R are per-step covariances:
prediction adds Q once per filter step, no dt scaling.

Measurements outside a plausibility band (default head in [-100, 0.1] m)
are rejected before the update, with a running count kept in the result.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .observability import SensorLayout, discretize_jacobian

__all__ = [
    "FilterState",
    "AssimilationResult",
    "predict",
    "update",
    "run_assimilation",
    "PLAUSIBLE_HEAD_BAND",
]

TRANSITIONS = ("expm", "euler")

#: Heads outside this band (m) are treated as sensor glitches and dropped.
PLAUSIBLE_HEAD_BAND = (-100.0, 0.1)


@dataclass
class FilterState:
    x: np.ndarray  # estimate, length N
    P: np.ndarray  # covariance, (N, N)
    Q: np.ndarray  # process covariance, (N, N)
    R: np.ndarray  # measurement covariance, (n_sensors, n_sensors)

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.P = np.asarray(self.P, dtype=float)
        self.Q = np.asarray(self.Q, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        n = self.x.size
        if self.P.shape != (n, n) or self.Q.shape != (n, n):
            raise ValueError("P and Q must be square and conformable with x")

    @classmethod
    def initial(
        cls,
        x0: np.ndarray,
        n_sensors: int,
        sigma0: float = 1e3,
        process_std: float = 1e-6,
        measurement_std: float = 6e-2,
    ) -> "FilterState":
        """Diagonal initialization; sigma0 stands in for the 'infinite'
        initial covariance (infinity is not representable)."""
        x0 = np.asarray(x0, dtype=float)
        n = x0.size
        return cls(
            x=x0.copy(),
            P=sigma0**2 * np.eye(n),
            Q=process_std**2 * np.eye(n),
            R=measurement_std**2 * np.eye(n_sensors),
        )


def _symmetrize(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p.T)


def _transition_matrix(a, dt: float, transition: str) -> np.ndarray:
    if transition not in TRANSITIONS:
        raise ValueError(f"transition must be one of {TRANSITIONS}, got {transition!r}")
    if transition == "euler":
        if sp.issparse(a):
            a = a.toarray()
        a = np.asarray(a, dtype=float)
        return np.eye(a.shape[0]) + a * dt
    # same discretization the observability analysis uses
    return discretize_jacobian(a, dt)


def predict(
    fs: FilterState, model, t: float, dt: float, transition: str = "expm"
) -> FilterState:
    """One prediction: x through the model step, P through Phi P Phi^T + Q.

    The Jacobian is evaluated at the pre-step estimate.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    a = model.jacobian(t, fs.x)
    phi = _transition_matrix(a, dt, transition)
    x_new = model.step(fs.x, t, dt)
    p_new = _symmetrize(phi @ fs.P @ phi.T + fs.Q)
    return FilterState(x=x_new, P=p_new, Q=fs.Q, R=fs.R)


def update(
    fs: FilterState, y: np.ndarray, layout: SensorLayout, joseph: bool = False
) -> FilterState:
    """Measurement update with gain G = P C^T (C P C^T + R)^-1."""
    y = np.asarray(y, dtype=float)
    nodes = list(layout.nodes)
    if y.size != len(nodes):
        raise ValueError(f"got {y.size} measurements for {len(nodes)} sensors")
    if fs.R.shape != (len(nodes), len(nodes)):
        raise ValueError("R is not conformable with the sensor layout")
    if max(nodes) >= fs.x.size:
        raise ValueError("sensor node out of range for the state")

    pct = fs.P[:, nodes]  # P C^T
    s = pct[nodes, :] + fs.R  # C P C^T + R
    try:
        gain = np.linalg.solve(s.T, pct.T).T
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"singular innovation covariance for sensors at nodes {nodes}"
        ) from exc
    innovation = y - fs.x[nodes]
    x_new = fs.x + gain @ innovation
    if joseph:
        t1 = fs.P - gain @ pct.T
        p_new = t1 - t1[:, nodes] @ gain.T + gain @ fs.R @ gain.T
    else:
        p_new = fs.P - gain @ pct.T  # (I - G C) P
    return FilterState(x=x_new, P=_symmetrize(p_new), Q=fs.Q, R=fs.R)


@dataclass
class AssimilationResult:
    times: np.ndarray  # (n_steps + 1,)
    estimates: np.ndarray  # (n_steps + 1, N)
    p_diag: np.ndarray  # (n_steps + 1, N)
    innovations: list = field(default_factory=list)  # (t, node tuple, residual array)
    updated_steps: int = 0
    rejected_measurements: int = 0


def run_assimilation(
    model,
    fs: FilterState,
    layout: SensorLayout,
    measurements,
    t0: float,
    dt: float,
    n_steps: int,
    transition: str = "expm",
    joseph: bool = False,
    plausibility_band: tuple[float, float] = PLAUSIBLE_HEAD_BAND,
) -> AssimilationResult:
    """Predict every model step; update whenever measurements are available.

    ``measurements`` is a sequence of (time, values) with values aligned to
    the layout order; NaN marks a sensor with no reading at that time.
    Times must be sorted, lie within half a step of a step instant and not
    precede t0. Steps without any usable measurement run prediction only.
    """
    if dt <= 0.0 or n_steps < 0:
        raise ValueError("need dt > 0 and n_steps >= 0")
    meas = [(float(t), np.asarray(v, dtype=float)) for t, v in measurements]
    times_m = np.array([t for t, _ in meas])
    if times_m.size:
        if np.any(np.diff(times_m) < 0):
            raise ValueError("measurement timestamps must be sorted")
        if times_m[0] < t0 - 0.5 * dt:
            raise ValueError(
                f"measurement at t={times_m[0]} precedes the filter start {t0}"
            )

    times = t0 + dt * np.arange(n_steps + 1)
    n = fs.x.size
    estimates = np.empty((n_steps + 1, n))
    p_diag = np.empty((n_steps + 1, n))
    estimates[0] = fs.x
    p_diag[0] = np.diag(fs.P)
    result = AssimilationResult(times=times, estimates=estimates, p_diag=p_diag)

    by_step: dict[int, np.ndarray] = {}
    for t, v in meas:
        k = int(round((t - t0) / dt))
        if abs(t - times[min(k, n_steps)]) > 0.5 * dt + 1e-9:
            raise ValueError(f"measurement at t={t} does not align with any step")
        if k > n_steps:
            continue
        if k in by_step:
            prev = by_step[k]
            by_step[k] = np.where(np.isnan(v), prev, v)
        else:
            by_step[k] = v

    lo, hi = plausibility_band
    for k in range(1, n_steps + 1):
        fs = predict(fs, model, times[k - 1], dt, transition=transition)
        y = by_step.get(k)
        if y is not None:
            usable = np.isfinite(y)
            plausible = usable & (y >= lo) & (y <= hi)
            result.rejected_measurements += int(np.sum(usable & ~plausible))
            if np.any(plausible):
                idx = np.nonzero(plausible)[0]
                sub_layout = SensorLayout(tuple(layout.nodes[i] for i in idx))
                innovation = y[idx] - fs.x[list(sub_layout.nodes)]
                sub_r = fs.R[np.ix_(idx, idx)]
                sub_fs = FilterState(x=fs.x, P=fs.P, Q=fs.Q, R=sub_r)
                sub_fs = update(sub_fs, y[idx], sub_layout, joseph=joseph)
                fs = FilterState(x=sub_fs.x, P=sub_fs.P, Q=fs.Q, R=fs.R)
                result.innovations.append((times[k], sub_layout.nodes, innovation))
                result.updated_steps += 1
        estimates[k] = fs.x
        p_diag[k] = np.diag(fs.P)
    return result

"""Modal degree of observability and sensor ranking.

For each trajectory snapshot the continuous Jacobian A is discretized to
A_d = exp(A T) (T = sampling period) and every node i receives the score

    O_i = sum_j (1 - |lambda_j|^2) |v_ij|^2

over the eigenpairs (lambda_j, v_j) of A_d with eigenvectors normalized to
unit Euclidean norm. Moduli are used so the score stays real when the
nonsymmetric discretization produces complex pairs. Per-node scores are
averaged over all snapshots and candidates are ranked by descending average
(ties broken by ascending node index); sensors go to the top-ranked nodes.

Cost note: every snapshot needs a dense matrix exponential plus a full
eigendecomposition, both O(n^3). The full 6x40x22 field (n = 5280) runs at
roughly a minute per snapshot and ~0.7 GB of workspace, so thin the
snapshot set (``thin``) and parallelize (``jobs``) there; reduced grids run
interactively.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import CylindricalGrid

__all__ = [
    "SensorLayout",
    "ObservabilityReport",
    "discretize_jacobian",
    "modal_degree",
    "rank_nodes",
    "rank_jacobians",
    "select_sensors",
    "write_report_csv",
    "write_report_summary",
]


@dataclass(frozen=True)
class SensorLayout:
    """Ordered measured-node indices; row k of C selects node nodes[k]."""

    nodes: tuple[int, ...]

    def __post_init__(self) -> None:
        nodes = tuple(int(i) for i in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if len(set(nodes)) != len(nodes):
            raise ValueError("sensor nodes must be distinct")
        if any(i < 0 for i in nodes):
            raise ValueError("sensor nodes must be non-negative")

    def __len__(self) -> int:
        return len(self.nodes)

    def selection_matrix(self, n_states: int) -> np.ndarray:
        if any(i >= n_states for i in self.nodes):
            raise ValueError(f"sensor node out of range for {n_states} states")
        c = np.zeros((len(self.nodes), n_states))
        c[np.arange(len(self.nodes)), list(self.nodes)] = 1.0
        return c


@dataclass
class ObservabilityReport:
    node_degrees: np.ndarray  # (N,) time-averaged O_i
    snapshot_degrees: np.ndarray  # (n_snapshots, N)
    snapshot_times: np.ndarray  # (n_snapshots,)
    sampling_period: float
    candidates: np.ndarray  # (n_candidates,) node indices considered
    ranking: np.ndarray  # candidates sorted by descending averaged O_i

    def group_sum(self, layout: SensorLayout) -> float:
        """Sum of averaged O_i over the layout's nodes (labelled as a sum;
        the aggregation used elsewhere for 'group degree' is not standardized)."""
        return float(np.sum(self.node_degrees[list(layout.nodes)]))


def _as_dense(a) -> np.ndarray:
    if sp.issparse(a):
        a = a.toarray()
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


# Pade coefficient tables and 1-norm thresholds from the standard
# scaling-and-squaring algorithm (degree escalates with the norm; above the
# largest threshold the matrix is halved s times and the result squared back)
_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (
        17643225600.0,
        8821612800.0,
        2075673600.0,
        302702400.0,
        30270240.0,
        2162160.0,
        110880.0,
        3960.0,
        90.0,
        1.0,
    ),
    13: (
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ),
}
_PADE_THETA = ((3, 0.01495585217958292), (5, 0.2539398330063230),
               (7, 0.9504178996162932), (9, 2.097847961257068),
               (13, 5.371920351148152))


def _pade_uv(a: np.ndarray, degree: int):
    c = _PADE_COEFFS[degree]
    n = a.shape[0]
    eye = np.eye(n)
    a2 = a @ a
    if degree == 13:
        a4 = a2 @ a2
        a6 = a2 @ a4
        u = a @ (
            a6 @ (c[13] * a6 + c[11] * a4 + c[9] * a2)
            + c[7] * a6
            + c[5] * a4
            + c[3] * a2
            + c[1] * eye
        )
        v = (
            a6 @ (c[12] * a6 + c[10] * a4 + c[8] * a2)
            + c[6] * a6
            + c[4] * a4
            + c[2] * a2
            + c[0] * eye
        )
        return u, v
    powers = [eye, a2]
    while 2 * len(powers) - 1 < degree:
        powers.append(powers[-1] @ a2)
    u = sum(c[k] * powers[k // 2] for k in range(1, degree + 1, 2))
    v = sum(c[k] * powers[k // 2] for k in range(0, degree + 1, 2))
    return a @ u, v


def _expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring with Pade approximants."""
    norm = np.linalg.norm(a, 1)
    squarings = 0
    degree = 13
    for deg, theta in _PADE_THETA:
        if norm <= theta:
            degree = deg
            break
    else:
        squarings = max(0, int(np.ceil(np.log2(norm / _PADE_THETA[-1][1]))))
        a = a / (2.0**squarings)
    u, v = _pade_uv(a, degree)
    out = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        out = out @ out
    return out


def discretize_jacobian(a, sampling_period: float) -> np.ndarray:
    """Discrete transition exp(A * T) via scaling-and-squaring Pade."""
    a = _as_dense(a)
    if sampling_period <= 0.0:
        raise ValueError(f"sampling period must be positive, got {sampling_period}")
    return _expm(a * sampling_period)


def _pseudo_eigenvectors(a_d: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Per-eigenvalue smallest-singular-direction vectors for near-defective
    matrices: v_j minimizes ||(A - lambda_j I) v||."""
    n = a_d.shape[0]
    v = np.empty((n, n), dtype=complex)
    eye = np.eye(n)
    for j in range(n):
        _, _, vh = np.linalg.svd(a_d - lam[j] * eye)
        v[:, j] = vh[-1].conj()
    return v


def modal_degree(a_d, cond_threshold: float = 1e12) -> np.ndarray:
    """Per-node modal observability scores of one discrete transition matrix."""
    a_d = _as_dense(a_d)
    lam, vec = np.linalg.eig(a_d)
    cond = np.linalg.cond(vec)
    if not np.isfinite(cond) or cond > cond_threshold:
        warnings.warn(
            f"near-defective transition matrix (eigenvector condition {cond:.3g}); "
            "using pseudo-eigenvectors",
            RuntimeWarning,
            stacklevel=2,
        )
        vec = _pseudo_eigenvectors(a_d, lam)
    vec = vec / np.linalg.norm(vec, axis=0, keepdims=True)
    weights = 1.0 - np.abs(lam) ** 2
    return (np.abs(vec) ** 2) @ weights


def rank_jacobians(
    jacobians,
    sampling_period: float,
    candidates=None,
    snapshot_times=None,
    cond_threshold: float = 1e12,
    jobs: int = 1,
) -> ObservabilityReport:
    """Average modal degrees over snapshot Jacobians and rank candidates.

    ``jobs`` bounds thread parallelism across snapshots (eigensolves and
    matrix exponentials run mostly in BLAS).
    """
    jacobians = list(jacobians)
    if not jacobians:
        raise ValueError("need at least one snapshot")

    def one(a):
        return modal_degree(discretize_jacobian(a, sampling_period), cond_threshold)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_snapshot = np.array(list(pool.map(one, jacobians)))
    else:
        per_snapshot = np.array([one(a) for a in jacobians])
    averaged = per_snapshot.mean(axis=0)
    n = averaged.size
    if candidates is None:
        candidates = np.arange(n)
    else:
        candidates = np.asarray(sorted(int(c) for c in candidates), dtype=int)
        if candidates.size == 0:
            raise ValueError("candidate set must be non-empty")
        if candidates.min() < 0 or candidates.max() >= n:
            raise ValueError("candidate index out of range")
    if snapshot_times is None:
        snapshot_times = np.arange(len(jacobians), dtype=float) * sampling_period
    # primary key: descending averaged degree; secondary: ascending node index
    order = np.lexsort((candidates, -averaged[candidates]))
    return ObservabilityReport(
        node_degrees=averaged,
        snapshot_degrees=per_snapshot,
        snapshot_times=np.asarray(snapshot_times, dtype=float),
        sampling_period=sampling_period,
        candidates=candidates,
        ranking=candidates[order],
    )


def rank_nodes(
    model,
    times,
    states,
    sampling_period: float | None = None,
    candidates=None,
    thin: int = 1,
    cond_threshold: float = 1e12,
    jobs: int = 1,
) -> ObservabilityReport:
    """Rank sensor nodes along a simulated trajectory.

    ``model`` must provide ``jacobian(t, x)``; snapshots are taken every
    ``thin``-th trajectory instant. The sampling period defaults to the
    trajectory spacing.
    """
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    if times.size < 1 or states.shape[0] != times.size:
        raise ValueError("need matching, non-empty times and states")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    if sampling_period is None:
        if times.size < 2:
            raise ValueError("sampling period required for a single snapshot")
        sampling_period = float(times[1] - times[0])
    sel = np.arange(0, times.size, thin)
    jacobians = (model.jacobian(times[k], states[k]) for k in sel)
    return rank_jacobians(
        jacobians,
        sampling_period,
        candidates=candidates,
        snapshot_times=times[sel],
        cond_threshold=cond_threshold,
        jobs=jobs,
    )


def select_sensors(report: ObservabilityReport, k: int) -> SensorLayout:
    """Top-k ranked candidate nodes as a sensor layout."""
    if k <= 0:
        raise ValueError(f"sensor count must be positive, got {k}")
    if k > report.ranking.size:
        raise ValueError(f"asked for {k} sensors from {report.ranking.size} candidates")
    return SensorLayout(nodes=tuple(int(i) for i in report.ranking[:k]))


def write_report_csv(report: ObservabilityReport, grid: CylindricalGrid, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_index", "r_m", "theta_rad", "z_m", "o_avg"])
        for i in report.candidates:
            r, th, z = grid.node_position(int(i))
            writer.writerow([int(i), repr(r), repr(th), repr(z), repr(float(report.node_degrees[i]))])


def write_report_summary(report: ObservabilityReport, k: int, path) -> None:
    layout = select_sensors(report, k)
    payload = {
        "sampling_period_s": report.sampling_period,
        "snapshot_count": int(report.snapshot_times.size),
        "candidate_count": int(report.candidates.size),
        "top_k": list(layout.nodes),
        "group_o_sum": report.group_sum(layout),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

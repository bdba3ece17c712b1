"""Ordinary Kriging of sparse soil samples onto every grid node.

Each of the five van Genuchten parameters is interpolated independently with
an unknown-constant-mean (ordinary) Kriging system driven by a fitted
variogram. Distances are 3-D Euclidean in Cartesian coordinates with an
optional vertical anisotropy ratio: samples arrive in three shallow depth
bands across a field spanning ~100 m, so a meter of depth is worth
``1/ratio`` meters of horizontal separation (default ratio 1/20).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .grid import CylindricalGrid, ParameterField
from .hydraulics import SoilParameters

__all__ = [
    "SoilSample",
    "VariogramModel",
    "PARAMETER_NAMES",
    "empirical_variogram",
    "fit_variogram",
    "fit_variogram_values",
    "kriging_weights",
    "krige_points",
    "krige_field",
]

PARAMETER_NAMES = ("theta_s", "theta_r", "K_s", "alpha", "n")

#: Default vertical anisotropy: 1 m of depth ~ 20 m horizontal.
DEFAULT_VERTICAL_ANISOTROPY = 1.0 / 20.0

# Minimum spread (relative to |values|) below which a sample set is treated
# as constant and Kriging reduces to a constant field.
_CONSTANT_REL_TOL = 1e-12


@dataclass(frozen=True)
class SoilSample:
    """One sampled location: Cartesian position plus its parameter set."""

    x: float
    y: float
    depth: float
    parameters: SoilParameters


@dataclass(frozen=True)
class VariogramModel:
    """Isotropic variogram with a practical range.

    gamma(range) reaches ~95% of (sill - nugget) for the exponential and
    gaussian kinds and exactly the sill for the spherical kind.
    """

    kind: str
    nugget: float
    sill: float
    range_: float

    def __post_init__(self) -> None:
        if self.kind not in ("exponential", "spherical", "gaussian"):
            raise ValueError(f"unknown variogram kind {self.kind!r}")
        if self.nugget < 0.0:
            raise ValueError(f"nugget must be >= 0, got {self.nugget}")
        if not self.sill > self.nugget:
            raise ValueError(f"sill {self.sill} must exceed nugget {self.nugget}")
        if not self.range_ > 0.0:
            raise ValueError(f"range must be positive, got {self.range_}")

    def gamma(self, d):
        d = np.asarray(d, dtype=float)
        c = self.sill - self.nugget
        if self.kind == "exponential":
            structured = c * -np.expm1(-3.0 * d / self.range_)
        elif self.kind == "gaussian":
            structured = c * -np.expm1(-3.0 * (d / self.range_) ** 2)
        else:  # spherical
            u = np.minimum(d / self.range_, 1.0)
            structured = c * (1.5 * u - 0.5 * u**3)
        return np.where(d > 0.0, self.nugget + structured, 0.0)


def scaled_coords(
    samples_or_xyz, vertical_anisotropy: float = DEFAULT_VERTICAL_ANISOTROPY
) -> np.ndarray:
    """(N, 3) array of anisotropy-scaled Cartesian coordinates."""
    if isinstance(samples_or_xyz, np.ndarray):
        xyz = np.array(samples_or_xyz, dtype=float)
    else:
        xyz = np.array([(s.x, s.y, s.depth) for s in samples_or_xyz], dtype=float)
    xyz[:, 2] /= vertical_anisotropy
    return xyz


def _pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.sum(diff**2, axis=-1))


def empirical_variogram(
    coords: np.ndarray, values: np.ndarray, n_bins: int = 12
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Binned semivariogram: (lag centers, semivariances, pair counts)."""
    d = _pairwise_distances(coords, coords)
    iu = np.triu_indices(len(values), k=1)
    lags = d[iu]
    sq = 0.5 * (values[iu[0]] - values[iu[1]]) ** 2
    max_lag = lags.max()
    if max_lag <= 0.0:
        raise ValueError("all sample positions coincide")
    edges = np.linspace(0.0, max_lag, n_bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    which = np.clip(np.digitize(lags, edges) - 1, 0, n_bins - 1)
    gamma = np.zeros(n_bins)
    counts = np.zeros(n_bins, dtype=int)
    for b in range(n_bins):
        mask = which == b
        counts[b] = mask.sum()
        if counts[b]:
            gamma[b] = sq[mask].mean()
    keep = counts > 0
    return centers[keep], gamma[keep], counts[keep]


def fit_variogram_values(
    coords: np.ndarray,
    values: np.ndarray,
    kind: str = "exponential",
    n_bins: int = 12,
    nugget: float = 0.0,
) -> VariogramModel:
    """Least-squares fit of (sill, range) to the empirical semivariogram.

    The nugget is held fixed (default 0 so interpolation stays exact at the
    samples). Bins are weighted by their pair counts.
    """
    coords = np.asarray(coords, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(np.unique(coords.round(12), axis=0)) < 2:
        raise ValueError("degenerate geometry: all samples collocated")
    lag, gamma_hat, counts = empirical_variogram(coords, values, n_bins=n_bins)
    spread = values.max() - values.min()
    scale = max(abs(values).max(), 1.0)
    if spread <= _CONSTANT_REL_TOL * scale:
        # zero-variance field: keep the model valid but effectively flat
        return VariogramModel(kind, nugget, nugget + 1e-30 * scale**2, lag.max())

    w = np.sqrt(counts.astype(float))

    def residuals(q):
        sill, rng = q
        model = VariogramModel(kind, nugget, nugget + abs(sill) + 1e-30, abs(rng) + 1e-12)
        return w * (model.gamma(lag) - gamma_hat)

    sill0 = max(values.var(), 1e-12 * scale**2)
    rng0 = 0.5 * lag.max()
    sol = least_squares(
        residuals,
        x0=[sill0, rng0],
        bounds=([1e-30, 1e-9], [np.inf, 100.0 * lag.max()]),
    )
    sill, rng = sol.x
    return VariogramModel(kind, nugget, nugget + sill, rng)


def fit_variogram(
    samples,
    parameter: str,
    kind: str = "exponential",
    n_bins: int = 12,
    nugget: float = 0.0,
    vertical_anisotropy: float = DEFAULT_VERTICAL_ANISOTROPY,
) -> VariogramModel:
    """Fit one soil parameter's variogram from the sample set."""
    if parameter not in PARAMETER_NAMES:
        raise ValueError(f"parameter must be one of {PARAMETER_NAMES}, got {parameter!r}")
    samples = list(samples)
    if len(samples) < 5:
        raise ValueError(f"need at least 5 samples, got {len(samples)}")
    coords = scaled_coords(samples, vertical_anisotropy)
    values = np.array([getattr(s.parameters, parameter) for s in samples], dtype=float)
    return fit_variogram_values(coords, values, kind=kind, n_bins=n_bins, nugget=nugget)


def kriging_weights(model, sample_coords: np.ndarray, query_coords: np.ndarray):
    """Solve the ordinary-Kriging system for every query point.

    Returns (weights, lagrange) with weights of shape (n_query, n_samples).
    The weight rows sum to 1 (unbiasedness constraint). ``model`` needs only
    a ``gamma(d)`` method. Raises ``numpy.linalg.LinAlgError`` when the
    system is singular.
    """
    n = len(sample_coords)
    gram = np.zeros((n + 1, n + 1))
    gram[:n, :n] = model.gamma(_pairwise_distances(sample_coords, sample_coords))
    gram[n, :n] = 1.0
    gram[:n, n] = 1.0
    rhs = np.ones((n + 1, len(query_coords)))
    rhs[:n, :] = model.gamma(_pairwise_distances(sample_coords, query_coords))
    sol = np.linalg.solve(gram, rhs)
    return sol[:n, :].T, sol[n, :]


def krige_points(
    samples,
    parameter: str,
    points_xyz: np.ndarray,
    model: VariogramModel | None = None,
    vertical_anisotropy: float = DEFAULT_VERTICAL_ANISOTROPY,
) -> np.ndarray:
    """Ordinary-Kriging predictions of one parameter at Cartesian points."""
    samples = list(samples)
    values = np.array([getattr(s.parameters, parameter) for s in samples], dtype=float)
    spread = values.max() - values.min()
    if spread <= _CONSTANT_REL_TOL * max(abs(values).max(), 1.0):
        return np.full(len(points_xyz), values[0])
    if model is None:
        model = fit_variogram(samples, parameter, vertical_anisotropy=vertical_anisotropy)
    coords = scaled_coords(samples, vertical_anisotropy)
    queries = scaled_coords(np.asarray(points_xyz, dtype=float), vertical_anisotropy)
    try:
        weights, _ = kriging_weights(model, coords, queries)
    except np.linalg.LinAlgError:
        warnings.warn(
            f"singular Kriging system for {parameter!r}; "
            "falling back to nearest-neighbor interpolation",
            RuntimeWarning,
            stacklevel=2,
        )
        nearest = np.argmin(_pairwise_distances(queries, coords), axis=1)
        return values[nearest]
    return weights @ values


def krige_field(
    samples,
    grid: CylindricalGrid,
    models: dict[str, VariogramModel] | None = None,
    vertical_anisotropy: float = DEFAULT_VERTICAL_ANISOTROPY,
) -> ParameterField:
    """Interpolate all five parameters onto every grid node.

    Outputs are projected back onto the physical constraints (theta ordering,
    positivity, n > 1) since linear interpolation can violate them.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise ValueError("need at least 2 samples to interpolate a field")
    pos = np.array([(s.x, s.y, s.depth) for s in samples])
    if len(np.unique(pos.round(12), axis=0)) != len(samples):
        raise ValueError("sample positions must be distinct")
    horiz = np.hypot(pos[:, 0], pos[:, 1])
    outside = (horiz > grid.radius * (1.0 + 1e-9)) | (pos[:, 2] < 0) | (
        pos[:, 2] > grid.depth * (1.0 + 1e-9)
    )
    if np.any(outside):
        raise ValueError(
            f"samples {np.nonzero(outside)[0].tolist()} lie outside the field cylinder"
        )

    x, y, d = grid.cartesian_positions()
    points = np.column_stack([x, y, d])
    fields = {}
    for name in PARAMETER_NAMES:
        model = models.get(name) if models else None
        fields[name] = krige_points(
            samples, name, points, model=model, vertical_anisotropy=vertical_anisotropy
        )

    # projection back onto valid soil parameters
    tiny = 1e-9
    theta_s = np.clip(fields["theta_s"], 2e-6, 1.0 - tiny)
    theta_r = np.clip(fields["theta_r"], tiny, theta_s - 1e-6)
    return ParameterField(
        theta_s=theta_s,
        theta_r=theta_r,
        K_s=np.maximum(fields["K_s"], tiny * 1e-3),
        alpha=np.maximum(fields["alpha"], tiny),
        n=np.maximum(fields["n"], 1.0 + 1e-3),
    )

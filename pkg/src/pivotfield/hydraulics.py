"""Mualem-van Genuchten soil constitutive relations.

Pointwise closures linking pressure head ``h`` (m, negative in unsaturated
soil) to volumetric water content, unsaturated hydraulic conductivity and
capillary capacity, plus the analytic derivatives the implicit solver needs.

All functions accept a scalar or ndarray ``h`` together with any parameter
holder exposing ``theta_s``, ``theta_r``, ``K_s``, ``alpha`` and ``n``
attributes (a :class:`SoilParameters` or a per-node parameter field whose
arrays broadcast against ``h``). The saturated branch ``h >= 0`` returns
``theta_s`` / ``K_s`` / zero capacity. Powers of ``(-alpha * h)`` are
evaluated in log space so extreme suctions neither overflow nor lose
precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SoilParameters",
    "LOAM",
    "SANDY_LOAM",
    "CLAY_LOAM",
    "water_content",
    "hydraulic_conductivity",
    "capillary_capacity",
    "conductivity_derivative",
    "capacity_derivative",
]


@dataclass(frozen=True)
class SoilParameters:
    """Van Genuchten parameter set at one location.

    theta_s, theta_r: saturated / residual volumetric water content (m3/m3);
    K_s: saturated hydraulic conductivity (m/s); alpha: inverse air-entry
    head (1/m); n: pore-size shape exponent (dimensionless, > 1).
    """

    theta_s: float
    theta_r: float
    K_s: float
    alpha: float
    n: float

    def __post_init__(self) -> None:
        if not (0.0 < self.theta_r < self.theta_s < 1.0):
            raise ValueError(
                f"need 0 < theta_r < theta_s < 1, got theta_r={self.theta_r}, "
                f"theta_s={self.theta_s}"
            )
        if not self.K_s > 0.0:
            raise ValueError(f"K_s must be positive, got {self.K_s}")
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.n > 1.0:
            raise ValueError(f"n must exceed 1, got {self.n}")


# Carsel & Parrish (1988) textural-class averages, K_s converted to m/s.
LOAM = SoilParameters(theta_s=0.43, theta_r=0.078, K_s=2.8889e-6, alpha=3.6, n=1.56)
SANDY_LOAM = SoilParameters(theta_s=0.41, theta_r=0.065, K_s=1.2278e-5, alpha=7.5, n=1.89)
CLAY_LOAM = SoilParameters(theta_s=0.41, theta_r=0.095, K_s=7.2222e-7, alpha=1.9, n=1.31)


def _checked(h) -> np.ndarray:
    arr = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("pressure head must be finite")
    return arr


def _log_terms(h: np.ndarray, alpha, n):
    """log((-alpha h)^n) and log(1 + (-alpha h)^n) on the unsaturated branch.

    Saturated entries are masked to neutral values; callers must overwrite
    them. Returned arrays broadcast over h and the parameter arrays.
    """
    unsat = h < 0.0
    safe = np.where(unsat, -h, 1.0)
    t = n * (np.log(alpha) + np.log(safe))
    log_d = np.logaddexp(0.0, t)
    return unsat, t, log_d


def _as_input_shape(result: np.ndarray, h) -> np.ndarray | float:
    if np.ndim(h) == 0 and result.ndim == 0:
        return float(result)
    return result


def water_content(h, p):
    """Volumetric water content theta(h) in m3/m3.

    Strictly increasing in h for h < 0, equal to theta_s for h >= 0 and
    approaching theta_r as h -> -inf.
    """
    harr = _checked(h)
    m = 1.0 - 1.0 / np.asarray(p.n, dtype=float)
    unsat, _, log_d = _log_terms(harr, p.alpha, p.n)
    se = np.exp(-m * log_d)
    theta = np.where(unsat, p.theta_r + (p.theta_s - p.theta_r) * se, p.theta_s)
    return _as_input_shape(theta, h)


def hydraulic_conductivity(h, p):
    """Unsaturated hydraulic conductivity K(h) in m/s.

    Non-decreasing in h, equal to K_s for h >= 0.
    """
    harr = _checked(h)
    n = np.asarray(p.n, dtype=float)
    m = 1.0 - 1.0 / n
    unsat, t, log_d = _log_terms(harr, p.alpha, n)
    log_se = -m * log_d
    log_w = t - log_d
    # 1 - w^m via expm1 avoids cancellation at both ends of the h range
    one_minus_wm = -np.expm1(m * log_w)
    k = p.K_s * np.exp(0.5 * log_se) * one_minus_wm**2
    k = np.where(unsat, k, p.K_s)
    return _as_input_shape(k, h)


def capillary_capacity(h, p):
    """Capillary capacity C(h) = d(theta)/dh in 1/m.

    Zero on the saturated branch h >= 0; the solver applies its own floor
    where C appears as a divisor.
    """
    harr = _checked(h)
    n = np.asarray(p.n, dtype=float)
    m = 1.0 - 1.0 / n
    unsat, t, log_d = _log_terms(harr, p.alpha, n)
    scale = (p.theta_s - p.theta_r) * p.alpha * m * n
    c = scale * np.exp(m * t - (m + 1.0) * log_d)
    c = np.where(unsat, c, 0.0)
    return _as_input_shape(c, h)


def conductivity_derivative(h, p):
    """dK/dh in 1/s, zero on the saturated branch."""
    harr = _checked(h)
    n = np.asarray(p.n, dtype=float)
    m = 1.0 - 1.0 / n
    unsat, t, log_d = _log_terms(harr, p.alpha, n)
    log_w = t - log_d
    one_minus_wm = -np.expm1(m * log_w)
    term_se = 0.5 * m * one_minus_wm**2 * np.exp(m * t - (0.5 * m + 1.0) * log_d)
    term_w = (
        2.0 * m * one_minus_wm * np.exp(m * t + (m - 1.0) * log_w - (0.5 * m + 2.0) * log_d)
    )
    dk = p.alpha * n * p.K_s * (term_se + term_w)
    dk = np.where(unsat, dk, 0.0)
    return _as_input_shape(dk, h)


def capacity_derivative(h, p):
    """dC/dh in 1/m^2, zero on the saturated branch."""
    harr = _checked(h)
    n = np.asarray(p.n, dtype=float)
    m = 1.0 - 1.0 / n
    unsat, t, log_d = _log_terms(harr, p.alpha, n)
    scale = (p.theta_s - p.theta_r) * p.alpha**2 * m * n**2
    # d/dh of scale' * beta^m * D^-(m+1) collapses to two stable exponentials
    dc = -scale * (
        m * np.exp((2.0 * m - 1.0) * t - (m + 2.0) * log_d)
        - np.exp(2.0 * m * t - (m + 2.0) * log_d)
    )
    dc = np.where(unsat, dc, 0.0)
    return _as_input_shape(dc, h)

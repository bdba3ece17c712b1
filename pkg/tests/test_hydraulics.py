import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pivotfield import hydraulics as hyd
from pivotfield.hydraulics import (
    SoilParameters,
    capillary_capacity,
    hydraulic_conductivity,
    water_content,
)

from conftest import LOAM, random_parameters

# Frozen oracle constants: independent high-precision (mpmath, 40 digits)
# evaluation of the closed-form retention/conductivity/capacity expressions
# for the loam parameter set (theta_s=0.43, theta_r=0.078, alpha=3.6, n=1.56,
# K_s=2.8889e-6 m/s).
THETA_LOAM_AT_MINUS_1 = 0.24213178471815216
K_LOAM_AT_MINUS_0_5 = 2.9832125427566664e-08
C_LOAM_AT_MINUS_0_2 = 0.31196689468448944
C_LOAM_AT_MINUS_1 = 0.080940572287630744


def params_strategy():
    return st.builds(
        random_parameters,
        st.integers(min_value=0, max_value=2**32 - 1).map(np.random.default_rng),
    )


class TestWaterContent:
    def test_saturated_branch_returns_theta_s(self, loam):
        assert water_content(0.0, loam) == loam.theta_s
        assert water_content(2.5, loam) == loam.theta_s

    def test_dry_limit_approaches_theta_r(self, loam):
        # power-law tail: theta - theta_r ~ (alpha |h|)^-(n-1)
        gap = water_content(-1e9, loam) - loam.theta_r
        assert 0.0 < gap < 1e-5
        assert water_content(-1e15, loam) - loam.theta_r < gap * 1e-2

    def test_loam_regression_constant(self, loam):
        assert water_content(-1.0, loam) == pytest.approx(
            THETA_LOAM_AT_MINUS_1, rel=1e-12
        )

    def test_vectorized_matches_scalar(self, loam):
        hs = np.array([-3.0, -0.7, -0.01, 0.0, 1.0])
        vec = water_content(hs, loam)
        assert vec.shape == hs.shape
        for h, v in zip(hs, vec):
            assert v == water_content(float(h), loam)

    def test_non_finite_head_rejected(self, loam):
        with pytest.raises(ValueError):
            water_content(np.nan, loam)
        with pytest.raises(ValueError):
            water_content(np.inf, loam)


class TestConductivity:
    def test_saturated_branch_returns_k_s(self, loam):
        assert hydraulic_conductivity(0.0, loam) == loam.K_s

    def test_extreme_suction_is_negligible(self, loam):
        assert hydraulic_conductivity(-1e6, loam) < 1e-12 * loam.K_s

    def test_loam_regression_constant(self, loam):
        assert hydraulic_conductivity(-0.5, loam) == pytest.approx(
            K_LOAM_AT_MINUS_0_5, rel=1e-12
        )

    def test_no_overflow_at_huge_suction(self, loam):
        k = hydraulic_conductivity(-1e280, loam)
        assert np.isfinite(k) and k >= 0.0


class TestCapacity:
    def test_zero_at_saturation(self, loam):
        assert capillary_capacity(0.0, loam) == 0.0
        assert capillary_capacity(3.0, loam) == 0.0

    def test_loam_regression_constant(self, loam):
        assert capillary_capacity(-0.2, loam) == pytest.approx(
            C_LOAM_AT_MINUS_0_2, rel=1e-12
        )

    def test_matches_finite_difference_of_theta(self, loam):
        step = 1e-6
        fd = (water_content(-1.0 + step, loam) - water_content(-1.0 - step, loam)) / (
            2 * step
        )
        c = capillary_capacity(-1.0, loam)
        assert c == pytest.approx(fd, rel=1e-6)
        assert c == pytest.approx(C_LOAM_AT_MINUS_1, rel=1e-12)


class TestDerivatives:
    def test_conductivity_derivative_matches_fd(self, loam):
        hs = np.linspace(-8.0, -0.05, 37)
        step = 1e-7
        fd = (
            hydraulic_conductivity(hs + step, loam)
            - hydraulic_conductivity(hs - step, loam)
        ) / (2 * step)
        assert hyd.conductivity_derivative(hs, loam) == pytest.approx(fd, rel=1e-5)

    def test_capacity_derivative_matches_fd(self, loam):
        hs = np.linspace(-8.0, -0.05, 37)
        step = 1e-7
        fd = (capillary_capacity(hs + step, loam) - capillary_capacity(hs - step, loam)) / (
            2 * step
        )
        assert hyd.capacity_derivative(hs, loam) == pytest.approx(fd, rel=1e-5)

    def test_zero_on_saturated_branch(self, loam):
        assert hyd.conductivity_derivative(0.5, loam) == 0.0
        assert hyd.capacity_derivative(0.0, loam) == 0.0


def theta_extended_precision(h, p):
    """Independent transcription of the retention curve in extended precision
    (float64 FD suffers cancellation where the capacity is tiny)."""
    h = np.asarray(h, dtype=np.longdouble)
    one = np.longdouble(1.0)
    beta = (np.longdouble(p.alpha) * (-h)) ** np.longdouble(p.n)
    m = one - one / np.longdouble(p.n)
    return np.longdouble(p.theta_r) + (
        np.longdouble(p.theta_s) - np.longdouble(p.theta_r)
    ) * (one / (one + beta)) ** m


@settings(max_examples=60, deadline=None)
@given(params_strategy())
def test_capacity_is_derivative_of_water_content(p):
    # invariant: C(h) = dtheta/dh to 1e-5 relative on h in [-100, -1e-3]
    hs = -np.logspace(np.log10(1e-3), np.log10(100.0), 25)
    step = np.longdouble(1e-6)
    fd = (theta_extended_precision(hs + step, p) - theta_extended_precision(hs - step, p)) / (
        2 * step
    )
    fd = fd.astype(float)
    c = capillary_capacity(hs, p)
    assert np.all(np.abs(c - fd) <= 1e-5 * np.abs(fd))


@settings(max_examples=60, deadline=None)
@given(params_strategy())
def test_monotonicity_and_bounds(p):
    hs = -np.logspace(-3, 2, 120)[::-1]  # increasing towards 0
    theta = water_content(hs, p)
    k = hydraulic_conductivity(hs, p)
    c = capillary_capacity(hs, p)
    assert np.all(np.diff(theta) >= 0.0)
    assert np.all(np.diff(k) >= 0.0)
    assert np.all((theta > p.theta_r) & (theta <= p.theta_s))
    assert np.all((k > 0.0) & (k <= p.K_s))
    assert np.all(c >= 0.0)


class TestParameterValidation:
    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            SoilParameters(theta_s=0.1, theta_r=0.2, K_s=1e-6, alpha=1.0, n=1.5)

    @pytest.mark.parametrize(
        "kw",
        [
            {"K_s": 0.0},
            {"K_s": -1e-6},
            {"alpha": 0.0},
            {"n": 1.0},
            {"n": 0.9},
            {"theta_s": 1.2},
        ],
    )
    def test_invalid_fields_rejected(self, kw):
        base = dict(theta_s=0.43, theta_r=0.078, K_s=2.9e-6, alpha=3.6, n=1.56)
        base.update(kw)
        with pytest.raises(ValueError):
            SoilParameters(**base)

    def test_reference_soils_are_valid(self):
        for p in (hyd.LOAM, hyd.SANDY_LOAM, hyd.CLAY_LOAM):
            assert 0 < p.theta_r < p.theta_s < 1
            assert p.n > 1

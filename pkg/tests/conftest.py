import numpy as np
import pytest

from pivotfield import CylindricalGrid, ParameterField, SoilParameters

LOAM = SoilParameters(theta_s=0.43, theta_r=0.078, K_s=2.8889e-6, alpha=3.6, n=1.56)


@pytest.fixture
def loam():
    return LOAM


@pytest.fixture
def small_grid():
    return CylindricalGrid(n_r=3, n_az=4, n_z=5, radius=50.0, depth=0.75)


@pytest.fixture
def small_field(small_grid, loam):
    return ParameterField.uniform(small_grid, loam)


def random_parameters(rng: np.random.Generator) -> SoilParameters:
    theta_r = rng.uniform(0.02, 0.15)
    theta_s = theta_r + rng.uniform(0.1, 0.4)
    return SoilParameters(
        theta_s=theta_s,
        theta_r=theta_r,
        K_s=10.0 ** rng.uniform(-7.5, -4.5),
        alpha=rng.uniform(0.5, 12.0),
        n=rng.uniform(1.1, 3.2),
    )

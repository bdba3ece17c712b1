import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pivotfield import CylindricalGrid, ParameterField

from conftest import LOAM


class TestIndexing:
    def test_origin_is_zero(self, small_grid):
        assert small_grid.node_index(0, 0, 0) == 0

    def test_bijection_on_3x4x5(self, small_grid):
        seen = set()
        for i_z in range(small_grid.n_z):
            for i_az in range(small_grid.n_az):
                for i_r in range(small_grid.n_r):
                    flat = small_grid.node_index(i_r, i_az, i_z)
                    assert small_grid.node_coords(flat) == (i_r, i_az, i_z)
                    seen.add(flat)
        assert seen == set(range(small_grid.n_nodes))

    def test_default_grid_layer_ranges(self):
        # 6 x 40 x 22 puts the deepest layer at flat 0..239 and the surface
        # layer at 5040..5279
        grid = CylindricalGrid()
        assert grid.n_nodes == 5280
        assert grid.bottom_indices()[0] == 0
        assert grid.bottom_indices()[-1] == 239
        assert grid.surface_indices()[0] == 5040
        assert grid.surface_indices()[-1] == 5279

    def test_out_of_bounds_raises(self, small_grid):
        with pytest.raises(IndexError):
            small_grid.node_index(small_grid.n_r, 0, 0)
        with pytest.raises(IndexError):
            small_grid.node_coords(small_grid.n_nodes)
        with pytest.raises(IndexError):
            small_grid.node_coords(-1)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(1, 7),
    st.integers(2, 9),
    st.integers(2, 9),
    st.data(),
)
def test_indexing_roundtrip_property(n_r, n_az, n_z, data):
    grid = CylindricalGrid(n_r=n_r, n_az=n_az, n_z=n_z, radius=10.0, depth=1.0)
    flat = data.draw(st.integers(0, grid.n_nodes - 1))
    i_r, i_az, i_z = grid.node_coords(flat)
    assert grid.node_index(i_r, i_az, i_z) == flat


class TestPositions:
    def test_first_node_at_cell_center(self, small_grid):
        r, th, z = small_grid.node_position(0)
        assert r == pytest.approx(small_grid.dr / 2)
        assert th == pytest.approx(small_grid.dtheta / 2)
        assert z == pytest.approx(small_grid.dz / 2)

    def test_no_node_on_axis(self, small_grid):
        r, _, _ = small_grid.positions()
        assert np.all(r > 0.0)

    def test_radial_neighbors_differ_by_dr(self, small_grid):
        r0, _, _ = small_grid.node_position(small_grid.node_index(0, 1, 2))
        r1, _, _ = small_grid.node_position(small_grid.node_index(1, 1, 2))
        assert r1 - r0 == pytest.approx(small_grid.dr)

    def test_azimuthal_wraparound(self, small_grid):
        # the angular gap between the last and first azimuth equals dtheta
        _, th_last, _ = small_grid.node_position(
            small_grid.node_index(0, small_grid.n_az - 1, 0)
        )
        _, th_first, _ = small_grid.node_position(small_grid.node_index(0, 0, 0))
        gap = (th_first - th_last) % (2 * np.pi)
        assert gap == pytest.approx(small_grid.dtheta)

    def test_positions_match_scalar_api(self, small_grid):
        r, th, z = small_grid.positions()
        for idx in (0, 7, small_grid.n_nodes - 1):
            assert (r[idx], th[idx], z[idx]) == pytest.approx(
                small_grid.node_position(idx)
            )

    def test_cell_volumes_sum_to_cylinder(self, small_grid):
        total = small_grid.cell_volumes().sum()
        expected = np.pi * small_grid.radius**2 * small_grid.depth
        assert total == pytest.approx(expected, rel=1e-12)

    def test_layer_at_depth(self):
        grid = CylindricalGrid()
        for depth_cm in (25, 50, 75):
            layer = grid.layer_at_depth(depth_cm / 100.0)
            _, _, z = grid.node_position(grid.layer_indices(layer)[0])
            assert abs((grid.depth - z) - depth_cm / 100.0) <= grid.dz


class TestValidation:
    def test_counts(self):
        with pytest.raises(ValueError):
            CylindricalGrid(n_r=0, n_az=4, n_z=4)
        with pytest.raises(ValueError):
            CylindricalGrid(n_r=2, n_az=1, n_z=4)
        with pytest.raises(ValueError):
            CylindricalGrid(n_r=2, n_az=4, n_z=1)
        CylindricalGrid(n_r=1, n_az=2, n_z=2)  # minimal valid

    def test_spacings(self):
        grid = CylindricalGrid(n_r=5, n_az=8, n_z=3, radius=40.0, depth=0.9)
        assert grid.dr == pytest.approx(8.0)
        assert grid.dtheta == pytest.approx(2 * np.pi / 8)
        assert grid.dz == pytest.approx(0.3)


class TestParameterField:
    def test_uniform_matches_source(self, small_grid, loam):
        field = ParameterField.uniform(small_grid, loam)
        assert len(field) == small_grid.n_nodes
        assert field.at(7) == loam

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            ParameterField(
                theta_s=np.full(4, 0.4),
                theta_r=np.full(3, 0.1),
                K_s=np.full(4, 1e-6),
                alpha=np.full(4, 2.0),
                n=np.full(4, 1.5),
            )

    def test_invalid_entry_names_node(self):
        theta_s = np.full(4, 0.4)
        theta_r = np.full(4, 0.1)
        theta_r[2] = 0.5  # breaks ordering at node 2
        with pytest.raises(ValueError, match="node 2"):
            ParameterField(
                theta_s=theta_s,
                theta_r=theta_r,
                K_s=np.full(4, 1e-6),
                alpha=np.full(4, 2.0),
                n=np.full(4, 1.5),
            )

    def test_hydraulics_accept_field_arrays(self, small_grid):
        from pivotfield import water_content

        field = ParameterField.uniform(small_grid, LOAM)
        h = np.full(small_grid.n_nodes, -1.0)
        theta = water_content(h, field)
        assert theta.shape == (small_grid.n_nodes,)
        assert np.allclose(theta, water_content(-1.0, LOAM))

"""Cylindrical field discretization and per-node soil-parameter storage.

Nodes are cell centers of a uniform (r, azimuth, z) lattice over a cylinder.
Flat state ordering is axial-major from the bottom layer upward, then
azimuthal, then radial:

    flat = (i_z * n_az + i_az) * n_r + i_r

so the deepest layer occupies the lowest flat indices and the surface layer
the highest. The first radial node sits at r = dr/2; no node lies on the
axis, where the symmetry condition is imposed as a zero-flux inner face.
``z`` is elevation above the domain bottom (surface at z = depth).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hydraulics import SoilParameters

__all__ = ["CylindricalGrid", "ParameterField", "StateVector"]

# A state vector is a plain float ndarray of length grid.n_nodes holding the
# pressure head at every node.
StateVector = np.ndarray


@dataclass(frozen=True)
class CylindricalGrid:
    n_r: int = 6
    n_az: int = 40
    n_z: int = 22
    radius: float = 50.0
    depth: float = 0.75

    def __post_init__(self) -> None:
        if self.n_r < 1 or self.n_az < 2 or self.n_z < 2:
            raise ValueError(
                f"need n_r >= 1, n_az >= 2, n_z >= 2, got "
                f"({self.n_r}, {self.n_az}, {self.n_z})"
            )
        if self.radius <= 0.0 or self.depth <= 0.0:
            raise ValueError("radius and depth must be positive")

    @property
    def n_nodes(self) -> int:
        return self.n_r * self.n_az * self.n_z

    @property
    def dr(self) -> float:
        return self.radius / self.n_r

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.n_az

    @property
    def dz(self) -> float:
        return self.depth / self.n_z

    @property
    def shape(self) -> tuple[int, int, int]:
        """Array shape (n_z, n_az, n_r) matching the flat ordering."""
        return (self.n_z, self.n_az, self.n_r)

    def node_index(self, i_r: int, i_az: int, i_z: int) -> int:
        if not (0 <= i_r < self.n_r and 0 <= i_az < self.n_az and 0 <= i_z < self.n_z):
            raise IndexError(f"node ({i_r}, {i_az}, {i_z}) outside grid {self.shape}")
        return (i_z * self.n_az + i_az) * self.n_r + i_r

    def node_coords(self, index: int) -> tuple[int, int, int]:
        """Inverse of :meth:`node_index`: flat index -> (i_r, i_az, i_z)."""
        if not 0 <= index < self.n_nodes:
            raise IndexError(f"flat index {index} outside [0, {self.n_nodes})")
        i_r = index % self.n_r
        rest = index // self.n_r
        return i_r, rest % self.n_az, rest // self.n_az

    def node_position(self, index: int) -> tuple[float, float, float]:
        """Cell-center (r, theta, z) of a node; z measured up from the bottom."""
        i_r, i_az, i_z = self.node_coords(index)
        return (
            (i_r + 0.5) * self.dr,
            (i_az + 0.5) * self.dtheta,
            (i_z + 0.5) * self.dz,
        )

    def positions(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(r, theta, z) arrays for all nodes in flat order."""
        r = (np.arange(self.n_r) + 0.5) * self.dr
        th = (np.arange(self.n_az) + 0.5) * self.dtheta
        z = (np.arange(self.n_z) + 0.5) * self.dz
        zz, tt, rr = np.meshgrid(z, th, r, indexing="ij")
        return rr.ravel(), tt.ravel(), zz.ravel()

    def cartesian_positions(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(x, y, depth-below-surface) arrays for all nodes in flat order."""
        r, th, z = self.positions()
        return r * np.cos(th), r * np.sin(th), self.depth - z

    def cell_volumes(self) -> np.ndarray:
        """Per-node cell volume r * dr * dtheta * dz, flat order."""
        r, _, _ = self.positions()
        return r * self.dr * self.dtheta * self.dz

    def layer_indices(self, i_z: int) -> np.ndarray:
        if not 0 <= i_z < self.n_z:
            raise IndexError(f"layer {i_z} outside [0, {self.n_z})")
        base = i_z * self.n_az * self.n_r
        return np.arange(base, base + self.n_az * self.n_r)

    def surface_indices(self) -> np.ndarray:
        return self.layer_indices(self.n_z - 1)

    def bottom_indices(self) -> np.ndarray:
        return self.layer_indices(0)

    def layer_at_depth(self, depth_below_surface: float) -> int:
        """Layer index whose cell contains the given depth below the surface."""
        if not 0.0 <= depth_below_surface <= self.depth:
            raise ValueError(
                f"depth {depth_below_surface} outside [0, {self.depth}]"
            )
        k = int((self.depth - depth_below_surface) / self.dz)
        return min(k, self.n_z - 1)


@dataclass
class ParameterField:
    """Per-node van Genuchten parameters aligned with the grid's flat order.

    Attribute names match :class:`SoilParameters` so the hydraulics functions
    accept either interchangeably.
    """

    theta_s: np.ndarray
    theta_r: np.ndarray
    K_s: np.ndarray
    alpha: np.ndarray
    n: np.ndarray

    def __post_init__(self) -> None:
        arrays = [
            np.asarray(a, dtype=float)
            for a in (self.theta_s, self.theta_r, self.K_s, self.alpha, self.n)
        ]
        self.theta_s, self.theta_r, self.K_s, self.alpha, self.n = arrays
        sizes = {a.shape for a in arrays}
        if len(sizes) != 1 or arrays[0].ndim != 1:
            raise ValueError(f"parameter arrays must share one 1-D shape, got {sizes}")
        bad = ~(
            (0.0 < self.theta_r)
            & (self.theta_r < self.theta_s)
            & (self.theta_s < 1.0)
            & (self.K_s > 0.0)
            & (self.alpha > 0.0)
            & (self.n > 1.0)
        )
        if np.any(bad):
            where = int(np.argmax(bad))
            raise ValueError(
                f"invalid soil parameters at node {where}: "
                f"theta_s={self.theta_s[where]}, theta_r={self.theta_r[where]}, "
                f"K_s={self.K_s[where]}, alpha={self.alpha[where]}, n={self.n[where]}"
            )

    def __len__(self) -> int:
        return self.theta_s.size

    @classmethod
    def uniform(cls, grid: CylindricalGrid, p: SoilParameters) -> "ParameterField":
        n = grid.n_nodes
        return cls(
            theta_s=np.full(n, p.theta_s),
            theta_r=np.full(n, p.theta_r),
            K_s=np.full(n, p.K_s),
            alpha=np.full(n, p.alpha),
            n=np.full(n, p.n),
        )

    def at(self, index: int) -> SoilParameters:
        return SoilParameters(
            theta_s=float(self.theta_s[index]),
            theta_r=float(self.theta_r[index]),
            K_s=float(self.K_s[index]),
            alpha=float(self.alpha[index]),
            n=float(self.n[index]),
        )

    def reshaped(self, grid: CylindricalGrid) -> "ParameterField":
        """View with arrays shaped (n_z, n_az, n_r) for stencil arithmetic."""
        if len(self) != grid.n_nodes:
            raise ValueError(f"field length {len(self)} != grid nodes {grid.n_nodes}")
        out = object.__new__(ParameterField)
        out.theta_s = self.theta_s.reshape(grid.shape)
        out.theta_r = self.theta_r.reshape(grid.shape)
        out.K_s = self.K_s.reshape(grid.shape)
        out.alpha = self.alpha.reshape(grid.shape)
        out.n = self.n.reshape(grid.shape)
        return out

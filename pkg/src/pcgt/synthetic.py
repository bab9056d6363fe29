"""Seeded synthetic voxelized clouds for tests and demos."""
from __future__ import annotations

import numpy as np

from .ply_io import PointCloud, rgb_to_ycbcr

__all__ = ["surface_points", "surface_cloud", "constant_cloud", "random_block"]


def _surface(m: int, rng: np.random.Generator, grid: int) -> np.ndarray:
    # wavy closed cylinder, roughly body-shaped
    theta = rng.uniform(0.0, 2.0 * np.pi, m)
    h = rng.uniform(0.0, 1.0, m)
    r = 0.22 + 0.05 * np.sin(3 * theta) * np.cos(2 * np.pi * h) + 0.04 * np.sin(5 * np.pi * h)
    x = 0.5 + r * np.cos(theta)
    z = 0.5 + r * np.sin(theta)
    y = 0.05 + 0.9 * h
    return np.floor(np.column_stack([x, y, z]) * (grid - 1))


def surface_points(n: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """``n`` distinct occupied voxels of a densely voxelized surface.

    The grid size is picked so the surface has just over ``n`` voxels,
    giving a neighbour spacing of about one voxel like captured data.
    Returns the positions (in a seeded random order) and the grid size.
    """
    grid = max(int(np.sqrt(n / 1.25)) + 1, 4)
    while True:
        vox = np.unique(_surface(30 * n + 100, rng, grid), axis=0)
        if len(vox) >= n:
            break
        grid = int(grid * 1.1) + 1
    pick = rng.choice(len(vox), n, replace=False)
    return vox[pick], grid


def surface_cloud(n: int, seed: int = 0, noise: float = 1.0) -> PointCloud:
    """Dense voxel surface with piecewise-smooth RGB and derived Y/Cb/Cr.

    Color is smooth shading plus two sharp region boundaries (a horizontal
    belt and one side of the body) and Gaussian noise of std ``noise``.
    """
    rng = np.random.default_rng(seed)
    pos, grid = surface_points(n, rng)
    u = pos / (grid - 1)
    shade = 110 + 60 * np.sin(3 * np.pi * u[:, 1]) * np.cos(2 * np.pi * u[:, 0])
    belt = np.where(np.abs(u[:, 1] - 0.45) < 0.08, 50.0, 0.0)
    side = np.where(u[:, 2] > 0.55, -35.0, 0.0)
    lum = shade + belt + side
    rgb = np.column_stack([lum + 25 * u[:, 0], lum - 10 * u[:, 2], lum - 30 * u[:, 1]])
    rgb += rng.normal(0.0, noise, rgb.shape)
    rgb = np.clip(rgb, 0, 255)
    cloud = PointCloud(pos, {"R": rgb[:, 0], "G": rgb[:, 1], "B": rgb[:, 2]})
    return rgb_to_ycbcr(cloud)


def constant_cloud(n: int, value: float = 100.0, seed: int = 0) -> PointCloud:
    pos, _ = surface_points(n, np.random.default_rng(seed))
    return PointCloud(pos, {"Y": np.full(n, float(value))})


def random_block(n: int, rng: np.random.Generator, extent: float = 10.0) -> np.ndarray:
    """Uniform random points in a cube, one transform block's worth."""
    return rng.uniform(0.0, extent, (n, 3))

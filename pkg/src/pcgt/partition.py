"""Median k-d tree partition of a point cloud into transform blocks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["KdPartition", "MAX_BLOCK_POINTS", "choose_depth", "build_kdtree"]

MAX_BLOCK_POINTS = 200


@dataclass
class KdPartition:
    depth: int
    blocks: list[np.ndarray]

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(b) for b in self.blocks], dtype=np.int64)

    def __len__(self):
        return len(self.blocks)


def choose_depth(point_count: int, max_points: int = MAX_BLOCK_POINTS) -> int:
    """Smallest depth whose mean leaf size is at most ``max_points``."""
    if point_count < 1:
        raise ValueError("point_count must be positive")
    d = 0
    while point_count > max_points * (1 << d):
        d += 1
    return d


def _split(positions: np.ndarray, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pts = positions[idx]
    spread = pts.max(axis=0) - pts.min(axis=0)
    axis = int(np.argmax(spread))  # first maximum -> lowest axis on ties
    # primary key last: chosen axis, then x, y, z, original index
    order = np.lexsort((idx, pts[:, 2], pts[:, 1], pts[:, 0], pts[:, axis]))
    ordered = idx[order]
    half = (len(idx) + 1) // 2
    return ordered[:half], ordered[half:]


def build_kdtree(positions: np.ndarray, depth: int) -> KdPartition:
    """Split ``positions`` to ``depth`` levels, ceil(n/2) points going left.

    Leaves come out in left-to-right order; every leaf holds
    floor(n / 2**depth) or ceil(n / 2**depth) indices into ``positions``.
    """
    positions = np.asarray(positions, dtype=np.float64)
    n = positions.shape[0]
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if n < (1 << depth):
        raise ValueError(f"depth too deep for cloud: {n} points < 2^{depth}")
    level = [np.arange(n, dtype=np.int64)]
    for _ in range(depth):
        nxt = []
        for idx in level:
            left, right = _split(positions, idx)
            nxt.append(left)
            nxt.append(right)
        level = nxt
    return KdPartition(depth=depth, blocks=level)

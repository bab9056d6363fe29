"""Grid search for the graph sparsity pair (f, t).

The objective is transform compaction: for every block, the share of the
coefficient L1 mass carried by its ``k`` largest-magnitude coefficients,
averaged over blocks (and over clouds for offline training).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .partition import build_kdtree, choose_depth
from .ply_io import PointCloud, get_channel
from .transform import GraphParams, adjacency_from_sq_dists, laplacian, pairwise_sq_dists

__all__ = [
    "TrainReport",
    "compaction_ratio",
    "compaction_objective",
    "grid_values",
    "train_offline",
    "train_online",
    "evaluate_cell",
]


@dataclass
class TrainReport:
    best: GraphParams
    grid: list[tuple[float, float, float]] = field(default_factory=list)
    objective_kind: str = "compaction@20"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["f", "t", "objective"])
        for f, t, obj in self.grid:
            w.writerow([repr(f), repr(t), repr(obj)])
        return buf.getvalue()


def compaction_ratio(coeffs: np.ndarray, k: int) -> float:
    a = np.sort(np.abs(np.asarray(coeffs, dtype=np.float64)))[::-1]
    total = a.sum()
    if total == 0.0:
        return 1.0
    return float(a[:k].sum() / total)


def compaction_objective(blocks, k: int = 20) -> float:
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(blocks) == 0:
        raise ValueError("need at least one block")
    return float(np.mean([compaction_ratio(c, k) for c in blocks]))


def grid_values(step: float = 0.05) -> list[float]:
    """Open-interval grid step, 2*step, ... strictly below 1."""
    n = int(round(1.0 / step))
    vals = [round(i * step, 10) for i in range(1, n + 1)]
    return [v for v in vals if 0.0 < v < 1.0]


class _Blocks:
    """Per-block squared distances and signals, independent of (f, t)."""

    def __init__(self, positions_list, signals):
        self.sq = [pairwise_sq_dists(np.asarray(p, dtype=np.float64)) for p in positions_list]
        self.signals = [np.asarray(s, dtype=np.float64) for s in signals]

    def coefficients(self, params: GraphParams) -> list[np.ndarray]:
        out: list = [None] * len(self.sq)
        by_size: dict[int, list[int]] = {}
        for i, sq in enumerate(self.sq):
            by_size.setdefault(sq.shape[0], []).append(i)
        for n, members in by_size.items():
            if n == 1:
                for i in members:
                    out[i] = self.signals[i].copy()
                continue
            for start in range(0, len(members), 64):
                chunk = members[start:start + 64]
                laps = np.stack([laplacian(adjacency_from_sq_dists(self.sq[i], params)[0]) for i in chunk])
                _, vecs = np.linalg.eigh(laps)
                for k, i in enumerate(chunk):
                    out[i] = self.signals[i] @ vecs[k]
        return out


def _cloud_blocks(cloud: PointCloud, channel: str):
    part = build_kdtree(cloud.positions, choose_depth(cloud.point_count))
    y = get_channel(cloud, channel)
    return part, y


def evaluate_cell(block_sets: list[_Blocks], params: GraphParams, k: int) -> float:
    return float(np.mean([compaction_objective(bs.coefficients(params), k) for bs in block_sets]))


def _grid_search(block_sets: list[_Blocks], k: int, grid_step: float, values=None) -> TrainReport:
    values = grid_values(grid_step) if values is None else list(values)
    grid = []
    best = None
    best_obj = -np.inf
    for f in values:
        for t in values:
            params = GraphParams(f, t)
            obj = evaluate_cell(block_sets, params, k)
            grid.append((f, t, obj))
            if obj > best_obj:  # strict: ties keep the smaller f, then t
                best_obj = obj
                best = params
    return TrainReport(best, grid, f"compaction@{k}")


def train_offline(clouds, channel: str = "Y", k: int = 20, grid_step: float = 0.05, values=None) -> TrainReport:
    """Pick the (f, t) grid cell with the best mean compaction over ``clouds``."""
    if len(clouds) == 0:
        raise ValueError("need at least one training cloud")
    sets = []
    for cloud in clouds:
        part, y = _cloud_blocks(cloud, channel)
        sets.append(_Blocks([cloud.positions[b] for b in part.blocks], [y[b] for b in part.blocks]))
    return _grid_search(sets, k, grid_step, values)


def train_online(
    cloud: PointCloud,
    channel: str = "Y",
    sample_blocks: int = 64,
    seed: int = 0,
    k: int = 20,
    grid_step: float = 0.05,
    values=None,
) -> TrainReport:
    """Grid search restricted to a seeded random sample of the cloud's blocks."""
    part, y = _cloud_blocks(cloud, channel)
    ids = sample_block_ids(len(part.blocks), sample_blocks, seed)
    bs = _Blocks([cloud.positions[part.blocks[i]] for i in ids], [y[part.blocks[i]] for i in ids])
    return _grid_search([bs], k, grid_step, values)


def sample_block_ids(num_blocks: int, count: int, seed: int) -> np.ndarray:
    if num_blocks < 1:
        raise ValueError("cloud has no blocks")
    if count >= num_blocks:
        return np.arange(num_blocks)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(num_blocks, size=count, replace=False))

"""Rate/distortion and transform-efficiency measurements."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .coding import DEFAULT_MODES, DEFAULT_QPS, CloudEncoder
from .partition import build_kdtree, choose_depth
from .ply_io import PointCloud, get_channel
from .trainer import compaction_ratio, sample_block_ids
from .transform import GraphParams, block_transforms, forward_dct, morton_order

__all__ = [
    "RdPoint",
    "y_psnr",
    "psnr_from_ssd",
    "bits_per_point",
    "residual_variance_profile",
    "block_coefficients",
    "compaction_comparison",
    "variance_comparison",
    "rd_sweep",
    "rd_points_to_csv",
    "rd_points_from_csv",
    "compaction_to_csv",
    "variance_to_csv",
]


@dataclass
class RdPoint:
    qp: int
    mode: int
    bpp: float
    psnr_db: float
    distortion_ssd: float


def psnr_from_ssd(ssd: float, count: int, peak: float = 255.0) -> float:
    mse = ssd / count
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def y_psnr(reference, test, peak: float = 255.0) -> float:
    ref = np.asarray(reference, dtype=np.float64)
    tst = np.asarray(test, dtype=np.float64)
    if ref.shape != tst.shape:
        raise ValueError(f"length mismatch: {ref.shape} vs {tst.shape}")
    if ref.size == 0:
        raise ValueError("empty input")
    return psnr_from_ssd(float(np.sum((ref - tst) ** 2)), ref.size, peak)


def bits_per_point(total_bits: int, point_count: int) -> float:
    if point_count < 1:
        raise ValueError("point_count must be positive")
    return total_bits / point_count


def residual_variance_profile(blocks, max_dim: int) -> np.ndarray:
    """Population variance of coefficient ``j`` over the blocks that have it."""
    if len(blocks) == 0:
        raise ValueError("need at least one block")
    out = np.zeros(max_dim)
    for j in range(max_dim):
        col = np.array([b[j] for b in blocks if len(b) > j], dtype=np.float64)
        if col.size:
            out[j] = col.var()
    return out


def block_coefficients(cloud: PointCloud, channel: str, params: GraphParams, block_ids=None):
    """Graph-transform and Morton-ordered DCT coefficients of selected blocks."""
    part = build_kdtree(cloud.positions, choose_depth(cloud.point_count))
    y = get_channel(cloud, channel)
    ids = np.arange(len(part.blocks)) if block_ids is None else np.asarray(block_ids)
    pos = [cloud.positions[part.blocks[i]] for i in ids]
    sig = [y[part.blocks[i]] for i in ids]
    transforms = block_transforms(pos, params.as_float32())
    gt = [s @ tr.basis for s, tr in zip(sig, transforms)]
    dct = [forward_dct(s[morton_order(p)]) for s, p in zip(sig, pos)]
    return ids, gt, dct


def compaction_comparison(
    cloud: PointCloud,
    channel: str = "Y",
    params: GraphParams = GraphParams(),
    num_blocks: int = 50,
    k: int = 20,
    seed: int = 0,
) -> list[tuple[int, float, float]]:
    """(block_id, graph ratio, DCT ratio) for a seeded sample of blocks."""
    total = 1 << choose_depth(cloud.point_count)
    ids = sample_block_ids(total, num_blocks, seed)
    ids, gt, dct = block_coefficients(cloud, channel, params, ids)
    return [(int(i), compaction_ratio(g, k), compaction_ratio(d, k)) for i, g, d in zip(ids, gt, dct)]


def variance_comparison(cloud, channel="Y", params=GraphParams(), max_dim=None):
    _, gt, dct = block_coefficients(cloud, channel, params)
    if max_dim is None:
        max_dim = max(len(c) for c in gt)
    return residual_variance_profile(gt, max_dim), residual_variance_profile(dct, max_dim)


def rd_sweep(
    cloud: PointCloud,
    channel: str = "Y",
    params: GraphParams = GraphParams(),
    qps=DEFAULT_QPS,
    modes=DEFAULT_MODES,
    encoder: CloudEncoder | None = None,
) -> list[RdPoint]:
    if encoder is None:
        if channel not in cloud.channels:
            cloud = cloud.with_channels(**{channel: get_channel(cloud, channel)})
        encoder = CloudEncoder(cloud, channel, params)
    ref = encoder.cloud.channels[encoder.channels[0]]
    points = []
    for qp in qps:
        for x in modes:
            res = encoder.encode(qp, x)
            ssd = float(np.sum((res.reconstruction[encoder.channels[0]] - ref) ** 2))
            points.append(RdPoint(int(qp), int(x), bits_per_point(res.total_bits, res.point_count),
                                  psnr_from_ssd(ssd, ref.size), ssd))
    return points


def _fmt(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def _rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def rd_points_to_csv(points) -> str:
    return _rows_to_csv(["qp", "x", "bpp", "psnr"], [(p.qp, p.mode, p.bpp, p.psnr_db) for p in points])


def rd_points_from_csv(text: str) -> list[tuple[int, int, float, float]]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [(int(r["qp"]), int(r["x"]), float(r["bpp"]), float(r["psnr"])) for r in rows]


def compaction_to_csv(rows) -> str:
    return _rows_to_csv(["block_id", "gt_ratio", "dct_ratio"], rows)


def variance_to_csv(var_gt, var_dct) -> str:
    return _rows_to_csv(
        ["dim", "var_gt", "var_dct"],
        [(j, float(a), float(b)) for j, (a, b) in enumerate(zip(var_gt, var_dct))],
    )

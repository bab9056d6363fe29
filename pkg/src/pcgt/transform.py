"""Block graph construction, Laplacian eigenbasis and the DCT baseline.

Each transform block becomes a fully connected candidate graph whose edge
weights are Gaussian in the squared point distance.  Edges lighter than the
threshold are dropped.  The Laplacian eigenvectors form the block's
orthonormal transform.

``f`` and ``t`` are scale-free stand-ins for the kernel width and the
distance threshold: a pair at the block's mean squared distance gets weight
``f``, and an edge survives iff its weight is at least ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import dct, idct

__all__ = [
    "GraphParams",
    "BlockGraph",
    "GraphTransform",
    "EigenConvergenceError",
    "sigma_sq_from_f",
    "pairwise_sq_dists",
    "adjacency_from_sq_dists",
    "build_adjacency",
    "laplacian",
    "eigendecompose",
    "jacobi_eigh",
    "block_transform",
    "block_transforms",
    "forward_gt",
    "inverse_gt",
    "morton_order",
    "forward_dct",
    "inverse_dct",
]


@dataclass(frozen=True)
class GraphParams:
    f: float = 0.3
    t: float = 0.6

    def __post_init__(self):
        for name in ("f", "t"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie strictly inside (0, 1), got {v}")

    def as_float32(self) -> "GraphParams":
        """The values the bitstream header can carry."""
        return GraphParams(float(np.float32(self.f)), float(np.float32(self.t)))


@dataclass
class BlockGraph:
    size: int
    mean_sq_dist: float
    sigma_sq: float
    adjacency: np.ndarray
    degrees: np.ndarray

    @property
    def laplacian(self) -> np.ndarray:
        return np.diag(self.degrees) - self.adjacency


@dataclass
class GraphTransform:
    basis: np.ndarray
    eigenvalues: np.ndarray

    @property
    def size(self) -> int:
        return self.basis.shape[0]


class EigenConvergenceError(RuntimeError):
    pass


def sigma_sq_from_f(f: float, mean_sq_dist: float) -> float:
    """Kernel width that gives weight ``f`` to a pair at the mean squared distance."""
    if not 0.0 < f < 1.0:
        raise ValueError(f"f must lie in (0, 1), got {f}")
    if mean_sq_dist <= 0.0:
        raise ValueError("mean squared distance must be positive")
    return mean_sq_dist / -math.log(f)


def pairwise_sq_dists(points: np.ndarray) -> np.ndarray:
    out = np.zeros((points.shape[0], points.shape[0]))
    for k in range(points.shape[1]):
        d = points[:, k, None] - points[None, :, k]
        out += d * d
    return out


def adjacency_from_sq_dists(sq: np.ndarray, params: GraphParams) -> tuple[np.ndarray, float, float]:
    """Thresholded weight matrix plus the block's mean squared distance and sigma^2."""
    n = sq.shape[0]
    mean_sq = float(sq.sum() / (n * (n - 1)))
    if mean_sq == 0.0:
        # all points coincide: every pair sits at distance zero
        w = np.ones((n, n))
        np.fill_diagonal(w, 0.0)
        return w, 0.0, 0.0
    sigma_sq = sigma_sq_from_f(params.f, mean_sq)
    w = np.exp(-sq / sigma_sq)
    w[w < params.t] = 0.0
    np.fill_diagonal(w, 0.0)
    return w, mean_sq, sigma_sq


def build_adjacency(block_positions: np.ndarray, params: GraphParams) -> BlockGraph:
    pts = np.asarray(block_positions, dtype=np.float64)
    n = pts.shape[0]
    if n < 2:
        raise ValueError("a block graph needs at least two points")
    w, mean_sq, sigma_sq = adjacency_from_sq_dists(pairwise_sq_dists(pts), params)
    return BlockGraph(n, mean_sq, sigma_sq, w, w.sum(axis=1))


def laplacian(adjacency: np.ndarray) -> np.ndarray:
    return np.diag(adjacency.sum(axis=1)) - adjacency


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    mag = np.abs(vecs)
    near_max = mag >= mag.max(axis=0, keepdims=True) - 1e-12
    pivot = np.argmax(near_max, axis=0)
    signs = np.where(vecs[pivot, np.arange(vecs.shape[1])] < 0, -1.0, 1.0)
    return vecs * signs


def jacobi_eigh(mat: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi eigensolver for a real symmetric matrix.

    Rotations visit (p, q) in row-major order each sweep.  Stops once the
    off-diagonal Frobenius norm is below ``tol * ||mat||_F``.
    Returns unsorted ``(eigenvalues, eigenvectors)``.
    """
    a = np.array(mat, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if n < 2 or scale == 0.0:
        return np.diag(a).copy(), v
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a[~np.eye(n, dtype=bool)]))
        if off <= tol * scale:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) <= 1e-300 * max(abs(diff), 1.0):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = diff / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q]
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :]
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    raise EigenConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")


def _finish(vals: np.ndarray, vecs: np.ndarray) -> GraphTransform:
    order = np.argsort(vals, kind="stable")
    return GraphTransform(_fix_signs(vecs[:, order]), vals[order])


def eigendecompose(graph, method: str = "lapack") -> GraphTransform:
    """Orthonormal Laplacian eigenbasis, eigenvalues ascending.

    ``graph`` is a ``BlockGraph`` or a Laplacian matrix.  Each column is
    signed so that its largest-magnitude entry (first one on ties) is
    non-negative, which makes the basis a pure function of the input.
    """
    lap = graph.laplacian if isinstance(graph, BlockGraph) else np.asarray(graph, dtype=np.float64)
    if method == "lapack":
        vals, vecs = np.linalg.eigh(lap)
    elif method == "jacobi":
        vals, vecs = jacobi_eigh(lap)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    return _finish(vals, vecs)


def block_transforms(blocks: list[np.ndarray], params: GraphParams) -> list[GraphTransform]:
    """Graph transforms for many blocks at once, batched by block size.

    ``blocks`` holds per-block position arrays.  Same-size Laplacians go
    through one stacked ``eigh`` call; results match per-block calls exactly.
    """
    out: list[GraphTransform | None] = [None] * len(blocks)
    by_size: dict[int, list[int]] = {}
    for i, pts in enumerate(blocks):
        by_size.setdefault(len(pts), []).append(i)
    for n, members in by_size.items():
        if n == 1:
            for i in members:
                out[i] = GraphTransform(np.ones((1, 1)), np.zeros(1))
            continue
        for start in range(0, len(members), _BATCH):
            chunk = members[start:start + _BATCH]
            laps = np.empty((len(chunk), n, n))
            for k, i in enumerate(chunk):
                w, _, _ = adjacency_from_sq_dists(pairwise_sq_dists(np.asarray(blocks[i], dtype=np.float64)), params)
                laps[k] = laplacian(w)
            vals, vecs = np.linalg.eigh(laps)
            for k, i in enumerate(chunk):
                out[i] = _finish(vals[k], vecs[k])
    return out


_BATCH = 64


def block_transform(block_positions: np.ndarray, params: GraphParams) -> GraphTransform:
    pts = np.asarray(block_positions, dtype=np.float64)
    if pts.shape[0] == 1:
        return GraphTransform(np.ones((1, 1)), np.zeros(1))
    return eigendecompose(build_adjacency(pts, params))


def forward_gt(signal: np.ndarray, transform: GraphTransform) -> np.ndarray:
    y = np.asarray(signal, dtype=np.float64)
    if y.shape[-1] != transform.size:
        raise ValueError(f"signal length {y.shape[-1]} != transform size {transform.size}")
    return y @ transform.basis


def inverse_gt(coeffs: np.ndarray, transform: GraphTransform) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64)
    if c.shape[-1] != transform.size:
        raise ValueError(f"coefficient length {c.shape[-1]} != transform size {transform.size}")
    return c @ transform.basis.T


def _spread_bits(v: np.ndarray) -> np.ndarray:
    # 21 bits per axis -> 63-bit key
    v = v.astype(np.uint64) & np.uint64(0x1FFFFF)
    v = (v | (v << np.uint64(32))) & np.uint64(0x1F00000000FFFF)
    v = (v | (v << np.uint64(16))) & np.uint64(0x1F0000FF0000FF)
    v = (v | (v << np.uint64(8))) & np.uint64(0x100F00F00F00F00F)
    v = (v | (v << np.uint64(4))) & np.uint64(0x10C30C30C30C30C3)
    v = (v | (v << np.uint64(2))) & np.uint64(0x1249249249249249)
    return v


def morton_order(block_positions: np.ndarray) -> np.ndarray:
    """Stable z-order permutation; x occupies the lowest interleaved bit.

    Non-negative integer coordinates are used directly, anything else is
    shifted to a zero minimum and floored first.
    """
    pts = np.asarray(block_positions, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    if np.all(pts >= 0) and np.all(pts == np.floor(pts)):
        grid = pts
    else:
        grid = np.floor(pts - pts.min(axis=0))
    key = _spread_bits(grid[:, 0]) | (_spread_bits(grid[:, 1]) << np.uint64(1)) | (
        _spread_bits(grid[:, 2]) << np.uint64(2)
    )
    return np.argsort(key, kind="stable")


def forward_dct(signal: np.ndarray) -> np.ndarray:
    return dct(np.asarray(signal, dtype=np.float64), type=2, norm="ortho", axis=-1)


def inverse_dct(coeffs: np.ndarray) -> np.ndarray:
    return idct(np.asarray(coeffs, dtype=np.float64), type=2, norm="ortho", axis=-1)

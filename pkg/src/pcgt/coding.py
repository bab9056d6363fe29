"""Quantization, mode selection and the encode/decode pipeline.

A cloud is split into k-d blocks, every block gets its graph transform,
and only the first ``x`` coefficients of each block are kept and uniformly
quantized with step ``qp``.  The quantized symbols are range coded under a
static per-dimension Laplacian model whose parameters travel in the
bitstream.  The decoder rebuilds the partition and transforms from the
geometry plus header fields.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .bitstream import Bitstream, BitstreamError, ChannelPayload, Header
from .entropy import entropy_decode, entropy_encode, estimate_model
from .partition import KdPartition, build_kdtree, choose_depth
from .ply_io import PointCloud
from .transform import GraphParams, GraphTransform, block_transforms

__all__ = [
    "AUTO",
    "DEFAULT_MODES",
    "DEFAULT_QPS",
    "QuantConfig",
    "RdoCandidate",
    "ConstrainedChoice",
    "GeometryAnalysis",
    "EncodeResult",
    "CloudEncoder",
    "truncate_dims",
    "quantize",
    "dequantize",
    "block_distortion",
    "lambda_from_qp",
    "analyze_geometry",
    "encode_cloud",
    "decode_cloud",
    "rdo_select_lagrangian",
    "rdo_select_constrained",
    "channel_names",
]

log = logging.getLogger(__name__)

AUTO = "auto"
DEFAULT_MODES = (4, 8, 16, 32, 64)
DEFAULT_QPS = (8, 16, 32, 48, 64, 80, 96)


@dataclass
class QuantConfig:
    qp: int
    mode: int | str = AUTO
    m: float = 0.85
    mode_candidates: Sequence[int] = DEFAULT_MODES

    def __post_init__(self):
        if int(self.qp) != self.qp or not 1 <= self.qp <= 0xFFFF:
            raise ValueError(f"qp must be an integer in [1, 65535], got {self.qp}")
        self.qp = int(self.qp)
        if self.mode != AUTO:
            _check_mode(self.mode)
        for x in self.mode_candidates:
            _check_mode(x)
        if self.m < 0:
            raise ValueError("m must be non-negative")


def _check_mode(x):
    if isinstance(x, bool) or int(x) != x or not 1 <= x <= 0xFFFF:
        raise ValueError(f"mode must be an integer in [1, 65535], got {x!r}")


@dataclass
class RdoCandidate:
    mode: int
    rate_bits: int
    distortion: float
    cost: float


class ConstrainedChoice(NamedTuple):
    mode: int
    feasible: bool
    candidates: list


def truncate_dims(coeffs: np.ndarray, x: int) -> np.ndarray:
    out = np.array(coeffs, dtype=np.float64)
    out[x:] = 0.0
    return out


def quantize(coeff, qp):
    """Uniform quantizer index, rounding halves away from zero."""
    c = np.asarray(coeff, dtype=np.float64) / qp
    q = (np.sign(c) * np.floor(np.abs(c) + 0.5)).astype(np.int64)
    return int(q) if q.ndim == 0 else q


def dequantize(q, qp):
    r = np.asarray(q, dtype=np.float64) * qp
    return float(r) if r.ndim == 0 else r


def block_distortion(original: np.ndarray, kept_quantized: np.ndarray) -> float:
    """Coefficient-domain SSD of a block.

    ``kept_quantized`` holds the reconstructed values of the leading kept
    coefficients; the rest of ``original`` counts as fully lost.
    """
    c = np.asarray(original, dtype=np.float64)
    r = np.asarray(kept_quantized, dtype=np.float64)
    k = len(r)
    if k > len(c):
        raise ValueError("more kept coefficients than block dimensions")
    return float(np.sum((c[:k] - r) ** 2) + np.sum(c[k:] ** 2))


def lambda_from_qp(qp: float, m: float = 0.85) -> float:
    return m * 2.0 ** (qp / 6.0)


def channel_names(count: int) -> list[str]:
    return ["Y"] if count == 1 else ["Y", "Cb", "Cr"]


@dataclass
class GeometryAnalysis:
    partition: KdPartition
    transforms: list[GraphTransform]
    params: GraphParams

    @property
    def block_sizes(self) -> np.ndarray:
        return self.partition.sizes

    def coefficients(self, values: np.ndarray) -> list[np.ndarray]:
        return [values[idx] @ tr.basis for idx, tr in zip(self.partition.blocks, self.transforms)]

    def reconstruct(self, kept: Sequence[np.ndarray], qp: int, point_count: int) -> np.ndarray:
        out = np.zeros(point_count)
        for idx, tr, q in zip(self.partition.blocks, self.transforms, kept):
            k = len(q)
            out[idx] = tr.basis[:, :k] @ (q.astype(np.float64) * qp)
        return out


def analyze_geometry(positions: np.ndarray, params: GraphParams, depth: int | None = None) -> GeometryAnalysis:
    positions = np.asarray(positions, dtype=np.float64)
    if depth is None:
        depth = choose_depth(positions.shape[0])
    part = build_kdtree(positions, depth)
    transforms = block_transforms([positions[idx] for idx in part.blocks], params)
    return GeometryAnalysis(part, transforms, params)


@dataclass
class EncodeResult:
    bitstream: Bitstream
    mode: int
    qp: int
    reconstruction: dict[str, np.ndarray]
    distortion: float
    candidates: list[RdoCandidate] = field(default_factory=list)
    feasible: bool = True

    @property
    def data(self) -> bytes:
        return self.bitstream.to_bytes()

    @property
    def total_bits(self) -> int:
        return self.bitstream.total_bits

    @property
    def point_count(self) -> int:
        return self.bitstream.header.point_count

    @property
    def bpp(self) -> float:
        return self.total_bits / self.point_count


class CloudEncoder:
    """Encoder state for one cloud: partition, transforms and coefficients.

    Building it runs the eigendecompositions once; every later ``encode``
    call at any (qp, mode) reuses them.
    """

    def __init__(self, cloud: PointCloud, channels="Y", params: GraphParams = GraphParams()):
        names = [channels] if isinstance(channels, str) else list(channels)
        if len(names) not in (1, 3):
            raise ValueError("code either 1 or 3 channels")
        for name in names:
            if name not in cloud.channels:
                raise KeyError(f"cloud has no channel {name!r}")
        if cloud.point_count < 1:
            raise ValueError("cannot encode an empty cloud")
        self.cloud = cloud
        self.channels = names
        self.params = params.as_float32()
        self.analysis = analyze_geometry(cloud.positions, self.params)
        self.coeffs = {name: self.analysis.coefficients(cloud.channels[name]) for name in names}
        self._qcache: dict[tuple[str, int], list[np.ndarray]] = {}

    @property
    def max_block_size(self) -> int:
        return int(self.analysis.block_sizes.max())

    def _quantized(self, name: str, qp: int) -> list[np.ndarray]:
        key = (name, qp)
        if key not in self._qcache:
            self._qcache[key] = [quantize(c, qp) for c in self.coeffs[name]]
        return self._qcache[key]

    def encode(self, qp: int, mode: int) -> EncodeResult:
        _check_mode(mode)
        QuantConfig(qp, mode)
        mode = int(mode)
        header = Header(
            channel_count=len(self.channels), qp=qp, mode=mode,
            depth=self.analysis.partition.depth, point_count=self.cloud.point_count,
            f=self.params.f, t=self.params.t,
        )
        payloads = []
        recon = {}
        distortion = 0.0
        for name in self.channels:
            kept = [q[:mode] for q in self._quantized(name, qp)]
            model = estimate_model(kept, mode).transmitted()
            payloads.append(ChannelPayload(model, entropy_encode(kept, model)))
            distortion += sum(
                block_distortion(c, k * float(qp)) for c, k in zip(self.coeffs[name], kept)
            )
            recon[name] = self.analysis.reconstruct(kept, qp, self.cloud.point_count)
        return EncodeResult(Bitstream(header, payloads), mode, qp, recon, distortion)

    def candidates(self, qp: int, modes: Sequence[int], m: float = 0.85):
        lam = lambda_from_qp(qp, m)
        out = []
        for x in modes:
            res = self.encode(qp, x)
            bits = res.total_bits
            out.append((RdoCandidate(int(x), bits, res.distortion, res.distortion + lam * bits), res))
        return out

    def select_lagrangian(self, qp: int, m: float, modes: Sequence[int]):
        if not modes:
            raise ValueError("no mode candidates")
        evaluated = self.candidates(qp, modes, m)
        best = min(evaluated, key=lambda cr: (cr[0].cost, cr[0].mode))
        return best, [c for c, _ in evaluated]

    def select_constrained(self, qp: int, modes: Sequence[int], r_max: float):
        if not modes:
            raise ValueError("no mode candidates")
        evaluated = self.candidates(qp, modes)
        n = self.cloud.point_count
        feasible = [cr for cr in evaluated if cr[0].rate_bits / n <= r_max]
        if feasible:
            best = min(feasible, key=lambda cr: (cr[0].distortion, cr[0].mode))
            ok = True
        else:
            best = min(evaluated, key=lambda cr: (cr[0].rate_bits, cr[0].mode))
            ok = False
            log.warning("no mode meets %.4f bpp; falling back to x=%d", r_max, best[0].mode)
        return best, ok, [c for c, _ in evaluated]


def encode_cloud(
    cloud: PointCloud,
    channel="Y",
    params: GraphParams = GraphParams(),
    config: QuantConfig | None = None,
    r_max: float | None = None,
    encoder: CloudEncoder | None = None,
) -> EncodeResult:
    """Encode one (or three) attribute channels of ``cloud``.

    With ``config.mode == AUTO`` the mode is picked among
    ``config.mode_candidates``: by the Lagrangian cost, or, when ``r_max``
    (bits per point) is given, by least distortion under that rate.
    """
    if config is None:
        raise ValueError("a QuantConfig is required")
    enc = encoder or CloudEncoder(cloud, channel, params)
    if config.mode != AUTO:
        if r_max is not None:
            raise ValueError("r_max only applies to automatic mode selection")
        return enc.encode(config.qp, int(config.mode))
    if r_max is None:
        (cand, res), table = enc.select_lagrangian(config.qp, config.m, config.mode_candidates)
        res.candidates = table
        return res
    (cand, res), ok, table = enc.select_constrained(config.qp, config.mode_candidates, r_max)
    res.candidates = table
    res.feasible = ok
    return res


def decode_cloud(geometry, bitstream) -> PointCloud:
    """Rebuild the coded channels on ``geometry``.

    ``geometry`` must list the points in the order the encoder saw them.
    Output channels are named Y, or Y/Cb/Cr for three-channel streams.
    """
    positions = geometry.positions if isinstance(geometry, PointCloud) else np.asarray(geometry, dtype=np.float64)
    bs = bitstream if isinstance(bitstream, Bitstream) else Bitstream.from_bytes(bytes(bitstream))
    h = bs.header
    n = positions.shape[0]
    if n != h.point_count:
        raise BitstreamError(f"geometry has {n} points, bitstream expects {h.point_count}")
    if h.point_count < (1 << h.depth):
        raise BitstreamError(f"depth {h.depth} too deep for {h.point_count} points")
    if h.mode < 1 or h.qp < 1:
        raise BitstreamError("qp and mode must be positive")
    try:
        params = GraphParams(h.f, h.t)
    except ValueError as exc:
        raise BitstreamError(str(exc)) from None
    analysis = analyze_geometry(positions, params, depth=h.depth)
    counts = [min(h.mode, int(s)) for s in analysis.block_sizes]
    channels = {}
    for name, ch in zip(channel_names(h.channel_count), bs.channels):
        if ch.model.dims != h.mode:
            raise BitstreamError(f"model has {ch.model.dims} dims, header mode is {h.mode}")
        kept = entropy_decode(ch.payload, ch.model, counts)
        channels[name] = analysis.reconstruct(kept, h.qp, n)
    return PointCloud(positions, channels)


def rdo_select_lagrangian(cloud, channel, params, qp, m=0.85, candidates=DEFAULT_MODES, encoder=None):
    """Mode with least ``D + lambda * R``; ties go to the smaller mode."""
    enc = encoder or CloudEncoder(cloud, channel, params)
    (best, _), table = enc.select_lagrangian(qp, m, candidates)
    return best.mode, table


def rdo_select_constrained(cloud, channel, params, qp, candidates=DEFAULT_MODES, r_max=0.7, encoder=None):
    """Least-distortion mode whose rate fits ``r_max`` bits per point.

    If no candidate fits, the lowest-rate one is returned with
    ``feasible=False``.
    """
    enc = encoder or CloudEncoder(cloud, channel, params)
    (best, _), ok, table = enc.select_constrained(qp, candidates, r_max)
    return ConstrainedChoice(best.mode, ok, table)

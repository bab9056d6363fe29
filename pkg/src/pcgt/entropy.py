"""Static Laplacian model + 32-bit range coder for quantized coefficients.

Every coefficient dimension ``j`` has its own zero-mean Laplacian pmf,
``P(q) ~ exp(-|q| / b_j)`` truncated to ``[-qmax_j, qmax_j]``, quantized to a
16-bit frequency table in which each symbol has frequency at least 1.

The coder keeps a 32-bit ``range`` and a ``low`` register with one extra
carry bit.  Pending 0xFF bytes are held back until a carry is resolved.
Interval endpoints are computed as ``(range * cum) >> 16``, so the whole
range is used and no top slice is lost to truncation.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "PROB_BITS",
    "SCALE_FLOOR",
    "LaplacianModel",
    "EntropyDecodeError",
    "estimate_model",
    "frequency_table",
    "entropy_encode",
    "entropy_decode",
    "model_cross_entropy",
]

PROB_BITS = 16
PROB_TOTAL = 1 << PROB_BITS
SCALE_FLOOR = 1e-4

_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF


class EntropyDecodeError(ValueError):
    pass


@dataclass
class LaplacianModel:
    scales: np.ndarray
    max_mags: np.ndarray

    def __post_init__(self):
        self.scales = np.asarray(self.scales, dtype=np.float64)
        self.max_mags = np.asarray(self.max_mags, dtype=np.int64)
        if self.scales.shape != self.max_mags.shape:
            raise ValueError("scales and max_mags must have the same length")

    @property
    def dims(self) -> int:
        return len(self.scales)

    def transmitted(self) -> "LaplacianModel":
        """Scales rounded through binary32, as a decoder reads them."""
        return LaplacianModel(self.scales.astype(np.float32).astype(np.float64), self.max_mags.copy())

    def tables(self) -> list[list[int]]:
        """Cumulative frequency lists, one per dimension."""
        out = []
        for b, qm in zip(self.scales.tolist(), self.max_mags.tolist()):
            freq = frequency_table(b, qm)
            out.append([0] + np.cumsum(freq).tolist())
        return out


def estimate_model(blocks: Sequence[np.ndarray], dims: int) -> LaplacianModel:
    """Per-dimension Laplacian scale (mean |q|) and max magnitude.

    ``blocks`` holds each block's kept quantized coefficients; a block
    shorter than ``dims`` simply contributes nothing to the missing ones.
    """
    if len(blocks) == 0:
        raise ValueError("need at least one block")
    abs_sum = np.zeros(dims)
    count = np.zeros(dims, dtype=np.int64)
    qmax = np.zeros(dims, dtype=np.int64)
    for blk in blocks:
        a = np.abs(np.asarray(blk[:dims], dtype=np.int64))
        k = len(a)
        abs_sum[:k] += a
        count[:k] += 1
        np.maximum(qmax[:k], a, out=qmax[:k])
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(count > 0, abs_sum / np.maximum(count, 1), 0.0)
    return LaplacianModel(np.maximum(mean, SCALE_FLOOR), qmax)


def frequency_table(scale: float, max_mag: int) -> np.ndarray:
    """Integer frequencies for symbols ``-max_mag..max_mag`` summing to 2**16."""
    k = 2 * max_mag + 1
    if k > PROB_TOTAL:
        raise ValueError(f"alphabet of {k} symbols exceeds the {PROB_BITS}-bit table")
    mags = np.abs(np.arange(-max_mag, max_mag + 1, dtype=np.float64))
    p = np.exp(-mags / scale)
    p /= p.sum()
    freq = np.floor(p * (PROB_TOTAL - k)).astype(np.int64) + 1
    freq[max_mag] += PROB_TOTAL - int(freq.sum())
    return freq


def model_cross_entropy(blocks: Sequence[np.ndarray], model: LaplacianModel) -> float:
    """Ideal code length in bits of ``blocks`` under the quantized model."""
    bits = 0.0
    for j, (b, qm) in enumerate(zip(model.scales.tolist(), model.max_mags.tolist())):
        col = [int(blk[j]) for blk in blocks if len(blk) > j]
        if not col:
            continue
        freq = frequency_table(b, qm)
        idx = np.asarray(col, dtype=np.int64) + qm
        bits += float(-np.log2(freq[idx] / PROB_TOTAL).sum())
    return bits


def entropy_encode(blocks: Sequence[np.ndarray], model: LaplacianModel) -> bytes:
    """Range-code the symbols block by block, dimension ``j`` using table ``j``."""
    cums = model.tables()
    qmax = model.max_mags.tolist()
    low = 0
    rng = _MASK32
    cache = 0
    cache_size = 1
    out = bytearray()

    def shift_low():
        nonlocal low, cache, cache_size
        if low < 0xFF000000 or low > _MASK32:
            carry = low >> 32
            temp = cache
            while True:
                out.append((temp + carry) & 0xFF)
                temp = 0xFF
                cache_size -= 1
                if cache_size == 0:
                    break
            cache = (low >> 24) & 0xFF
        cache_size += 1
        low = (low & 0x00FFFFFF) << 8

    for bi, blk in enumerate(blocks):
        for j, q in enumerate(np.asarray(blk).tolist()):
            qm = qmax[j]
            if q < -qm or q > qm:
                raise ValueError(f"block {bi} dim {j}: symbol {q} outside [-{qm}, {qm}]")
            cum = cums[j]
            lo = (rng * cum[q + qm]) >> PROB_BITS
            hi = (rng * cum[q + qm + 1]) >> PROB_BITS
            low += lo
            rng = hi - lo
            while rng < _TOP:
                rng <<= 8
                shift_low()
    for _ in range(5):
        shift_low()
    return bytes(out)


def entropy_decode(data: bytes, model: LaplacianModel, counts: Sequence[int]) -> list[np.ndarray]:
    """Inverse of :func:`entropy_encode`; ``counts`` gives each block's symbol count.

    Raises ``EntropyDecodeError`` if the stream runs out early or if bytes
    are left over once every symbol has been decoded.
    """
    cums = model.tables()
    qmax = model.max_mags.tolist()
    n = len(data)
    if n < 5:
        raise EntropyDecodeError("payload shorter than the coder preamble")
    if data[0] != 0:
        raise EntropyDecodeError("corrupt payload: nonzero lead byte")
    code = int.from_bytes(data[1:5], "big")
    pos = 5
    rng = _MASK32
    result = []
    for count in counts:
        if count > len(cums):
            raise EntropyDecodeError(f"block wants {count} dims, model has {len(cums)}")
        syms = [0] * count
        for j in range(count):
            if code >= rng:
                raise EntropyDecodeError("corrupt payload: code outside range")
            cum = cums[j]
            target = (((code + 1) << PROB_BITS) - 1) // rng
            s = bisect_right(cum, target) - 1
            lo = (rng * cum[s]) >> PROB_BITS
            hi = (rng * cum[s + 1]) >> PROB_BITS
            code -= lo
            rng = hi - lo
            while rng < _TOP:
                if pos >= n:
                    raise EntropyDecodeError("payload truncated")
                code = ((code << 8) | data[pos]) & _MASK32
                rng <<= 8
                pos += 1
            syms[j] = s - qmax[j]
        result.append(np.array(syms, dtype=np.int64))
    if pos != n:
        raise EntropyDecodeError(f"{n - pos} unused payload bytes")
    return result


"""Binary container for coded attribute channels (all fields little-endian).

Layout::

    0   4s  magic "PCGT"
    4   u8  version (1)
    5   u8  channel count (1 or 3)
    6   u16 qp
    8   u16 mode x
    10  u8  k-d depth
    11  u32 point count
    15  f32 f
    19  f32 t
    then per channel:
        u16 dim_count (= x)
        dim_count * (f32 scale, u16 max magnitude)
        u32 payload length, payload bytes
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .entropy import LaplacianModel

__all__ = ["MAGIC", "VERSION", "BitstreamError", "Header", "ChannelPayload", "Bitstream"]

MAGIC = b"PCGT"
VERSION = 1

_HEADER = struct.Struct("<4sBBHHBIff")


class BitstreamError(ValueError):
    pass


@dataclass
class Header:
    channel_count: int
    qp: int
    mode: int
    depth: int
    point_count: int
    f: float
    t: float

    def to_bytes(self) -> bytes:
        if self.channel_count not in (1, 3):
            raise BitstreamError("channel count must be 1 or 3")
        try:
            return _HEADER.pack(
                MAGIC, VERSION, self.channel_count, self.qp, self.mode,
                self.depth, self.point_count, self.f, self.t,
            )
        except struct.error as exc:
            raise BitstreamError(f"header field out of range: {exc}") from None

    @classmethod
    def from_bytes(cls, data: bytes) -> "Header":
        if len(data) < _HEADER.size:
            raise BitstreamError("bitstream shorter than its header")
        magic, version, nch, qp, mode, depth, count, f, t = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise BitstreamError(f"bad magic {magic!r}")
        if version != VERSION:
            raise BitstreamError(f"unsupported version {version}")
        if nch not in (1, 3):
            raise BitstreamError(f"bad channel count {nch}")
        return cls(nch, qp, mode, depth, count, f, t)


@dataclass
class ChannelPayload:
    model: LaplacianModel
    payload: bytes

    def to_bytes(self) -> bytes:
        dims = self.model.dims
        rec = np.empty(dims, dtype=[("scale", "<f4"), ("qmax", "<u2")])
        rec["scale"] = self.model.scales
        if np.any(self.model.max_mags > 0xFFFF):
            raise BitstreamError("max magnitude does not fit in u16")
        rec["qmax"] = self.model.max_mags
        return (
            struct.pack("<H", dims) + rec.tobytes()
            + struct.pack("<I", len(self.payload)) + self.payload
        )


@dataclass
class Bitstream:
    header: Header
    channels: list[ChannelPayload] = field(default_factory=list)

    def to_bytes(self) -> bytes:
        if len(self.channels) != self.header.channel_count:
            raise BitstreamError("channel payload count does not match header")
        return self.header.to_bytes() + b"".join(c.to_bytes() for c in self.channels)

    @property
    def total_bits(self) -> int:
        return 8 * len(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "Bitstream":
        header = Header.from_bytes(data)
        pos = _HEADER.size
        channels = []
        for _ in range(header.channel_count):
            if pos + 2 > len(data):
                raise BitstreamError("truncated channel header")
            (dims,) = struct.unpack_from("<H", data, pos)
            pos += 2
            rec_dtype = np.dtype([("scale", "<f4"), ("qmax", "<u2")])
            nbytes = dims * rec_dtype.itemsize
            if pos + nbytes + 4 > len(data):
                raise BitstreamError("truncated model table")
            rec = np.frombuffer(data, dtype=rec_dtype, count=dims, offset=pos)
            pos += nbytes
            (plen,) = struct.unpack_from("<I", data, pos)
            pos += 4
            if pos + plen > len(data):
                raise BitstreamError("truncated payload")
            model = LaplacianModel(rec["scale"].astype(np.float64), rec["qmax"].astype(np.int64))
            channels.append(ChannelPayload(model, bytes(data[pos:pos + plen])))
            pos += plen
        if pos != len(data):
            raise BitstreamError(f"{len(data) - pos} trailing bytes after last channel")
        return cls(header, channels)

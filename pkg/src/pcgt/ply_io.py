"""PLY reading/writing and RGB <-> YCbCr conversion.

Only the ``vertex`` element is interpreted.  Positions come back as an
``(n, 3)`` float64 array and every scalar vertex property other than x/y/z
becomes a named attribute channel (``red/green/blue`` are renamed R/G/B).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PointCloud",
    "PlyError",
    "PlyParseError",
    "PlyUnsupportedFormatError",
    "PlyTruncatedError",
    "parse_ply",
    "write_ply",
    "read_ply",
    "save_ply",
    "rgb_to_ycbcr",
    "ycbcr_to_rgb",
    "BT709",
    "get_channel",
]


class PlyError(ValueError):
    pass


class PlyParseError(PlyError):
    pass


class PlyUnsupportedFormatError(PlyError):
    pass


class PlyTruncatedError(PlyError):
    pass


@dataclass
class PointCloud:
    positions: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.size == 0:
            pos = pos.reshape(0, 3)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError(f"positions must have shape (n, 3), got {pos.shape}")
        self.positions = pos
        chans = {}
        for name, values in self.channels.items():
            arr = np.asarray(values, dtype=np.float64).reshape(-1)
            if arr.shape[0] != pos.shape[0]:
                raise ValueError(
                    f"channel {name!r} has {arr.shape[0]} values for {pos.shape[0]} points"
                )
            chans[name] = arr
        self.channels = chans

    @property
    def point_count(self) -> int:
        return self.positions.shape[0]

    def with_channels(self, **channels) -> "PointCloud":
        merged = dict(self.channels)
        merged.update(channels)
        return PointCloud(self.positions, merged)


# PLY scalar type name -> numpy little-endian dtype string
_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

_COLOR_RENAME = {"red": "R", "green": "G", "blue": "B"}
_COLOR_NAMES = {v: k for k, v in _COLOR_RENAME.items()}


@dataclass
class _Element:
    name: str
    count: int
    props: list = field(default_factory=list)  # (name, dtype) or (name, None, count_dt, item_dt)

    @property
    def has_list(self):
        return any(len(p) == 4 for p in self.props)


def _parse_header(data: bytes):
    end = data.find(b"end_header")
    if end < 0:
        raise PlyParseError("missing end_header")
    nl = data.find(b"\n", end)
    if nl < 0:
        raise PlyParseError("no newline after end_header")
    body_offset = nl + 1
    try:
        text = data[:end].decode("ascii")
    except UnicodeDecodeError as exc:
        raise PlyParseError(f"non-ascii header at offset {exc.start}") from None
    lines = text.replace("\r", "").split("\n")
    if not lines or lines[0].strip() != "ply":
        raise PlyParseError("line 1: expected 'ply' magic")

    fmt = None
    elements: list[_Element] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        tok = raw.split()
        if not tok or tok[0] in ("comment", "obj_info"):
            continue
        kw = tok[0]
        if kw == "format":
            if len(tok) != 3:
                raise PlyParseError(f"line {lineno}: malformed format line")
            fmt = tok[1]
            if fmt == "binary_big_endian":
                raise PlyUnsupportedFormatError("binary_big_endian PLY is not supported")
            if fmt not in ("ascii", "binary_little_endian"):
                raise PlyParseError(f"line {lineno}: unknown format {fmt!r}")
        elif kw == "element":
            if len(tok) != 3:
                raise PlyParseError(f"line {lineno}: malformed element line")
            try:
                count = int(tok[2])
            except ValueError:
                raise PlyParseError(f"line {lineno}: bad element count {tok[2]!r}") from None
            if count < 0:
                raise PlyParseError(f"line {lineno}: negative element count")
            elements.append(_Element(tok[1], count))
        elif kw == "property":
            if not elements:
                raise PlyParseError(f"line {lineno}: property before any element")
            if len(tok) == 5 and tok[1] == "list":
                if tok[2] not in _PLY_TYPES or tok[3] not in _PLY_TYPES:
                    raise PlyParseError(f"line {lineno}: unknown list types")
                elements[-1].props.append((tok[4], None, _PLY_TYPES[tok[2]], _PLY_TYPES[tok[3]]))
            elif len(tok) == 3:
                if tok[1] not in _PLY_TYPES:
                    raise PlyParseError(f"line {lineno}: unknown property type {tok[1]!r}")
                elements[-1].props.append((tok[2], _PLY_TYPES[tok[1]]))
            else:
                raise PlyParseError(f"line {lineno}: malformed property line")
        else:
            raise PlyParseError(f"line {lineno}: unexpected keyword {kw!r}")
    if fmt is None:
        raise PlyParseError("missing format line")
    return fmt, elements, body_offset


def _vertex_to_cloud(fields: dict[str, np.ndarray], count: int) -> PointCloud:
    for axis in "xyz":
        if axis not in fields:
            raise PlyParseError(f"vertex element has no {axis!r} property")
    positions = np.column_stack([fields[a].astype(np.float64) for a in "xyz"]).reshape(count, 3)
    channels = {}
    for name, values in fields.items():
        if name in ("x", "y", "z"):
            continue
        channels[_COLOR_RENAME.get(name, name)] = values.astype(np.float64)
    return PointCloud(positions, channels)


def _parse_ascii(body: bytes, elements: list[_Element]) -> PointCloud:
    lines = body.decode("ascii", errors="replace").splitlines()
    pos = 0
    for el in elements:
        rows = [ln for ln in lines[pos:pos + el.count]]
        if len(rows) < el.count:
            raise PlyTruncatedError(
                f"element {el.name!r}: expected {el.count} rows, found {len(rows)}"
            )
        pos += el.count
        if el.name != "vertex":
            continue
        if el.has_list:
            raise PlyUnsupportedFormatError("list properties on vertex are not supported")
        nprop = len(el.props)
        if el.count == 0:
            table = np.zeros((0, nprop))
        else:
            tokens = " ".join(rows).split()
            if len(tokens) != el.count * nprop:
                raise PlyTruncatedError(
                    f"vertex data: expected {el.count * nprop} values, found {len(tokens)}"
                )
            try:
                table = np.array(tokens, dtype=np.float64).reshape(el.count, nprop)
            except ValueError as exc:
                raise PlyParseError(f"vertex data: {exc}") from None
        fields = {name: table[:, i].astype(dt) for i, (name, dt) in enumerate(el.props)}
        return _vertex_to_cloud(fields, el.count)
    raise PlyParseError("no vertex element")


def _parse_binary(body: bytes, elements: list[_Element]) -> PointCloud:
    offset = 0
    for el in elements:
        if el.has_list:
            if el.name == "vertex":
                raise PlyUnsupportedFormatError("list properties on vertex are not supported")
            # list elements after the vertex block are never reached
            raise PlyUnsupportedFormatError(
                f"cannot skip list element {el.name!r} preceding vertex data"
            )
        dtype = np.dtype([(name, "<" + dt) for name, dt in el.props])
        nbytes = dtype.itemsize * el.count
        if offset + nbytes > len(body):
            raise PlyTruncatedError(
                f"element {el.name!r}: need {nbytes} bytes at offset {offset}, "
                f"only {len(body) - offset} available"
            )
        if el.name == "vertex":
            rec = np.frombuffer(body, dtype=dtype, count=el.count, offset=offset)
            fields = {name: np.array(rec[name]) for name, _ in el.props}
            return _vertex_to_cloud(fields, el.count)
        offset += nbytes
    raise PlyParseError("no vertex element")


def parse_ply(data: bytes) -> PointCloud:
    """Parse an ASCII or binary little-endian PLY byte string.

    Point order follows file order. Raises ``PlyParseError`` for malformed
    headers, ``PlyUnsupportedFormatError`` for big-endian files and
    ``PlyTruncatedError`` when the body holds fewer values than declared.
    """
    fmt, elements, body_offset = _parse_header(data)
    body = data[body_offset:]
    if fmt == "ascii":
        return _parse_ascii(body, elements)
    return _parse_binary(body, elements)


def _position_type(positions: np.ndarray) -> str:
    as32 = positions.astype(np.float32)
    if np.array_equal(as32.astype(np.float64), positions):
        return "float"
    return "double"


def write_ply(cloud: PointCloud, format: str = "binary_le") -> bytes:
    """Serialize ``cloud`` to PLY bytes.

    R/G/B channels are rounded and clamped to uchar; any other channel is
    written as a ``double`` scalar property under its own name.  Positions use
    ``float`` when that is lossless and ``double`` otherwise.
    """
    if format not in ("ascii", "binary_le"):
        raise ValueError(f"unknown PLY format {format!r}")
    n = cloud.point_count
    ptype = _position_type(cloud.positions)
    props = [(a, ptype) for a in "xyz"]
    columns = [cloud.positions[:, i] for i in range(3)]
    for name, values in cloud.channels.items():
        if name in _COLOR_NAMES:
            props.append((_COLOR_NAMES[name], "uchar"))
            columns.append(np.clip(np.round(values), 0, 255).astype(np.uint8))
        else:
            props.append((name, "double"))
            columns.append(values)

    fmt_line = "ascii" if format == "ascii" else "binary_little_endian"
    header = [f"ply", f"format {fmt_line} 1.0", f"element vertex {n}"]
    header += [f"property {t} {name}" for name, t in props]
    header.append("end_header")
    head = ("\n".join(header) + "\n").encode("ascii")

    if format == "binary_le":
        dtype = np.dtype([(name, "<" + _PLY_TYPES[t]) for name, t in props])
        rec = np.empty(n, dtype=dtype)
        for (name, _), col in zip(props, columns):
            rec[name] = col
        return head + rec.tobytes()

    text_cols = [
        list(map(str, col.tolist())) if t == "uchar" else list(map(repr, col.astype(np.float64).tolist()))
        for (_, t), col in zip(props, columns)
    ]
    out = [" ".join(row) for row in zip(*text_cols)]
    body = ("\n".join(out) + "\n").encode("ascii") if out else b""
    return head + body


def read_ply(path) -> PointCloud:
    with open(path, "rb") as fh:
        return parse_ply(fh.read())


def save_ply(cloud: PointCloud, path, format: str = "binary_le") -> None:
    with open(path, "wb") as fh:
        fh.write(write_ply(cloud, format))


# Full-range BT.709: rows map (R, G, B) to (Y, Cb - 128, Cr - 128).
_KR, _KB = 0.2126, 0.0722
_KG = 1.0 - _KR - _KB
BT709 = np.array(
    [
        [_KR, _KG, _KB],
        [-_KR / (2 * (1 - _KB)), -_KG / (2 * (1 - _KB)), 0.5],
        [0.5, -_KG / (2 * (1 - _KR)), -_KB / (2 * (1 - _KR))],
    ]
)


def rgb_to_ycbcr(cloud: PointCloud, matrix: np.ndarray = BT709) -> PointCloud:
    missing = [c for c in "RGB" if c not in cloud.channels]
    if missing:
        raise KeyError(f"cloud has no {', '.join(missing)} channel(s)")
    rgb = np.column_stack([cloud.channels[c] for c in "RGB"])
    ycc = rgb @ matrix.T
    return cloud.with_channels(Y=ycc[:, 0], Cb=ycc[:, 1] + 128.0, Cr=ycc[:, 2] + 128.0)


def ycbcr_to_rgb(cloud: PointCloud, matrix: np.ndarray = BT709) -> PointCloud:
    missing = [c for c in ("Y", "Cb", "Cr") if c not in cloud.channels]
    if missing:
        raise KeyError(f"cloud has no {', '.join(missing)} channel(s)")
    ycc = np.column_stack(
        [cloud.channels["Y"], cloud.channels["Cb"] - 128.0, cloud.channels["Cr"] - 128.0]
    )
    rgb = ycc @ np.linalg.inv(matrix).T
    return cloud.with_channels(R=rgb[:, 0], G=rgb[:, 1], B=rgb[:, 2])


def get_channel(cloud: PointCloud, name: str) -> np.ndarray:
    """Channel ``name``; Y/Cb/Cr are derived from R/G/B when absent."""
    if name in cloud.channels:
        return cloud.channels[name]
    if name in ("Y", "Cb", "Cr") and all(c in cloud.channels for c in "RGB"):
        return rgb_to_ycbcr(cloud).channels[name]
    raise KeyError(f"cloud has no channel {name!r}")

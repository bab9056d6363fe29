"""Command-line entry point: ``pcgt <command> ...``.

Exit status is 0 on success, 1 for usage errors and 2 for data errors
(unreadable input, corrupt bitstream, mismatched geometry).
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import tempfile

import numpy as np

from . import coding, metrics, trainer
from .bitstream import Bitstream
from .coding import AUTO, DEFAULT_MODES, DEFAULT_QPS, CloudEncoder, QuantConfig
from .ply_io import PointCloud, get_channel, parse_ply, write_ply, ycbcr_to_rgb
from .transform import GraphParams

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _mode(text: str):
    if text == AUTO:
        return AUTO
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"mode must be 'auto' or an integer, got {text!r}") from None


def _write_atomic(path: str, data: bytes) -> None:
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".pcgt-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _load(path: str) -> PointCloud:
    return parse_ply(_read(path))


def _params(args) -> GraphParams:
    try:
        return GraphParams(args.f, args.t)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _fmt_psnr(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:.4f}"


def cmd_encode(args) -> int:
    if args.qp < 1:
        raise UsageError("--qp must be >= 1")
    if args.rmax is not None and args.mode != AUTO:
        raise UsageError("--rmax selects the mode itself; drop --mode or set it to auto")
    params = _params(args)
    cloud = _load(args.input)
    names = ["Y"] if args.channels == "y" else ["Y", "Cb", "Cr"]
    cloud = cloud.with_channels(**{n: get_channel(cloud, n) for n in names})
    if args.online_train:
        report = trainer.train_online(cloud, "Y", seed=args.seed, grid_step=args.grid_step)
        params = report.best
    config = QuantConfig(args.qp, args.mode, args.m, args.modes)
    result = coding.encode_cloud(cloud, names, params, config, r_max=args.rmax)
    _write_atomic(args.output, result.data)
    psnr = metrics.y_psnr(cloud.channels["Y"], result.reconstruction["Y"])
    line = f"qp={result.qp} x={result.mode} bpp={result.bpp:.6f} psnr={_fmt_psnr(psnr)}"
    if not result.feasible:
        line += " infeasible=1"
    print(line)
    return EXIT_OK


def cmd_decode(args) -> int:
    geometry = _load(args.geometry)
    decoded = coding.decode_cloud(geometry, Bitstream.from_bytes(_read(args.bitstream)))
    if set(decoded.channels) == {"Y", "Cb", "Cr"}:
        rgb = ycbcr_to_rgb(decoded)
        out = PointCloud(decoded.positions, {c: rgb.channels[c] for c in "RGB"})
    else:
        out = decoded
    _write_atomic(args.output, write_ply(out, "binary_le"))
    return EXIT_OK


def cmd_train(args) -> int:
    clouds = [_load(p) for p in args.inputs]
    report = trainer.train_offline(clouds, "Y", k=args.k, grid_step=args.grid_step)
    if args.out:
        _write_atomic(args.out, report.to_csv().encode())
    print(f"f={report.best.f} t={report.best.t}")
    return EXIT_OK


def cmd_rd_sweep(args) -> int:
    cloud = _load(args.input)
    cloud = cloud.with_channels(Y=get_channel(cloud, "Y"))
    points = metrics.rd_sweep(cloud, "Y", _params(args), args.qps, args.modes)
    text = metrics.rd_points_to_csv(points)
    if args.out:
        _write_atomic(args.out, text.encode())
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_analyze(args) -> int:
    cloud = _load(args.input)
    params = _params(args)
    rows = metrics.compaction_comparison(cloud, "Y", params, args.blocks, args.k, args.seed)
    text = metrics.compaction_to_csv(rows)
    if args.out:
        _write_atomic(args.out, text.encode())
    else:
        sys.stdout.write(text)
    if args.variance_out:
        var_gt, var_dct = metrics.variance_comparison(cloud, "Y", params, args.max_dim)
        _write_atomic(args.variance_out, metrics.variance_to_csv(var_gt, var_dct).encode())
    return EXIT_OK


def cmd_psnr(args) -> int:
    ref = get_channel(_load(args.ref), args.channel)
    test = get_channel(_load(args.test), args.channel)
    if ref.shape != test.shape:
        raise ValueError(f"point count mismatch: {ref.size} vs {test.size}")
    print(_fmt_psnr(metrics.y_psnr(ref, test)))
    return EXIT_OK


def _graph_flags(p):
    p.add_argument("--f", type=float, default=0.3, help="edge weight at mean squared distance")
    p.add_argument("--t", type=float, default=0.6, help="minimum kept edge weight")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pcgt", description="Graph-transform point cloud attribute codec")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="encode attributes of a PLY cloud")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--qp", type=int, required=True)
    p.add_argument("--mode", type=_mode, default=AUTO)
    _graph_flags(p)
    p.add_argument("--m", type=float, default=0.85, help="Lagrangian constant")
    p.add_argument("--rmax", type=float, default=None, help="rate cap in bits per point")
    p.add_argument("--modes", type=_int_list, default=list(DEFAULT_MODES))
    p.add_argument("--channels", choices=["y", "ycbcr"], default="y")
    p.add_argument("--online-train", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-step", type=float, default=0.05, help="grid step for --online-train")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a bitstream onto its geometry")
    p.add_argument("--geometry", required=True)
    p.add_argument("--bitstream", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("train", help="offline (f, t) grid search")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rd-sweep", help="bpp/PSNR over a qp x mode grid")
    p.add_argument("--input", required=True)
    p.add_argument("--qps", type=_int_list, default=list(DEFAULT_QPS))
    p.add_argument("--modes", type=_int_list, default=list(DEFAULT_MODES))
    _graph_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rd_sweep)

    p = sub.add_parser("analyze", help="graph vs DCT compaction on sampled blocks")
    p.add_argument("--input", required=True)
    _graph_flags(p)
    p.add_argument("--blocks", type=int, default=50)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-dim", type=int, default=None)
    p.add_argument("--out")
    p.add_argument("--variance-out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("psnr", help="PSNR of one channel between two PLY files")
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--channel", default="Y")
    p.set_defaults(func=cmd_psnr)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"pcgt: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"pcgt: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"pcgt: error: {msg}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

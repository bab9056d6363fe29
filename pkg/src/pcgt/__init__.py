"""Graph-transform attribute codec for voxelized point clouds."""
from .ply_io import PointCloud, parse_ply, write_ply, read_ply, save_ply, rgb_to_ycbcr, ycbcr_to_rgb
from .partition import KdPartition, choose_depth, build_kdtree
from .transform import (
    GraphParams,
    GraphTransform,
    build_adjacency,
    eigendecompose,
    forward_gt,
    inverse_gt,
    forward_dct,
    inverse_dct,
    morton_order,
)
from .coding import QuantConfig, CloudEncoder, encode_cloud, decode_cloud, lambda_from_qp
from .bitstream import Bitstream

__version__ = "0.1.0"

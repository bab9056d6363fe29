"""Encode the luma of a synthetic cloud, decode it and check the result.

Run: python demos/encode_decode.py
"""
import numpy as np

from pcgt import CloudEncoder, GraphParams, QuantConfig, decode_cloud, encode_cloud
from pcgt.metrics import y_psnr
from pcgt.synthetic import surface_cloud

cloud = surface_cloud(20000, seed=1)
print("points:", cloud.point_count)

# building the encoder runs all block eigendecompositions once
enc = CloudEncoder(cloud, "Y", GraphParams(0.3, 0.6))
print("largest block:", enc.max_block_size)

# fixed mode: keep 16 leading coefficients per block
res = enc.encode(qp=16, mode=16)
print(f"x=16  bits={res.total_bits}  bpp={res.bpp:.3f}")

# the decoder only needs the geometry and the bitstream
out = decode_cloud(cloud, res.data)
assert np.array_equal(out.channels["Y"], res.reconstruction["Y"])
print("decoded PSNR:", round(y_psnr(cloud.channels["Y"], out.channels["Y"]), 2))

# automatic mode choice by Lagrangian cost
auto = encode_cloud(cloud, "Y", config=QuantConfig(qp=16), encoder=enc)
for c in auto.candidates:
    print(f"  x={c.mode:<3} rate={c.rate_bits:>7} D={c.distortion:12.1f} J={c.cost:12.1f}")
print("picked x =", auto.mode)

# or the least distortion that fits 1.5 bits per point
capped = encode_cloud(cloud, "Y", config=QuantConfig(qp=16), r_max=1.5, encoder=enc)
print("under 1.5 bpp:", capped.mode, "feasible" if capped.feasible else "infeasible")

"""Rate/PSNR grid for every (qp, x) pair, printed as a table.

Run: python demos/rd_curves.py
"""
from pcgt import CloudEncoder, GraphParams
from pcgt.metrics import rd_sweep
from pcgt.synthetic import surface_cloud

cloud = surface_cloud(15000, seed=4)
enc = CloudEncoder(cloud, "Y", GraphParams())
qps = (8, 16, 32, 48, 64, 80, 96)
modes = (4, 8, 16, 32, 64)
points = {(p.qp, p.mode): p for p in rd_sweep(cloud, qps=qps, modes=modes, encoder=enc)}

print("qp   " + "".join(f"   x={x:<10}" for x in modes))
for qp in qps:
    cells = [f"{points[qp, x].bpp:5.2f}/{points[qp, x].psnr_db:5.1f}" for x in modes]
    print(f"{qp:<4} " + "  ".join(f"{c:>12}" for c in cells))
print("(each cell is bpp/PSNR in dB)")

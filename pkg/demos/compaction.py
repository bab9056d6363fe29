"""How much better does the graph basis pack a block than a Morton-order DCT?

Run: python demos/compaction.py
"""
import numpy as np

from pcgt import GraphParams
from pcgt.metrics import compaction_comparison, variance_comparison
from pcgt.synthetic import surface_cloud

cloud = surface_cloud(50000, seed=0)
params = GraphParams(0.3, 0.6)

rows = compaction_comparison(cloud, "Y", params, num_blocks=50, k=20, seed=0)
gt = np.array([r[1] for r in rows])
dct = np.array([r[2] for r in rows])
print("share of |c| in the top 20 coefficients, 50 blocks")
print(f"  graph: mean {gt.mean():.3f}   DCT: mean {dct.mean():.3f}")
print(f"  graph at least as compact in {np.sum(gt >= dct)} of 50 blocks")

var_gt, var_dct = variance_comparison(cloud, "Y", params, max_dim=40)
print("\ncoefficient variance by index")
for j in (0, 1, 2, 5, 10, 20, 39):
    print(f"  {j:>2}: graph {var_gt[j]:10.1f}   DCT {var_dct[j]:10.1f}")

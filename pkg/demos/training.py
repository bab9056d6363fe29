"""Grid search for the graph parameters (f, t), offline and online.

Run: python demos/training.py
The full 0.05 grid has 361 cells; a 0.1 grid keeps this demo short.
"""
from pcgt.synthetic import surface_cloud
from pcgt.trainer import train_offline, train_online

train = [surface_cloud(8000, seed=s) for s in (10, 11, 12)]
report = train_offline(train, "Y", k=20, grid_step=0.1)
print("offline best:", report.best)

top = sorted(report.grid, key=lambda row: -row[2])[:5]
for f, t, obj in top:
    print(f"  f={f:.1f} t={t:.1f}  compaction={obj:.4f}")

# online: a seeded sample of the target cloud's own blocks
target = surface_cloud(20000, seed=20)
online = train_online(target, "Y", sample_blocks=32, seed=0, grid_step=0.1)
print("online best:", online.best)

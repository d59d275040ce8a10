"""Recover the best EC10 parameter on the one-soliton run."""

from conserva import bench

sc = bench.load_sweep("sweep_ec10_one")
res = bench.run_sweep(sc)
print(f"best alpha = {res.best['alpha']:.4f}, solution error {res.value:.3e} "
      f"after {len(res.record)} marches")

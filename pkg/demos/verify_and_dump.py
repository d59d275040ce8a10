"""Check the discrete conservation identities, then dump a profile for plotting.

Plot the output with gnuplot:  plot 'table4_CS_0_0_.dat' index 1 u 1:2 w l, '' index 1 u 1:3
"""

from conserva import bench

for check in bench.verify("All"):
    print(check.line())

cfg = bench.load_config("table4")
row, hist = bench.run_entry_history(cfg, "CS(0,0)")
exact = cfg.problem.exact()
path = bench.profile_dump(hist, [0.0, float(hist.t[-1])], "table4_CS_0_0_.dat", exact)
print(f"wrote {path}")

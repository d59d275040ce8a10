"""Compare the KdV schemes on a single soliton.

Every scheme keeps its own conservation laws to round-off; the remaining
law drifts, and the free parameters trade that drift against accuracy.
"""

from conserva import Family, KdvScheme, make_problem, run_case

problem = make_problem("KdV", "OneSoliton", T=1.0)
schemes = [
    KdvScheme(Family.EC8),
    KdvScheme(Family.EC10, 0.12),
    KdvScheme(Family.MC8, -0.073),
    KdvScheme(Family.MC10, 0.39, 0.04),
    KdvScheme(Family.MULTISYMPLECTIC),
    KdvScheme(Family.NARROW_BOX),
]

print(f"{'method':18s} {'Err1':>10s} {'Err2':>10s} {'Err3':>10s} {'sol. err':>10s}")
for s in schemes:
    rep = run_case(problem, s, 0.1, 0.01).report
    print(f"{s.label:18s} {rep.err1:10.2e} {rep.err2:10.2e} {rep.err3:10.2e} "
          f"{rep.solution_error:10.2e}")

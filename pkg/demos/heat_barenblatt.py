"""Nonlinear heat equation on the Barenblatt solution.

CS(0,0) advances with one tridiagonal solve per step and keeps mass and
centre of mass exactly; ML/IM loses both.
"""

from conserva import HeatScheme, make_problem, run_case

problem = make_problem("Heat", "Barenblatt")
for s in (HeatScheme("CS"), HeatScheme("CS", 0, -0.25), HeatScheme("MLIM")):
    rep = run_case(problem, s, 0.25, 1 / 3).report
    print(f"{s.label:12s} mass {rep.err1:.2e}  centre {rep.err2:.2e}  "
          f"solution error {rep.solution_error:.2e}")

"""
Solve the baseline belief-state equilibrium and look at the cutoff schedule.

Run: python demos/equilibrium.py
"""

import numpy as np

from repfeedback import ModelParams, value_iteration
from repfeedback.solver import margin_scan, sign_changes

sol = value_iteration(ModelParams())
print(f"converged in {sol.iterations} sweeps, residual {sol.residual:.2e}")

# a coarse view of the schedule
for j in range(0, 321, 40):
    x = sol.grid.points[j]
    print(f"pi={x:.3f}  s*={sol.cutoffs[j]:+.4f}  rho={sol.rho[j]:.4f}  V={sol.value.values[j]:.4f}")

# the margin crosses zero once per belief
_, rows = margin_scan(sol)
print("max sign changes of the margin:", int(sign_changes(rows).max()))

# the cutoff slopes down in pi here, which is worth knowing before reading the statics
d = np.diff(sol.cutoffs)
print(f"cutoff steps up: {np.sum(d > 0)}, down: {np.sum(d < 0)}")

"""
Past-only Beta-Bernoulli reputation scores and the regression panels built on them.

Run: python demos/measurement.py
"""

from repfeedback import ModelParams, value_iteration
from repfeedback.dynamics import SimSettings, simulate_paths
from repfeedback.measure import PanelRecord, export_regression_tables, rep_beta_bernoulli

hist = [PanelRecord(0, t, 1, y) for t, y in enumerate((1, 1, 0))]
print("scores along history success, success, failure:", rep_beta_bernoulli(hist, terminal=True))

sol = value_iteration(ModelParams())
ens = simulate_paths(sol, SimSettings(horizon=60, replications=100, seed=1))
tabs = export_regression_tables(ens)
for name, tab in tabs.items():
    print(name, "rows:", len(next(iter(tab.values()))))
p3 = tabs["p3"]
print(f"mean revision after success {p3['dRep'][p3['dSuccess'] == 1].mean():+.4f}, "
      f"after failure {p3['dRep'][p3['dFailure'] == 1].mean():+.4f}")

"""
Simulate reputation paths for each type and compare with the one-step drifts.

Run: python demos/paths.py
"""

from repfeedback import ModelParams, value_iteration
from repfeedback.dynamics import (SimSettings, boundary_hitting, drift_and_kl,
                                  risky_increment_stats, simulate_paths)

sol = value_iteration(ModelParams())
d = drift_and_kl(sol)
print(f"closed-form drift: min under H {d.drift_h.min():.2e}, max under L {d.drift_l.max():.2e}")

for th in ("H", "L"):
    ens = simulate_paths(sol, SimSettings(seed=7, true_type=th), threads=4)
    st = risky_increment_stats(ens)
    lo, hi, neither = boundary_hitting(ens, 0.1, 0.9)
    print(f"{th}: mean risky increment {st['mean']:+.4f} (99% CI {st['lo']:+.4f}..{st['hi']:+.4f})")
    print(f"   first hit 0.1: {lo:.3f}, first hit 0.9: {hi:.3f}, neither: {neither:.3f}")
    print(f"   terminal mean belief {ens.pi_next[:, -1].mean():.3f}")

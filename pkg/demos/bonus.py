"""
Success bonuses: how the cutoff and the experimentation rate respond.

Run: python demos/bonus.py
"""

from repfeedback import ModelParams, value_iteration
from repfeedback import policy as pol

sol = value_iteration(ModelParams())
V, p = sol.value, sol.params

for x in (0.3, 0.5, 0.7):
    rates = [pol.rho_of_beta(x, V, p, b) for b in (0.0, 0.5, 1.0, 2.0)]
    print(f"pi={x}: rho at beta1 0/0.5/1/2 = " + ", ".join(f"{r:.4f}" for r in rates))
    print(f"   rho' analytic {pol.rho_prime(x, V, p):+.5f}, finite difference {pol.rho_prime_fd(x, V, p):+.5f}")

# raising the rate needs a bonus large enough to push the cutoff out of the bracket
try:
    pol.calibrate_bonus(0.5, V, p, 0.45)
except pol.CalibrationError as e:
    print("calibration:", e)

mt = pol.minimal_transfers(0.5, 0.2, V, p)
print(f"to make s=0.2 indifferent at pi=0.5: bonus {mt.beta1_min}, penalty {mt.beta0_min}")

"""
Pivot probabilities for k-of-n committees and a heterogeneous check.

Run: python demos/committee.py
"""

from repfeedback import committee as cm

n = 7
for rho in (0.2, 0.5):
    zs = [cm.pivot_k_of_n(cm.CommitteeSpec(n, 0.5, {0: rho, 1: rho}, k=k)) for k in range(1, n + 1)]
    print(f"rho={rho}: zeta_k = " + " ".join(f"{z:.3f}" for z in zs))

spec = cm.CommitteeSpec(4, 0.4, {0: [0.2, 0.5, 0.7], 1: [0.6, 0.8, 0.9]}, k=2)
print("heterogeneous 2-of-4:", cm.pivot_general(spec), "enumerated:", cm.pivot_general_enumerated(spec))

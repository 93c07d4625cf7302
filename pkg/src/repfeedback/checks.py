"""Invariant suite run by the ``verify`` command."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import committee as cm
from ._cdf_table import NORMAL_CDF_TABLE
from .dynamics import bayes_consistency_check, ct_coefficients, ct_coefficients_direct, drift_and_kl
from .measure import PanelRecord, rep_beta_bernoulli
from .model import BinarySignalParams, binary_jumps, branch_arrays, normal_cdf
from .solver import (CLAMP_NONE, EquilibriumSolution, SolveSettings, ValueFunction,
                     binary_diagnosticity, comparative_sweep, contraction_check, delta_h_arrays,
                     margin_scan, monotonicity_violations, sign_changes)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def check_cdf() -> Check:
    err = max(abs(float(normal_cdf(x)) - float(v)) for x, v in NORMAL_CDF_TABLE)
    return Check("normal-cdf-accuracy", err <= 1e-12, f"max abs error {err:.2e} (limit 1e-12)")


def check_solution_file(table: dict, params, settings: SolveSettings) -> list[Check]:
    """Recompute the branch at each recorded (pi, sStar) and compare with the file."""
    out = []
    need = ["pi", "sStar", "rho", "piRec1", "piRec0", "effort", "pS", "jPlus", "jMinus",
            "piPlus", "piMinus", "clamped"]
    missing = [c for c in need if c not in table]
    if missing:
        return [Check("solution-file-columns", False, f"missing columns {missing}")]
    pi, s = table["pi"], table["sStar"]
    b = branch_arrays(pi, s, params, settings.safe_update)
    pairs = {"rho": b.r_h, "piRec1": b.pi_rec1, "piRec0": b.pi_rec0, "effort": b.effort,
             "pS": b.p_s, "jPlus": b.j_plus, "jMinus": b.j_minus, "piPlus": b.pi_plus,
             "piMinus": b.pi_minus}
    worst, where = 0.0, ""
    for col, want in pairs.items():
        gap = np.abs(table[col] - want) / np.maximum(1.0, np.abs(want))
        j = int(np.argmax(gap))
        if gap[j] > worst:
            worst, where = float(gap[j]), f"{col} at pi={pi[j]:.6g}"
    out.append(Check("solution-file-branch-replay", worst <= 1e-10,
                     f"max relative gap {worst:.2e}" + (f" ({where})" if worst > 1e-10 else "")))
    safe_next = table["piRec0"] if settings.safe_update == "recOnly" else pi
    ph = b.probs("H")
    pl = b.probs("L")
    post = (safe_next, table["piPlus"], table["piMinus"])
    resid = sum((pi * h + (1 - pi) * l) * q for h, l, q in zip(ph, pl, post)) - pi
    r = float(np.max(np.abs(resid)))
    # file values carry 12 significant digits
    out.append(Check("solution-file-bayes-consistency", r < 1e-10, f"max residual {r:.2e}"))
    return out


def solution_checks(sol: EquilibriumSolution) -> list[Check]:
    out = []
    st = sol.settings
    out.append(Check("value-iteration-converged", sol.residual < st.tolerance,
                     f"residual {sol.residual:.2e} after {sol.iterations} sweeps"))
    r = bayes_consistency_check(sol)
    out.append(Check("bayes-martingale-identity", r < 1e-10, f"max residual {r:.2e}"))
    rows = []
    for th in ("H", "L"):
        rows.append(float(np.max(np.abs(sum(sol.branch.probs(th)) - 1))))
    out.append(Check("branch-probabilities-sum", max(rows) <= 1e-12, f"max gap {max(rows):.2e}"))

    rng = np.random.default_rng(12345)
    V1 = sol.value
    V2 = ValueFunction(sol.grid, V1.values + rng.normal(0, 1, V1.values.size))
    lhs, rhs = contraction_check(V1, V2, sol.params, st, sol.cutoffs)
    out.append(Check("bellman-contraction", lhs <= rhs + 1e-12, f"{lhs:.4g} <= {rhs:.4g}"))

    mv = monotonicity_violations(sol.value.values, tol=1e-8)
    out.append(Check("value-monotone", mv == 0, f"{mv} decreasing steps"))

    s_grid, rows = margin_scan(sol)
    nc = sign_changes(rows)
    out.append(Check("margin-single-crossing", int(nc.max()) <= 1, f"max sign changes {int(nc.max())}"))

    interior = sol.clamp == CLAMP_NONE
    res = np.abs(delta_h_arrays(sol.cutoffs, sol.grid.points, sol.value, sol.params, st.safe_update))
    worst = float(res[interior].max()) if interior.any() else 0.0
    # resolution: margin slope times the final bracket width (float spacing near s*)
    out.append(Check("cutoff-root-accuracy", worst <= 1e-9, f"max |margin| {worst:.2e}"))

    v = monotonicity_violations(sol.cutoffs, sol.clamp, increasing=True)
    out.append(Check("conservatism-cutoff-increasing", v == 0, f"{v} violations among interior steps"))
    v = monotonicity_violations(sol.rho, sol.clamp, increasing=False)
    out.append(Check("experimentation-decreasing", v == 0, f"{v} violations among interior steps"))

    d = drift_and_kl(sol)
    ok = float(d.drift_h.min()) >= -1e-12 and float(d.drift_l.max()) <= 1e-12 and float(d.kl.min()) >= -1e-12
    out.append(Check("closed-form-drift-signs", ok,
                     f"min driftH {d.drift_h.min():.3e}, max driftL {d.drift_l.max():.3e}"))

    a, b = ct_coefficients(sol), ct_coefficients_direct(sol)
    g = max(float(np.max(np.abs(a.mu - b.mu))), float(np.max(np.abs(a.sigma2 - b.sigma2))))
    out.append(Check("diffusion-dual-implementation", g <= 1e-12, f"max gap {g:.2e}"))
    return out


def sweep_checks(sol: EquilibriumSolution, threads: int = 1) -> list[Check]:
    out = []
    base = sol.params
    plans = [("sigmaH", [base.sigma_h, base.sigma_h + 0.2]),
             ("lambda", [base.lam, min(base.lam + 0.1, 0.95)]),
             ("delta", [max(base.delta - 0.05, 0.0), base.delta])]
    for axis, values in plans:
        rep = comparative_sweep(base, axis, values, sol.grid, sol.settings, threads=threads)
        st = rep.steps[0]
        out.append(Check(f"statics-{axis}", st.violations == 0,
                         f"{values[0]:g}->{values[1]:g}: {st.violations}/{st.interior} interior violations"))
    return out


def oracle_checks(seed: int = 7) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for N in range(0, 13):
        p = rng.uniform(0, 1, N)
        worst = max(worst, float(np.max(np.abs(cm.poisson_binomial_pmf(p) - cm.enumerate_counts(p)))))
    out = [Check("poisson-binomial-vs-enumeration", worst <= 1e-12, f"max gap {worst:.2e}")]
    gap = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 12))
        k = int(rng.integers(1, n + 1))
        r0, r1 = rng.uniform(0, 1, 2)
        spec = cm.CommitteeSpec(n, float(rng.uniform(0.05, 0.95)), {0: r0, 1: r1}, k=k)
        gap = max(gap, abs(cm.pivot_general(spec) - cm.pivot_k_of_n(spec)))
    out.append(Check("pivot-general-vs-k-of-n", gap <= 1e-12, f"max gap {gap:.2e}"))
    mism = 0
    for _ in range(1000):
        qh, ql = sorted(rng.uniform(0.5, 1.0, 2), reverse=True)
        if not (0.5 < ql < qh < 1):
            continue
        bp = BinarySignalParams(float(qh), float(ql))
        mism += binary_jumps(bp)[2] != binary_diagnosticity(bp)[0]
    out.append(Check("binary-diagnosticity-agreement", mism == 0, f"{mism} mismatches"))
    bad = 0
    for _ in range(50):
        T = int(rng.integers(2, 20))
        a = rng.integers(0, 2, T)
        y = a * rng.integers(0, 2, T)
        panel = [PanelRecord(0, t, int(a[t]), int(y[t])) for t in range(T)]
        base = rep_beta_bernoulli(panel)
        tau = int(rng.integers(0, T))
        if a[tau]:
            y2 = y.copy()
            y2[tau] = 1 - y2[tau]
            alt = rep_beta_bernoulli([PanelRecord(0, t, int(a[t]), int(y2[t])) for t in range(T)])
            bad += sum(base[(0, t)] != alt[(0, t)] for t in range(tau + 1))
    out.append(Check("leave-one-out-canary", bad == 0, f"{bad} scores moved"))
    return out


def run_suite(sol: EquilibriumSolution | None, solution_table: dict | None = None,
              params=None, settings: SolveSettings | None = None,
              sweeps: bool = True, threads: int = 1) -> list[Check]:
    checks = [check_cdf()]
    if solution_table is not None:
        checks += check_solution_file(solution_table, params, settings)
    if sol is not None:
        checks += solution_checks(sol)
        if sweeps:
            checks += sweep_checks(sol, threads)
    checks += oracle_checks()
    return checks

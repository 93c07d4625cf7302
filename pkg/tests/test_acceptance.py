"""Acceptance gate: one PASS/FAIL line per criterion.

Run under pytest (lines are echoed in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

import json
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from repfeedback import committee as cm
from repfeedback import policy as pol
from repfeedback.checks import oracle_checks
from repfeedback.cli import main as cli_main
from repfeedback.dynamics import (SimSettings, bayes_consistency_check, ct_coefficients,
                                  ct_coefficients_direct, drift_and_kl, risky_increment_stats,
                                  simulate_paths)
from repfeedback.measure import PanelRecord, rep_beta_bernoulli
from repfeedback.model import BinarySignalParams, ModelParams, binary_jumps
from repfeedback.solver import (CLAMP_NONE, binary_diagnosticity, comparative_sweep,
                                monotonicity_violations, value_iteration)

LINES = []
_cache = {}


def base():
    if "sol" not in _cache:
        t0 = time.perf_counter()
        _cache["sol"] = value_iteration(ModelParams())
        _cache["solve_seconds"] = time.perf_counter() - t0
    return _cache["sol"]


def c1():
    sol = base()
    t0 = time.perf_counter()
    r = bayes_consistency_check(sol)
    dt = time.perf_counter() - t0
    return r < 1e-10 and dt < 1.0, f"max |E[pi'|pi]-pi| = {r:.2e}, {dt * 1e3:.1f} ms"


def c2():
    t0 = time.perf_counter()
    sol = value_iteration(ModelParams())
    dt = time.perf_counter() - t0
    my = value_iteration(ModelParams(delta=0.0))
    exact = bool(np.array_equal(my.value.values, my.grid.points ** 2))
    sym = value_iteration(ModelParams(sigma_h=1.0, sigma_l=1.0, delta_l=0.0))
    err = float(np.max(np.abs(sym.value.values - 20 * sym.grid.points ** 2)))
    ok = sol.residual < 1e-6 and exact and err <= 1e-5 and dt < 5.0
    return ok, (f"residual {sol.residual:.2e} in {sol.iterations} sweeps, {dt:.2f} s; "
                f"delta=0 exact {exact}; symmetric sup error {err:.2e}")


def c3():
    sol = base()
    vs = monotonicity_violations(sol.cutoffs, sol.clamp, increasing=True)
    vr = monotonicity_violations(sol.rho, sol.clamp, increasing=False)
    n = int(np.count_nonzero(sol.clamp == CLAMP_NONE))
    return vs == 0 and vr == 0, f"s* violations {vs}, rho violations {vr}, {n} unclamped points"


def c4():
    sol = base()
    ok, parts = True, []
    for axis, values in (("sigmaH", [0.8, 1.0]), ("lambda", [0.5, 0.6]), ("delta", [0.90, 0.95])):
        t0 = time.perf_counter()
        rep = comparative_sweep(ModelParams(), axis, values, sol.grid, sol.settings)
        dt = time.perf_counter() - t0
        st = rep.steps[0]
        ok = ok and st.violations == 0 and dt < 30
        parts.append(f"{axis} {values[0]:g}->{values[1]:g}: {st.violations}/{st.interior} "
                     f"violations, {dt:.1f} s")
    return ok, "; ".join(parts)


def c5():
    sol = base()
    d = drift_and_kl(sol)
    closed = float(d.drift_h.min()) >= -1e-12 and float(d.drift_l.max()) <= 1e-12
    t0 = time.perf_counter()
    h = risky_increment_stats(simulate_paths(sol, SimSettings(seed=0, true_type="H")))
    lo = risky_increment_stats(simulate_paths(sol, SimSettings(seed=0, true_type="L")))
    dt = time.perf_counter() - t0
    mc = h["lo"] > 0 and lo["hi"] < 0
    return closed and mc and dt < 10, (
        f"closed-form min driftH {d.drift_h.min():.2e}, max driftL {d.drift_l.max():.2e}; "
        f"MC H {h['mean']:+.4f} [{h['lo']:+.4f}, {h['hi']:+.4f}], "
        f"L {lo['mean']:+.4f} [{lo['lo']:+.4f}, {lo['hi']:+.4f}], {dt:.2f} s")


def c6():
    sol = base()
    V, p = sol.value, sol.params
    trips, jumps = [], 0
    for x in (0.3, 0.5, 0.7):
        target = pol.rho_of_beta(x, V, p, 0.0) + 0.1
        try:
            beta = pol.calibrate_bonus(x, V, p, target)
            trips.append(abs(pol.rho_of_beta(x, V, p, beta) - target))
        except pol.CalibrationError as e:
            _, r_lo, r_hi = e.achieved
            jumps += 1
            trips.append(max(abs(r_lo - target), abs(r_hi - target)))
    worst_trip = max(trips)
    pairs = [(0.3, 0.0), (0.4, 0.2), (0.5, 0.0), (0.5, 0.5), (0.5, 1.5), (0.6, 0.3),
             (0.7, 0.0), (0.7, 1.0), (0.8, 0.5), (0.9, 0.2)]
    rel = 0.0
    for x, b in pairs:
        a, fd = pol.rho_prime(x, V, p, b), pol.rho_prime_fd(x, V, p, b)
        rel = max(rel, abs(a - fd) / abs(fd))
    ind = 0.0
    for x, s in ((0.3, 0.0), (0.5, 0.5), (0.5, 1.3), (0.8, -0.4), (0.7, 0.9)):
        mt = pol.minimal_transfers(x, s, V, p)
        c = pol.BonusContract(mt.beta1_min or 0.0, mt.beta0_min or 0.0)
        ind = max(ind, abs(pol.bonus_delta(s, x, V, p, c)))
    ok = worst_trip <= 1e-6 and rel <= 1e-3 and ind <= 1e-10
    return ok, (f"calibration |rho-rho*| worst {worst_trip:.2e} ({jumps}/3 targets skipped by a rate jump); "
                f"rhoPrime vs FD max rel {rel:.2e}; transfer indifference {ind:.2e}")


def c7():
    rng = np.random.default_rng(2024)
    gap = 0.0
    for N in range(0, 21):
        pr = rng.uniform(0, 1, N)
        gap = max(gap, float(np.max(np.abs(cm.poisson_binomial_pmf(pr) - cm.enumerate_counts(pr)))))
    gk = 0.0
    for _ in range(30):
        n = int(rng.integers(1, 16))
        k = int(rng.integers(1, n + 1))
        r0, r1 = rng.uniform(0, 1, 2)
        spec = cm.CommitteeSpec(n, float(rng.uniform(0.05, 0.95)), {0: r0, 1: r1}, k=k)
        gk = max(gk, abs(cm.pivot_general(spec) - cm.pivot_k_of_n(spec)))
    bad = checked = 0
    for _ in range(50):
        n = int(rng.integers(2, 25))
        r0, r1 = rng.uniform(0, 1, 2)
        for row in cm.pivot_monotonicity(n, float(rng.uniform(0.05, 0.95)), r0, r1, range(1, n)):
            if row.applicable:
                checked += 1
                bad += not row.holds
    ok = gap <= 1e-12 and gk <= 1e-12 and bad == 0
    return ok, (f"pmf vs enumeration {gap:.2e}; general vs k-of-n {gk:.2e}; "
                f"zeta monotone {checked - bad}/{checked} applicable steps")


def c8():
    sol = base()
    a, b = ct_coefficients(sol), ct_coefficients_direct(sol)
    g = max(float(np.max(np.abs(a.mu - b.mu))), float(np.max(np.abs(a.sigma2 - b.sigma2))))
    sym = value_iteration(ModelParams(sigma_h=1.0, sigma_l=1.0, delta_l=0.0))
    vanish = True
    for s in (sol, sym):
        for c in (ct_coefficients(s), ct_coefficients_direct(s)):
            br = s.branch
            z = (c.rho == 0) | ((br.j_plus == 0) & (br.j_minus == 0))
            vanish = vanish and bool(np.all(c.mu[z] == 0) and np.all(c.sigma2[z] == 0))
    return g <= 1e-12 and vanish, f"max dual gap {g:.2e}; vanish where no learning {vanish}"


def c9():
    rng = np.random.default_rng(99)
    mism = 0
    for _ in range(1000):
        qh, ql = sorted(rng.uniform(0.5, 1.0, 2), reverse=True)
        bp = BinarySignalParams(float(qh), float(ql))
        want = qh * (1 - qh) <= ql * (1 - ql)
        mism += (binary_jumps(bp)[2] != want) + (binary_diagnosticity(bp)[0] != want)
    return mism == 0, f"{mism} mismatches over 1000 draws"


def c10():
    rng = np.random.default_rng(10)
    bad = 0
    for _ in range(100):
        T = int(rng.integers(2, 30))
        a = rng.integers(0, 2, T)
        a[rng.integers(0, T)] = 1
        y = a * rng.integers(0, 2, T)
        tau = int(rng.choice(np.flatnonzero(a)))
        y2 = y.copy()
        y2[tau] = 1 - y2[tau]
        s1 = rep_beta_bernoulli([PanelRecord(0, t, int(a[t]), int(y[t])) for t in range(T)])
        s2 = rep_beta_bernoulli([PanelRecord(0, t, int(a[t]), int(y2[t])) for t in range(T)])
        bad += sum(s1[(0, t)] != s2[(0, t)] for t in range(tau + 1))
    sc = rep_beta_bernoulli([PanelRecord(0, t, 1, v) for t, v in enumerate((1, 1, 0))], terminal=True)
    worked = abs(sc[(0, 3)] - 0.6) < 1e-15
    canary = {c.name: c.passed for c in oracle_checks()}["leave-one-out-canary"]
    return bad == 0 and worked and canary, f"{bad} leaked scores over 100 panels; worked value {sc[(0, 3)]:.6g}"


def c11():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        cfg = tmp / "run.json"
        cfg.write_text(json.dumps({"seed": 12345}))
        blobs = []
        for run, threads in ((0, "1"), (1, "1"), (2, "8"), (3, "8")):
            out = tmp / f"r{run}"
            code = cli_main(["simulate", "--config", str(cfg), "--threads", threads, "--out", str(out)])
            if code != 0:
                return False, f"simulate exited {code}"
            blobs.append(tuple((out / n).read_bytes() for n in ("paths_H.csv", "paths_L.csv")))
    same = all(b == blobs[0] for b in blobs)
    return same, f"4 runs (threads 1,1,8,8) byte-identical: {same}"


CRITERIA = [
    ("1 Bayes martingale identity", c1),
    ("2 value iteration and closed forms", c2),
    ("3 conservatism and experimentation", c3),
    ("4 comparative statics", c4),
    ("5 drift signs", c5),
    ("6 bonus calculus", c6),
    ("7 committee oracles", c7),
    ("8 diffusion coefficients", c8),
    ("9 binary benchmark", c9),
    ("10 measurement", c10),
    ("11 reproducibility", c11),
]


def evaluate(name, fn):
    ok, detail = fn()
    line = f"{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}"
    LINES.append(line)
    print(line)
    return ok, detail


@pytest.mark.parametrize("name,fn", CRITERIA, ids=[c[0].split()[0] for c in CRITERIA])
def test_criterion(name, fn):
    ok, detail = evaluate(name, fn)
    assert ok, detail


if __name__ == "__main__":
    results = [evaluate(n, f)[0] for n, f in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")

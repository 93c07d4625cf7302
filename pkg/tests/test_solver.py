import numpy as np
import pytest

from repfeedback import ModelParams, value_iteration
from repfeedback.checks import solution_checks
from repfeedback.model import branch_arrays
from repfeedback.solver import (CLAMP_HIGH, CLAMP_LOW, CLAMP_NONE, ConvergenceError, Grid,
                                SolveSettings, SolverError, ValueFunction, bisect_cutoffs,
                                contraction_check, delta_h, delta_h_arrays, margin_scan,
                                read_table, sign_changes, solve_cutoff)


def test_grid_is_read_only():
    g = Grid.uniform()
    assert g.count == 321 and g.points[0] == 0.05 and g.points[-1] == 0.95
    with pytest.raises(ValueError):
        g.points[0] = 0.0


def test_myopic_value_is_flow():
    sol = value_iteration(ModelParams(delta=0.0))
    assert np.array_equal(sol.value.values, sol.grid.points ** 2)


def test_symmetric_types_closed_form():
    p = ModelParams(sigma_h=1.0, sigma_l=1.0, delta_l=0.0)
    sol = value_iteration(p)
    assert np.max(np.abs(sol.value.values - 20 * sol.grid.points ** 2)) <= 1e-5


def test_baseline_converges(baseline):
    assert baseline.residual < 1e-6
    assert baseline.residuals[-1] == baseline.residual
    assert np.all(np.diff(baseline.value.values) > 0)


def test_interpolation_matches_numpy(baseline):
    x = np.random.default_rng(0).uniform(0.0, 1.0, 500)
    V = baseline.value
    assert np.array_equal(V(x), np.interp(x, V.grid.points, V.values))


def test_cutoff_is_dense_scan_root(baseline):
    s, rows = margin_scan(baseline, pi=np.array([0.5]))
    row = rows[0]
    k = int(np.flatnonzero(np.sign(row[1:]) != np.sign(row[:-1]))[0])
    s_star, label, tie = solve_cutoff(0.5, baseline.value, baseline.params)
    assert label == "none" and not tie
    assert s[k] <= s_star <= s[k + 1]
    assert abs(delta_h(s_star, 0.5, baseline.value, baseline.params)) <= 1e-9


def test_margin_single_crossing(baseline):
    _, rows = margin_scan(baseline)
    assert sign_changes(rows).max() <= 1


def test_fused_kernel_equals_branch_path(baseline):
    V, p = baseline.value, baseline.params
    pi = baseline.grid.points
    s = np.linspace(-1, 2, pi.size)
    fast = delta_h_arrays(s, pi, V, p)
    slow = delta_h_arrays(s, pi, V, p, branch=branch_arrays(pi, s, p))
    assert np.array_equal(fast, slow)


def test_bisection_clamps_and_ties():
    pi = np.array([0.2, 0.5, 0.8])
    pos = bisect_cutoffs(lambda s, p: np.ones_like(s + p), pi, -1, 1)
    assert np.all(pos.clamp == CLAMP_LOW) and np.all(pos.s_star == -1)
    neg = bisect_cutoffs(lambda s, p: -np.ones_like(s + p), pi, -1, 1)
    assert np.all(neg.clamp == CLAMP_HIGH) and np.all(neg.s_star == 1)
    zero = bisect_cutoffs(lambda s, p: 0.0 * (s + p), pi, -1, 1)
    assert np.all(zero.tie)
    lin = bisect_cutoffs(lambda s, p: p - s, pi, -1, 1)
    assert np.all(lin.clamp == CLAMP_NONE)
    np.testing.assert_allclose(lin.s_star, pi, atol=1e-15)


@pytest.mark.parametrize("lookahead", [2, 3, 5])
def test_lookahead_is_bit_identical(lookahead):
    pi = np.linspace(0.1, 0.9, 17)
    f = lambda s, p: np.tanh(3 * (p - s)) + 0.1 * (p - s) ** 3
    base = bisect_cutoffs(f, pi, -2, 2, lookahead=1)
    other = bisect_cutoffs(f, pi, -2, 2, lookahead=lookahead)
    assert np.array_equal(base.s_star, other.s_star)


def test_nonfinite_margin_reports_belief():
    with pytest.raises(SolverError, match="pi="):
        bisect_cutoffs(lambda s, p: np.where(p > 0.5, np.nan, s), np.array([0.3, 0.7]), -1, 1)


def test_contraction(baseline):
    rng = np.random.default_rng(1)
    for _ in range(5):
        V2 = ValueFunction(baseline.grid, baseline.value.values + rng.normal(0, 2, 321))
        lhs, rhs = contraction_check(baseline.value, V2, baseline.params, cutoffs=baseline.cutoffs)
        assert lhs <= rhs + 1e-12


def test_nonconvergence_carries_history():
    with pytest.raises(ConvergenceError) as e:
        value_iteration(ModelParams(), st=SolveSettings(max_iterations=3))
    assert len(e.value.residuals) == 3


def test_csv_round_trip_and_determinism(baseline, tmp_path):
    baseline.to_csv(tmp_path / "a.csv")
    value_iteration(ModelParams()).to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    tab = read_table(tmp_path / "a.csv")
    assert len(tab["pi"]) == 321
    np.testing.assert_allclose(tab["sStar"], baseline.cutoffs, rtol=1e-11)


def test_invariant_suite_positive_checks(baseline):
    res = {c.name: c.passed for c in solution_checks(baseline)}
    for name in ("value-iteration-converged", "bayes-martingale-identity", "branch-probabilities-sum",
                 "bellman-contraction", "value-monotone", "margin-single-crossing",
                 "cutoff-root-accuracy", "closed-form-drift-signs", "diffusion-dual-implementation"):
        assert res[name], name

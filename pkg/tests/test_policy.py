import numpy as np
import pytest

from repfeedback import policy as pol
from repfeedback.model import ParamError, branch_arrays
from repfeedback.policy import BonusContract, IneffectiveInstrument
from repfeedback.solver import delta_h_arrays, solve_cutoff

PAIRS = [(0.3, 0.0), (0.4, 0.2), (0.5, 0.0), (0.5, 0.5), (0.5, 1.5), (0.6, 0.3),
         (0.7, 0.0), (0.7, 1.0), (0.8, 0.5), (0.9, 0.2)]


def test_zero_contract_is_base_margin(baseline):
    V, p = baseline.value, baseline.params
    s = np.linspace(-1, 2, 50)
    assert np.array_equal(pol.bonus_delta_arrays(s, 0.4, V, p, BonusContract()),
                          delta_h_arrays(s, 0.4, V, p))
    s0, _, _ = solve_cutoff(0.4, V, p)
    assert pol.bonus_cutoff(0.4, V, p, BonusContract())[0] == s0


def test_bonus_shift_is_success_weighted(baseline):
    V, p = baseline.value, baseline.params
    c = BonusContract(0.7, 0.2)
    b = branch_arrays(0.5, 0.3, p)
    want = float(delta_h_arrays(0.3, 0.5, V, p)) + 0.7 * float(b.p_s) - 0.2 * (1 - float(b.p_s))
    assert pol.bonus_delta(0.3, 0.5, V, p, c) == pytest.approx(want, abs=1e-15)
    alt = BonusContract(0.7, 0.0, "stateProb")
    want = float(delta_h_arrays(0.3, 0.5, V, p)) + 0.7 * p.lam
    assert pol.bonus_delta(0.3, 0.5, V, p, alt) == pytest.approx(want, abs=1e-15)


def test_analytic_slope_matches_difference(baseline):
    V, p = baseline.value, baseline.params
    for pi, s in [(0.3, 0.2), (0.5, 0.6), (0.8, 1.1)]:
        h = 1e-6
        fd = (pol.bonus_delta(s + h, pi, V, p, BonusContract()) -
              pol.bonus_delta(s - h, pi, V, p, BonusContract())) / (2 * h)
        assert pol.margin_slope(s, pi, V, p)[0] == pytest.approx(fd, rel=1e-5)


@pytest.mark.parametrize("pi,beta", PAIRS)
def test_rate_derivative_matches_difference(baseline, pi, beta):
    V, p = baseline.value, baseline.params
    a = pol.rho_prime(pi, V, p, beta)
    fd = pol.rho_prime_fd(pi, V, p, beta)
    assert abs(a - fd) <= 1e-3 * abs(fd)


def test_clamped_cutoff_is_ineffective(baseline):
    V, p = baseline.value, baseline.params
    with pytest.raises(IneffectiveInstrument):
        pol.rho_prime(0.5, V, p, 50.0)


@pytest.mark.parametrize("pi,s", [(0.3, 0.0), (0.5, 0.5), (0.5, 1.3), (0.8, -0.4), (0.7, 0.9)])
def test_minimal_transfers_reach_indifference(baseline, pi, s):
    V, p = baseline.value, baseline.params
    mt = pol.minimal_transfers(pi, s, V, p)
    if mt.beta1_min is not None:
        assert abs(pol.bonus_delta(s, pi, V, p, BonusContract(mt.beta1_min, 0.0))) <= 1e-10
    if mt.beta0_min is not None:
        assert abs(pol.bonus_delta(s, pi, V, p, BonusContract(0.0, mt.beta0_min))) <= 1e-10
    assert (mt.beta1_min is None) != (mt.beta0_min is None)


def test_transfer_edge_cases():
    assert pol.transfers_from_margin(-0.2, 0.0).beta1_min is None
    assert pol.transfers_from_margin(0.2, 1.0).beta0_min is None
    assert pol.transfers_from_margin(0.0, 0.5).beta1_min == 0.0


def test_calibration_reports_the_jump(baseline):
    V, p = baseline.value, baseline.params
    with pytest.raises(pol.CalibrationError) as e:
        pol.calibrate_bonus(0.5, V, p, 0.5)
    best, lo, hi = e.value.achieved
    assert lo < 0.5 < hi


def test_calibration_target_domain(baseline):
    with pytest.raises(ParamError):
        pol.calibrate_bonus(0.5, baseline.value, baseline.params, 0.01)


def test_contract_validation():
    with pytest.raises(ParamError):
        BonusContract(-1.0)
    with pytest.raises(ParamError):
        BonusContract(1.0, weighting="other")


def test_planner_local_bonus(baseline):
    sample = baseline.grid.points[::40]
    res = pol.planner_local_bonus(pol.PlannerInputs(1.0, 1.0, sample), baseline)
    assert res.beta_star >= 0
    inf = pol.planner_local_bonus(pol.PlannerInputs(1.0, float("inf"), sample), baseline)
    assert inf.boundary and inf.beta_star == 0.0

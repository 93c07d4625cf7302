import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repfeedback import model as m
from repfeedback.model import ModelParams, ParamError


def test_tails_at_half():
    t = m.gaussian_tails(0.5, ModelParams())
    assert t.a_h == pytest.approx(0.7340144709, abs=1e-9)
    assert t.b_h == pytest.approx(0.2659855291, abs=1e-9)
    # low type shifted by 0.3, sd 1.6
    assert t.a_l == pytest.approx(float(mpmath.ncdf(0.2 / 1.6)), abs=1e-12)
    assert t.r_h == pytest.approx(0.5 * (t.a_h + t.b_h))


def test_cdf_matches_high_precision_table():
    from repfeedback._cdf_table import NORMAL_CDF_TABLE
    for x, v in NORMAL_CDF_TABLE:
        assert abs(float(m.normal_cdf(x)) - float(v)) <= 1e-12


def test_upper_tail_far_right():
    # complement of the CDF underflows; the symmetric form keeps precision
    z = 9.0
    assert float(m.upper_lower(z)[0]) == pytest.approx(float(mpmath.ncdf(-z)), rel=1e-10)


def test_recommendation_posteriors_by_hand():
    p = ModelParams()
    pi, s = 0.4, 0.7
    t = m.gaussian_tails(s, p)
    d = m.branch_distribution(pi, s, p)
    assert d.pi_rec1 == pytest.approx(pi * t.r_h / (pi * t.r_h + (1 - pi) * t.r_l), rel=1e-14)
    c_h, c_l = 1 - t.r_h, 1 - t.r_l
    assert d.pi_rec0 == pytest.approx(pi * c_h / (pi * c_h + (1 - pi) * c_l), rel=1e-14)


def test_outcome_jump_examples():
    jp, jm = m.outcome_jumps(0.8, 0.5, 0.65)
    assert jp == pytest.approx(math.log(1.6))
    assert jm == pytest.approx(math.log(0.48 / 0.675))


def test_effort_is_state_posterior_mix():
    p = ModelParams()
    d = m.branch_distribution(0.6, 0.4, p)
    assert d.effort == pytest.approx(d.pi_rec1 * d.p_h + (1 - d.pi_rec1) * d.p_l)
    assert d.p_s == pytest.approx(d.effort ** 2)
    assert d.lambda_post == pytest.approx(d.effort)


def test_freeze_keeps_belief_after_safe():
    d = m.branch_distribution(0.3, 0.2, ModelParams(), safe_update="freeze")
    assert d.entry("safe").posterior == 0.3


def test_degenerate_risky_tail_is_flagged():
    p = ModelParams()
    d = m.branch_distribution(0.5, p.mu1 + 12 * p.sigma_l, p)
    assert "risky" in d.degenerate
    assert d.pi_rec1 == 0.5 and d.j_plus == 0.0


@pytest.mark.parametrize("bad", [
    dict(sigma_h=0.0), dict(sigma_l=0.5), dict(lam=1.0), dict(delta=1.0),
    dict(mu1=-1.0), dict(phi=-0.1), dict(delta=-0.1),
])
def test_param_validation(bad):
    with pytest.raises(ParamError):
        ModelParams(**bad)


def test_param_json_round_trip():
    p = ModelParams(sigma_h=1.0, sigma_l=1.7, delta=0.9)
    d = json.loads(p.to_json())
    assert set(d) == {"mu0", "mu1", "sigmaH", "sigmaL", "lambda", "delta", "phi", "deltaL"}
    assert ModelParams.from_json(p.to_json()) == p
    with pytest.raises(ParamError):
        ModelParams.from_dict({**d, "extra": 1})


def test_binary_benchmark():
    lp, lm, holds = m.binary_jumps(m.BinarySignalParams(0.9, 0.6))
    assert lp == pytest.approx(1.5) and lm == pytest.approx(0.25)
    assert holds
    with pytest.raises(ParamError):
        m.BinarySignalParams(0.6, 0.9)
    assert m.binary_recommendation_lr(m.BinarySignalParams(0.9, 0.6), 1.0) == pytest.approx(1.5)


beliefs = st.floats(0.01, 0.99)
cuts = st.floats(-2.0, 3.0)
params = st.builds(ModelParams, sigma_h=st.floats(0.3, 1.5), lam=st.floats(0.1, 0.9),
                   delta_l=st.floats(0.0, 1.0)).filter(lambda p: p.sigma_l >= p.sigma_h)


@settings(max_examples=200, deadline=None)
@given(pi=beliefs, s=cuts, p=params, mode=st.sampled_from(m.SAFE_UPDATES))
def test_public_lottery_is_martingale(pi, s, p, mode):
    d = m.branch_distribution(pi, s, p, mode)
    mean = sum((pi * e.prob_h + (1 - pi) * e.prob_l) * e.posterior for e in d.entries)
    if mode == "recOnly":
        post = [e.posterior for e in d.entries]
        pinned = any(q in (m.BELIEF_FLOOR, 1 - m.BELIEF_FLOOR) for q in post)
        # a posterior lifted to the belief floor moves the mean by at most the floor
        assert abs(mean - pi) <= (m.BELIEF_FLOOR if pinned else 1e-12)
    for th in ("prob_h", "prob_l"):
        assert sum(getattr(e, th) for e in d.entries) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(pi=beliefs, a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_log_odds_shifts_add(pi, a, b):
    lhs = m.apply_log_odds(m.apply_log_odds(pi, a), b)
    assert lhs == pytest.approx(m.apply_log_odds(pi, a + b), rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(pi=beliefs, s=cuts)
def test_jumps_have_opposite_signs(pi, s):
    # the direction follows which type's recommendation carries the better state posterior
    d = m.branch_distribution(pi, s, ModelParams())
    if not d.degenerate and d.p_h != d.p_l:
        assert np.sign(d.j_plus) == np.sign(d.p_h - d.p_l) == -np.sign(d.j_minus)
        lo, hi = sorted((d.pi_plus, d.pi_minus))
        assert lo <= d.pi_rec1 <= hi

"""One-period primitives: signal tails, Bayes updates, effort and log-likelihood jumps.

Everything here is vectorised over numpy arrays of beliefs and cutoffs; the
public dataclass-returning helpers wrap the array kernels for scalar use.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.special import expit, logit, ndtr

BELIEF_FLOOR = 1e-9
DEGENERATE_TAIL = 1e-12
SAFE_UPDATES = ("recOnly", "freeze")

_JSON_KEYS = {
    "mu0": "mu0",
    "mu1": "mu1",
    "sigmaH": "sigma_h",
    "sigmaL": "sigma_l",
    "lambda": "lam",
    "delta": "delta",
    "phi": "phi",
    "deltaL": "delta_l",
}


class ParamError(ValueError):
    """Invalid model primitives."""


class EffortCost(str, Enum):
    QUADRATIC = "quadratic"


_FLOW_UTILITIES = {
    "square": lambda p: p * p,
    "linear": lambda p: p * 1.0,
}


def normal_cdf(x):
    """Standard normal cdf (scipy's ndtr, erfc-based, ~1e-16 absolute error)."""
    return ndtr(x)


def normal_sf(x):
    """Upper tail 1 - Phi(x), computed without cancellation."""
    return ndtr(np.negative(x))


@dataclass(frozen=True)
class ModelParams:
    mu0: float = 0.0
    mu1: float = 1.0
    sigma_h: float = 0.8
    sigma_l: float = 1.6
    lam: float = 0.5
    delta: float = 0.95
    phi: float = 0.0
    delta_l: float = 0.30
    flow_utility: str = "square"
    cost: EffortCost = EffortCost.QUADRATIC

    def __post_init__(self):
        for f in fields(self)[:8]:
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParamError(f"{f.name} must be a finite real, got {v!r}")
        if not self.sigma_h > 0:
            raise ParamError("sigmaH must be positive")
        # equality is allowed so the no-learning benchmark can be represented
        if not self.sigma_l >= self.sigma_h:
            raise ParamError("sigmaL must be at least sigmaH")
        if not self.mu1 > self.mu0:
            raise ParamError("mu1 must exceed mu0")
        if not 0 < self.lam < 1:
            raise ParamError("lambda must lie in (0, 1)")
        if not 0 <= self.delta < 1:
            raise ParamError("delta must lie in [0, 1)")
        if not self.phi >= 0:
            raise ParamError("phi must be nonnegative")
        if self.flow_utility not in _FLOW_UTILITIES:
            raise ParamError(f"unknown flow utility {self.flow_utility!r}")
        if EffortCost(self.cost) is not EffortCost.QUADRATIC:
            raise ParamError("only quadratic effort cost is supported")

    def flow(self, pi):
        return _FLOW_UTILITIES[self.flow_utility](np.asarray(pi, dtype=float))

    def to_dict(self) -> dict:
        return {k: float(getattr(self, attr)) for k, attr in _JSON_KEYS.items()}

    @classmethod
    def from_dict(cls, d: dict, **extra) -> "ModelParams":
        if not isinstance(d, dict):
            raise ParamError("model parameters must be a JSON object")
        unknown = sorted(set(d) - set(_JSON_KEYS))
        if unknown:
            raise ParamError(f"unknown model keys: {', '.join(unknown)}")
        missing = sorted(set(_JSON_KEYS) - set(d))
        if missing:
            raise ParamError(f"missing model keys: {', '.join(missing)}")
        kw = {attr: d[k] for k, attr in _JSON_KEYS.items()}
        for k, v in kw.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ParamError(f"{k} must be a number")
        return cls(**{k: float(v) for k, v in kw.items()}, **extra)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))

    def bracket(self, width: float = 6.0) -> tuple[float, float]:
        return (self.mu0 - width * self.sigma_h, self.mu1 + width * self.sigma_h)


@dataclass(frozen=True)
class BinarySignalParams:
    q_h: float
    q_l: float

    def __post_init__(self):
        if not (0.5 < self.q_l < self.q_h < 1.0):
            raise ParamError("binary accuracies need 1/2 < qL < qH < 1")


@dataclass(frozen=True)
class TailQuadruple:
    a_h: float
    b_h: float
    a_l: float
    b_l: float
    r_h: float
    r_l: float


class _Tails(NamedTuple):
    a_h: np.ndarray
    b_h: np.ndarray
    a_l: np.ndarray
    b_l: np.ndarray
    r_h: np.ndarray
    r_l: np.ndarray
    # complements 1-R computed from the lower tails to avoid cancellation
    c_h: np.ndarray
    c_l: np.ndarray


def upper_lower(z):
    """(1 - Phi(z), Phi(z)) from a single cdf call on the smaller tail."""
    small = ndtr(-np.abs(z))
    big = 1.0 - small
    pos = z > 0
    return np.where(pos, small, big), np.where(pos, big, small)


def _tails(s, p: ModelParams) -> _Tails:
    s = np.asarray(s, dtype=float)
    s_l = s + p.delta_l
    a_h, na_h = upper_lower((s - p.mu1) / p.sigma_h)
    b_h, nb_h = upper_lower((s - p.mu0) / p.sigma_h)
    a_l, na_l = upper_lower((s_l - p.mu1) / p.sigma_l)
    b_l, nb_l = upper_lower((s_l - p.mu0) / p.sigma_l)
    lam = p.lam
    r_h = lam * a_h + (1 - lam) * b_h
    r_l = lam * a_l + (1 - lam) * b_l
    c_h = lam * na_h + (1 - lam) * nb_h
    c_l = lam * na_l + (1 - lam) * nb_l
    return _Tails(a_h, b_h, a_l, b_l, r_h, r_l, c_h, c_l)


def gaussian_tails(s_h: float, params: ModelParams) -> TailQuadruple:
    """Risky-recommendation probabilities per type and state at high-type cutoff s_h."""
    t = _tails(s_h, params)
    return TailQuadruple(*(float(x) for x in t[:6]))


def clamp_belief(x):
    # ufunc pair instead of np.clip: this sits on the solver's hot path
    return np.minimum(np.maximum(x, BELIEF_FLOOR), 1.0 - BELIEF_FLOOR)


def _logit(x):
    return np.log(x) - np.log1p(-x)


def _expit(x):
    return 1.0 / (1.0 + np.exp(-x))


def apply_log_odds(pi, j):
    """Move a belief by j in log-odds space."""
    return expit(logit(pi) + j)


class Branch(NamedTuple):
    """Array form of the three-outcome lottery; fields broadcast over (pi, s)."""

    pi: np.ndarray
    r_h: np.ndarray
    r_l: np.ndarray
    c_h: np.ndarray
    c_l: np.ndarray
    p_h: np.ndarray
    p_l: np.ndarray
    pi_rec1: np.ndarray
    pi_rec0: np.ndarray
    lambda_post: np.ndarray
    effort: np.ndarray
    p_s: np.ndarray
    j_plus: np.ndarray
    j_minus: np.ndarray
    pi_plus: np.ndarray
    pi_minus: np.ndarray
    safe_next: np.ndarray
    degenerate_risky: np.ndarray
    degenerate_safe: np.ndarray

    def probs(self, theta: str):
        """(safe, success, failure) probabilities under type theta."""
        if theta == "H":
            r, c, p = self.r_h, self.c_h, self.p_h
        else:
            r, c, p = self.r_l, self.c_l, self.p_l
        succ = r * self.effort * p
        return c, succ, r - succ


def branch_arrays(pi, s, params: ModelParams, safe_update: str = "recOnly") -> Branch:
    if safe_update not in SAFE_UPDATES:
        raise ParamError(f"safeUpdate must be one of {SAFE_UPDATES}")
    pi = np.asarray(pi, dtype=float)
    t = _tails(s, params)
    lam = params.lam
    deg_r = (t.r_h < DEGENERATE_TAIL) | (t.r_l < DEGENERATE_TAIL)
    deg_s = (t.c_h < DEGENERATE_TAIL) | (t.c_l < DEGENERATE_TAIL)
    with np.errstate(divide="ignore", invalid="ignore"):
        rec1 = pi * t.r_h / (pi * t.r_h + (1 - pi) * t.r_l)
        rec0 = pi * t.c_h / (pi * t.c_h + (1 - pi) * t.c_l)
        p_h = lam * t.a_h / t.r_h
        p_l = lam * t.a_l / t.r_l
    rec1 = clamp_belief(np.where(deg_r, pi, rec1))
    rec0 = clamp_belief(np.where(deg_s, pi, rec0))
    p_h = np.where(np.isfinite(p_h), p_h, lam)
    p_l = np.where(np.isfinite(p_l), p_l, lam)
    lam_post = rec1 * p_h + (1 - rec1) * p_l
    effort = lam_post
    p_s = lam_post * effort
    with np.errstate(divide="ignore", invalid="ignore"):
        j_plus = np.log(p_h) - np.log(p_l)
        j_minus = np.log1p(-effort * p_h) - np.log1p(-effort * p_l)
    j_plus = np.where(deg_r, 0.0, j_plus)
    j_minus = np.where(deg_r, 0.0, j_minus)
    lo = _logit(rec1)
    pi_plus = clamp_belief(_expit(lo + j_plus))
    pi_minus = clamp_belief(_expit(lo + j_minus))
    safe_next = rec0 if safe_update == "recOnly" else clamp_belief(pi + 0.0 * rec0)
    return Branch(pi + 0.0 * rec1, t.r_h, t.r_l, t.c_h, t.c_l, p_h, p_l, rec1, rec0,
                  lam_post, effort, p_s, j_plus, j_minus, pi_plus, pi_minus,
                  safe_next, deg_r, deg_s)


@dataclass(frozen=True)
class BranchEntry:
    label: str
    prob_h: float
    prob_l: float
    posterior: float


@dataclass(frozen=True)
class BranchDistribution:
    entries: tuple[BranchEntry, ...]
    pi_rec1: float
    pi_rec0: float
    lambda_post: float
    effort: float
    p_s: float
    j_plus: float
    j_minus: float
    p_h: float
    p_l: float
    degenerate: tuple[str, ...] = field(default=())

    def entry(self, label: str) -> BranchEntry:
        for e in self.entries:
            if e.label == label:
                return e
        raise KeyError(label)

    @property
    def pi_plus(self) -> float:
        return self.entry("riskySuccess").posterior

    @property
    def pi_minus(self) -> float:
        return self.entry("riskyFailure").posterior


def branch_distribution(pi: float, s_h: float, params: ModelParams,
                        safe_update: str = "recOnly") -> BranchDistribution:
    """Public-observation lottery at belief pi when the high type uses cutoff s_h."""
    if not 0 < pi < 1:
        raise ParamError("pi must lie in (0, 1)")
    b = branch_arrays(pi, s_h, params, safe_update)
    sh, uh, fh = (float(x) for x in b.probs("H"))
    sl, ul, fl = (float(x) for x in b.probs("L"))
    deg = []
    if b.degenerate_risky:
        deg.append("risky")
    if b.degenerate_safe:
        deg.append("safe")
    entries = (
        BranchEntry("safe", sh, sl, float(b.safe_next)),
        BranchEntry("riskySuccess", uh, ul, float(b.pi_plus)),
        BranchEntry("riskyFailure", fh, fl, float(b.pi_minus)),
    )
    return BranchDistribution(entries, float(b.pi_rec1), float(b.pi_rec0),
                              float(b.lambda_post), float(b.effort), float(b.p_s),
                              float(b.j_plus), float(b.j_minus), float(b.p_h),
                              float(b.p_l), tuple(deg))


def outcome_jumps(p_h: float, p_l: float, effort: float) -> tuple[float, float]:
    """Log-likelihood jumps after a success and after a failure."""
    return math.log(p_h / p_l), math.log((1 - effort * p_h) / (1 - effort * p_l))


def binary_jumps(bp: BinarySignalParams) -> tuple[float, float, bool]:
    """Outcome likelihood ratios of the binary-signal benchmark and the diagnosticity test."""
    l_plus = bp.q_h / bp.q_l
    l_minus = (1 - bp.q_h) / (1 - bp.q_l)
    holds = bp.q_h * (1 - bp.q_h) <= bp.q_l * (1 - bp.q_l)
    return l_plus, l_minus, holds


def binary_recommendation_lr(bp: BinarySignalParams, alpha: float) -> float:
    if not 0 < alpha <= 1:
        raise ParamError("alpha must lie in (0, 1]")
    num = alpha * bp.q_h + (1 - alpha) * (1 - bp.q_h)
    den = alpha * bp.q_l + (1 - alpha) * (1 - bp.q_l)
    return num / den


def diagnosticity_slack(j_plus, j_minus):
    """J+ + J-; nonpositive when failures are at least as informative as successes."""
    return np.asarray(j_plus) + np.asarray(j_minus)

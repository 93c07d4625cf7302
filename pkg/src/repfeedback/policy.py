"""Success-contingent bonuses: shifted margins and cutoffs, rate sensitivity and calibration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, ParamError, _tails, branch_arrays
from .solver import (CLAMP_LABELS, SolveSettings, ValueFunction, bisect_cutoffs,
                     delta_h_arrays)

WEIGHTINGS = ("successProb", "stateProb")
BONUS_COLUMNS = ["pi", "beta1", "beta0", "sStarBeta", "rho", "rhoPrimeAnalytic", "rhoPrimeFD"]


class IneffectiveInstrument(ValueError):
    """The bonus has no first-order effect at this point."""


class CalibrationError(RuntimeError):
    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class BonusContract:
    beta1: float = 0.0
    beta0: float = 0.0
    # successProb rotates the margin by beta1*P_S - beta0*(1-P_S); stateProb uses
    # lambda in place of P_S for comparison
    weighting: str = "successProb"

    def __post_init__(self):
        if not (self.beta1 >= 0 and self.beta0 >= 0):
            raise ParamError("bonus and penalty must be nonnegative")
        if self.weighting not in WEIGHTINGS:
            raise ParamError(f"weighting must be one of {WEIGHTINGS}")


def _weight(b, params: ModelParams, contract: BonusContract):
    return b.p_s if contract.weighting == "successProb" else params.lam + 0.0 * b.p_s


def bonus_delta_arrays(s, pi, V, params, contract, safe_update="recOnly"):
    b = branch_arrays(pi, s, params, safe_update)
    base = delta_h_arrays(s, pi, V, params, safe_update, branch=b)
    if contract.beta1 == 0 and contract.beta0 == 0:
        return base
    w = _weight(b, params, contract)
    return base + (contract.beta1 * w - contract.beta0 * (1 - w))


def bonus_delta(s: float, pi: float, V: ValueFunction, params: ModelParams,
                contract: BonusContract, safe_update: str = "recOnly") -> float:
    """Risky-safe margin with the contract's transfers added."""
    if not 0 < pi < 1:
        raise ParamError("pi must lie in (0, 1)")
    return float(bonus_delta_arrays(s, pi, V, params, contract, safe_update))


def bonus_cutoff(pi: float, V: ValueFunction, params: ModelParams, contract: BonusContract,
                 st: SolveSettings = SolveSettings()) -> tuple[float, str]:
    lo, hi = params.bracket(st.bracket_width)
    margin = lambda s, p: bonus_delta_arrays(s, p, V, params, contract, st.safe_update)
    r = bisect_cutoffs(margin, np.array([pi]), lo, hi, st.bisection_iterations)
    return float(r.s_star[0]), CLAMP_LABELS[int(r.clamp[0])]


def rho_of_beta(pi: float, V: ValueFunction, params: ModelParams, beta1: float,
                st: SolveSettings = SolveSettings(), weighting: str = "successProb") -> float:
    s, _ = bonus_cutoff(pi, V, params, BonusContract(beta1, 0.0, weighting), st)
    return float(_tails(s, params).r_h)


def margin_slope(s: float, pi: float, V: ValueFunction, params: ModelParams,
                 contract: BonusContract = BonusContract(), safe_update: str = "recOnly"):
    """Analytic derivative in s of the bonus-shifted margin, with P_S at s.

    Chain rule through the Gaussian tails, the two Bayes posteriors, the
    effort best response and the log-odds jumps; V enters via its
    piecewise-linear slope.
    """
    p = params
    lam = p.lam
    b = branch_arrays(pi, s, p, safe_update)
    t = _tails(s, p)
    s_l = s + p.delta_l

    def dens(x, mu, sd):
        z = (x - mu) / sd
        return math.exp(-0.5 * z * z) / (sd * math.sqrt(2 * math.pi))

    da_h, db_h = -dens(s, p.mu1, p.sigma_h), -dens(s, p.mu0, p.sigma_h)
    da_l, db_l = -dens(s_l, p.mu1, p.sigma_l), -dens(s_l, p.mu0, p.sigma_l)
    dr_h = lam * da_h + (1 - lam) * db_h
    dr_l = lam * da_l + (1 - lam) * db_l
    r_h, r_l, c_h, c_l = float(t.r_h), float(t.r_l), float(t.c_h), float(t.c_l)
    a_h, a_l = float(t.a_h), float(t.a_l)

    d1 = pi * r_h + (1 - pi) * r_l
    drec1 = pi * (1 - pi) * (dr_h * r_l - r_h * dr_l) / d1 ** 2
    d0 = pi * c_h + (1 - pi) * c_l
    drec0 = pi * (1 - pi) * (-dr_h * c_l + c_h * dr_l) / d0 ** 2
    if safe_update == "freeze":
        drec0 = 0.0
    dp_h = lam * (da_h * r_h - a_h * dr_h) / r_h ** 2
    dp_l = lam * (da_l * r_l - a_l * dr_l) / r_l ** 2

    rec1, p_h, p_l = float(b.pi_rec1), float(b.p_h), float(b.p_l)
    e = float(b.effort)
    de = drec1 * (p_h - p_l) + rec1 * dp_h + (1 - rec1) * dp_l
    ps = float(b.p_s)
    dps = 2 * e * de
    djp = dp_h / p_h - dp_l / p_l
    djm = -(de * p_h + e * dp_h) / (1 - e * p_h) + (de * p_l + e * dp_l) / (1 - e * p_l)
    dlo = drec1 / (rec1 * (1 - rec1))
    up, dn = float(b.pi_plus), float(b.pi_minus)
    dup = up * (1 - up) * (dlo + djp)
    ddn = dn * (1 - dn) * (dlo + djm)
    v_up, v_dn = float(V(up)), float(V(dn))
    cont = (dps * (v_up - v_dn) + ps * float(V.slope(up)) * dup
            + (1 - ps) * float(V.slope(dn)) * ddn - float(V.slope(b.safe_next)) * drec0)
    slope = p.delta * cont
    if contract.weighting == "successProb":
        slope += (contract.beta1 + contract.beta0) * dps
    return slope, ps, dr_h


@dataclass(frozen=True)
class Sensitivity:
    s_star: float
    ds_dbeta1: float
    ds_dbeta0: float
    rho_prime: float
    p_s: float


def cutoff_sensitivity(pi: float, V: ValueFunction, params: ModelParams, beta1: float = 0.0,
                       st: SolveSettings = SolveSettings(), weighting: str = "successProb",
                       beta0: float = 0.0) -> Sensitivity:
    """Implicit-function derivatives of the bonus cutoff and the experimentation rate."""
    contract = BonusContract(beta1, beta0, weighting)
    s, clamp = bonus_cutoff(pi, V, params, contract, st)
    if clamp != "none":
        raise IneffectiveInstrument(f"ineffective instrument: cutoff clamped ({clamp}) at pi={pi}")
    slope, ps, dr_h = margin_slope(s, pi, V, params, contract, st.safe_update)
    w = ps if weighting == "successProb" else params.lam
    if w <= 0 or not math.isfinite(slope) or slope == 0:
        raise IneffectiveInstrument(f"ineffective instrument at pi={pi}: flat margin or zero weight")
    ds1 = -w / slope
    ds0 = (1 - w) / slope
    return Sensitivity(s, ds1, ds0, dr_h * ds1, ps)


def rho_prime(pi: float, V: ValueFunction, params: ModelParams, beta1: float = 0.0,
              st: SolveSettings = SolveSettings(), weighting: str = "successProb") -> float:
    return cutoff_sensitivity(pi, V, params, beta1, st, weighting).rho_prime


def rho_prime_fd(pi, V, params, beta1=0.0, st=SolveSettings(), step=1e-4,
                 weighting="successProb") -> float:
    """Central difference of rho(beta1); one-sided at beta1 < step."""
    if beta1 >= step:
        hi = rho_of_beta(pi, V, params, beta1 + step, st, weighting)
        lo = rho_of_beta(pi, V, params, beta1 - step, st, weighting)
        return (hi - lo) / (2 * step)
    r0 = rho_of_beta(pi, V, params, beta1, st, weighting)
    return (rho_of_beta(pi, V, params, beta1 + step, st, weighting) - r0) / step


def calibrate_bonus(pi: float, V: ValueFunction, params: ModelParams, rho_target: float,
                    st: SolveSettings = SolveSettings(), tol: float = 1e-6,
                    beta_cap: float = 1e9, iterations: int = 200) -> float:
    """Smallest success bonus whose experimentation rate reaches rho_target.

    Doubles an upper bracket from 1 until the rate reaches the target (or the
    cap), then bisects. Raises CalibrationError when the rate jumps past the
    target so no bonus lands within tol.
    """
    rho0 = rho_of_beta(pi, V, params, 0.0, st)
    if not (rho0 < rho_target < 1):
        raise ParamError(f"rhoTarget must lie in ({rho0:.12g}, 1)")
    f = lambda beta: rho_of_beta(pi, V, params, beta, st) - rho_target
    lo, hi = 0.0, 1.0
    while f(hi) < 0:
        lo, hi = hi, 2 * hi
        if hi > beta_cap:
            raise CalibrationError(f"rate stays below {rho_target} up to beta1={beta_cap:g}",
                                   rho_of_beta(pi, V, params, beta_cap, st))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    r_hi, r_lo = f(hi) + rho_target, f(lo) + rho_target
    best, r = (hi, r_hi) if abs(r_hi - rho_target) <= abs(r_lo - rho_target) else (lo, r_lo)
    if abs(r - rho_target) > tol:
        raise CalibrationError(
            f"rate is discontinuous at beta1~{best:.12g}: jumps {r_lo:.6g} -> {r_hi:.6g}, "
            f"target {rho_target} unreachable within {tol:g}", (best, r_lo, r_hi))
    return best


@dataclass(frozen=True)
class MinimalTransfers:
    beta1_min: float | None
    beta0_min: float | None
    margin: float
    p_s: float
    notes: tuple = ()


def minimal_transfers(pi: float, s_tilde: float, V: ValueFunction, params: ModelParams,
                      safe_update: str = "recOnly") -> MinimalTransfers:
    """Smallest success-only bonus and failure-only penalty that make s_tilde indifferent."""
    b = branch_arrays(pi, s_tilde, params, safe_update)
    d = float(delta_h_arrays(s_tilde, pi, V, params, safe_update, branch=b))
    ps = float(b.p_s)
    return transfers_from_margin(d, ps)


def transfers_from_margin(margin: float, p_s: float) -> MinimalTransfers:
    notes = []
    b1 = b0 = None
    if margin == 0:
        return MinimalTransfers(0.0, 0.0, margin, p_s)
    if margin < 0:
        if p_s <= 0:
            notes.append("success bonus ineffective: P_S = 0")
        else:
            b1 = -margin / p_s
        notes.append("failure penalty not applicable: margin already negative")
    else:
        if p_s >= 1:
            notes.append("failure penalty ineffective: P_S = 1")
        else:
            b0 = margin / (1 - p_s)
        notes.append("success bonus not applicable: margin already positive")
    return MinimalTransfers(b1, b0, margin, p_s, tuple(notes))


@dataclass(frozen=True)
class PlannerInputs:
    surplus: float
    eta: float
    sample: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sample, dtype=float)
        if s.size == 0:
            raise ParamError("stationary sample must be nonempty")
        if not self.eta >= 0:
            raise ParamError("eta must be nonnegative")
        object.__setattr__(self, "sample", s)


@dataclass
class PlannerResult:
    beta_star: float
    boundary: bool
    gain: float
    cost: float
    curvature: float
    clamped_share: float
    diagnostics: dict = field(default_factory=dict)


def planner_local_bonus(inputs: PlannerInputs, sol, st: SolveSettings | None = None) -> PlannerResult:
    """Newton step for the steady-state optimal success bonus around beta = 0.

    Points whose cutoff is clamped carry no first-order response and enter
    with a zero rate derivative.
    """
    st = st or sol.settings
    V, params = sol.value, sol.params
    rp, surplus, ps_w, succ = [], [], [], []
    clamped = 0
    for x in inputs.sample:
        b = sol.public_branch(np.array([x]))
        ps, e, rho = float(b.p_s[0]), float(b.effort[0]), float(b.r_h[0])
        try:
            d = rho_prime(float(x), V, params, 0.0, st)
        except IneffectiveInstrument:
            d = 0.0
            clamped += 1
        rp.append(d)
        surplus.append(inputs.surplus * ps - 0.5 * e * e)
        ps_w.append(ps)
        succ.append(rho * ps)
    n = len(rp)
    if clamped == n:
        raise IneffectiveInstrument("instrument ineffective over support: every sampled cutoff is clamped")
    rp = np.array(rp)
    gain = float(np.mean(rp * np.array(surplus)))
    r_succ = float(np.mean(succ))
    curv = float(np.mean(rp * np.array(ps_w)))
    cost = inputs.eta * r_succ
    diag = {"E[rhoPrime*Sexp]": gain, "Rsucc0": r_succ, "E[rhoPrime*PS]": curv, "n": n}
    if math.isinf(inputs.eta) or gain <= cost or inputs.eta * curv <= 0:
        return PlannerResult(0.0, True, gain, cost, curv, clamped / n, diag)
    return PlannerResult((gain - cost) / (inputs.eta * curv), False, gain, cost, curv, clamped / n, diag)


def bonus_sweep(sol, pis, betas, st: SolveSettings | None = None, step: float = 1e-4) -> dict:
    """Rows of (pi, beta1, beta0=0, s*_beta, rho, analytic and finite-difference rho')."""
    st = st or sol.settings
    cols = {c: [] for c in BONUS_COLUMNS}
    for x in pis:
        for beta in betas:
            s, clamp = bonus_cutoff(x, sol.value, sol.params, BonusContract(beta), st)
            try:
                rp = rho_prime(x, sol.value, sol.params, beta, st)
            except IneffectiveInstrument:
                rp = math.nan
            fd = rho_prime_fd(x, sol.value, sol.params, beta, st, step)
            row = (x, beta, 0.0, s, float(_tails(s, sol.params).r_h), rp, fd)
            for c, v in zip(BONUS_COLUMNS, row):
                cols[c].append(v)
    return {c: np.array(v) for c, v in cols.items()}

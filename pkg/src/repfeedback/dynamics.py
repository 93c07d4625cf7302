"""Reputation-path simulation, one-step drift diagnostics and diffusion coefficients."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .model import BELIEF_FLOOR, ParamError, branch_arrays
from .solver import EquilibriumSolution, fmt, write_table

PATH_COLUMNS = ["rep", "t", "pi", "omega", "s", "a", "y", "piNext"]
# replications per vectorised block; fixed so results never depend on thread count
BLOCK = 32


@dataclass(frozen=True)
class SimSettings:
    pi0: float = 0.5
    horizon: int = 150
    replications: int = 250
    seed: int = 0
    true_type: str = "H"

    def __post_init__(self):
        if not 0 < self.pi0 < 1:
            raise ParamError("pi0 must lie in (0, 1)")
        if self.horizon < 1 or self.replications < 1:
            raise ParamError("horizon and replications must be positive")
        if self.true_type not in ("H", "L"):
            raise ParamError("trueType must be H or L")
        if not 0 <= self.seed < 2**64:
            raise ParamError("seed must be an unsigned 64-bit integer")


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Philox substream for one replication, keyed by (seed, rep)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(rep,))))


@dataclass
class PathEnsemble:
    settings: SimSettings
    solution_hash: str
    pi: np.ndarray
    omega: np.ndarray
    s: np.ndarray
    a: np.ndarray
    y: np.ndarray
    pi_next: np.ndarray
    clamp_count: int = 0

    @property
    def replications(self) -> int:
        return self.pi.shape[0]

    @property
    def horizon(self) -> int:
        return self.pi.shape[1]

    def table(self) -> dict:
        R, T = self.pi.shape
        return {
            "rep": np.repeat(np.arange(R), T), "t": np.tile(np.arange(T), R),
            "pi": self.pi.ravel(), "omega": self.omega.ravel().astype(np.int64),
            "s": self.s.ravel(), "a": self.a.ravel().astype(np.int64),
            "y": self.y.ravel().astype(np.int64), "piNext": self.pi_next.ravel(),
        }

    def to_csv(self, path) -> None:
        write_table(path, self.table(), PATH_COLUMNS)

    def to_json(self, path) -> None:
        tab = self.table()
        rows = [{c: tab[c][i].item() for c in PATH_COLUMNS} for i in range(len(tab["rep"]))]
        with open(path, "w") as fh:
            json.dump(rows, fh, separators=(",", ":"))

    def trajectories(self) -> np.ndarray:
        """Belief paths including the terminal belief, shape (R, T+1)."""
        return np.concatenate([self.pi, self.pi_next[:, -1:]], axis=1)


def _simulate_block(sol: EquilibriumSolution, sim: SimSettings, reps):
    p = sol.params
    T = sim.horizon
    n = len(reps)
    u_state = np.empty((n, T))
    z = np.empty((n, T))
    u_out = np.empty((n, T))
    for i, r in enumerate(reps):
        g = replication_rng(sim.seed, r)
        u_state[i] = g.random(T)
        z[i] = g.standard_normal(T)
        u_out[i] = g.random(T)
    high = sim.true_type == "H"
    sigma = p.sigma_h if high else p.sigma_l
    offset = 0.0 if high else p.delta_l
    pis = np.empty((n, T))
    nxt = np.empty((n, T))
    sig = np.empty((n, T))
    om = np.empty((n, T), dtype=bool)
    act = np.empty((n, T), dtype=bool)
    out = np.empty((n, T), dtype=bool)
    clamps = 0
    pi = np.full(n, sim.pi0)
    for t in range(T):
        cut = sol.cutoff_at(pi)
        b = branch_arrays(pi, cut, p, sol.settings.safe_update)
        omega = u_state[:, t] < p.lam
        s = np.where(omega, p.mu1, p.mu0) + sigma * z[:, t]
        a = s >= cut + offset
        y = a & omega & (u_out[:, t] < b.effort)
        new = np.where(a, np.where(y, b.pi_plus, b.pi_minus), b.safe_next)
        clamps += int(np.count_nonzero((new <= BELIEF_FLOOR) | (new >= 1 - BELIEF_FLOOR)))
        pis[:, t], nxt[:, t], sig[:, t] = pi, new, s
        om[:, t], act[:, t], out[:, t] = omega, a, y
        pi = new
    return pis, om, sig, act, out, nxt, clamps


def simulate_paths(sol: EquilibriumSolution, sim: SimSettings = SimSettings(),
                   threads: int = 1) -> PathEnsemble:
    """Simulate R reputation paths of length T for a fixed true type.

    Randomness per replication comes only from that replication's substream,
    so output is identical for any thread count.
    """
    blocks = [list(range(i, min(i + BLOCK, sim.replications)))
              for i in range(0, sim.replications, BLOCK)]
    run = lambda reps: _simulate_block(sol, sim, reps)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    cat = [np.concatenate([q[k] for q in parts]) for k in range(6)]
    return PathEnsemble(sim, sol.digest(), *cat, clamp_count=sum(q[6] for q in parts))


def replay_transitions(sol: EquilibriumSolution, ens: PathEnsemble) -> float:
    """Max gap between recorded next beliefs and the public-branch update."""
    b = sol.public_branch(ens.pi)
    want = np.where(ens.a, np.where(ens.y, b.pi_plus, b.pi_minus), b.safe_next)
    gap = float(np.max(np.abs(want - ens.pi_next)))
    chained = float(np.max(np.abs(ens.pi[:, 1:] - ens.pi_next[:, :-1]))) if ens.horizon > 1 else 0.0
    return max(gap, chained)


def _lottery(b):
    sh, uh, fh = b.probs("H")
    sl, ul, fl = b.probs("L")
    post = (b.safe_next, b.pi_plus, b.pi_minus)
    return (sh, uh, fh), (sl, ul, fl), post


def bayes_consistency(sol: EquilibriumSolution, branch=None) -> np.ndarray:
    """Per grid point: expected posterior under the public mixture minus the prior."""
    b = sol.branch if branch is None else branch
    pi = sol.grid.points
    ph, pl, post = _lottery(b)
    total = sum((pi * h + (1 - pi) * l) * q for h, l, q in zip(ph, pl, post))
    return total - pi


def bayes_consistency_check(sol: EquilibriumSolution, branch=None) -> float:
    return float(np.max(np.abs(bayes_consistency(sol, branch))))


@dataclass
class DriftReport:
    drift_h: np.ndarray
    drift_l: np.ndarray
    kl: np.ndarray

    def to_json(self, grid) -> dict:
        return {fmt(p): {"driftH": float(a), "driftL": float(b), "klDrift": float(c)}
                for p, a, b, c in zip(grid, self.drift_h, self.drift_l, self.kl)}


def drift_and_kl(sol: EquilibriumSolution) -> DriftReport:
    """Exact one-step conditional belief drifts and the KL drift under the high type."""
    b = sol.branch
    pi = sol.grid.points
    ph, pl, post = _lottery(b)
    dh = sum(h * (q - pi) for h, q in zip(ph, post))
    dl = sum(l * (q - pi) for l, q in zip(pl, post))
    kl = np.zeros_like(pi)
    for h, l in zip(ph, pl):
        with np.errstate(divide="ignore", invalid="ignore"):
            term = np.where(h > 0, h * (np.log(h) - np.log(l)), 0.0)
        kl = kl + term
    return DriftReport(dh, dl, kl)


def risky_increment_stats(ens: PathEnsemble, z: float = 2.5758293035489004):
    """Mean belief increment over risky periods with a normal-approximation CI."""
    d = (ens.pi_next - ens.pi)[ens.a]
    n = d.size
    if n == 0:
        return {"n": 0, "mean": math.nan, "lo": math.nan, "hi": math.nan}
    m = float(d.mean())
    se = float(d.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return {"n": int(n), "mean": m, "se": se, "lo": m - z * se, "hi": m + z * se}


def boundary_hitting(ens: PathEnsemble, pi_low: float, pi_high: float):
    """Fractions of paths whose first boundary touch is low, high, or neither."""
    if not pi_low < pi_high:
        raise ParamError("piLow must be below piHigh")
    paths = ens.trajectories()
    hit_lo = paths <= pi_low
    hit_hi = paths >= pi_high
    T = paths.shape[1]
    first_lo = np.where(hit_lo.any(1), hit_lo.argmax(1), T)
    first_hi = np.where(hit_hi.any(1), hit_hi.argmax(1), T)
    low = (first_lo < first_hi)
    high = (first_hi < first_lo)
    R = paths.shape[0]
    f_lo, f_hi = low.sum() / R, high.sum() / R
    return float(f_lo), float(f_hi), float((R - low.sum() - high.sum()) / R)


@dataclass
class CTCoefficients:
    pi: np.ndarray
    mu: np.ndarray
    sigma2: np.ndarray
    intensity: np.ndarray
    rho: np.ndarray

    def to_json(self) -> dict:
        return {fmt(p): {"mu": float(a), "sigma2": float(b), "Lambda": float(c), "rho": float(d)}
                for p, a, b, c, d in zip(self.pi, self.mu, self.sigma2, self.intensity, self.rho)}


def ct_coefficients(sol: EquilibriumSolution) -> CTCoefficients:
    """Log-odds drift and variance rates of the diffusion limit, from the solved branch."""
    b = sol.branch
    lam = b.lambda_post * b.effort
    rho = b.r_h
    mu = rho * (lam * b.j_plus + (1 - lam) * b.j_minus)
    s2 = rho * (lam * b.j_plus ** 2 + (1 - lam) * b.j_minus ** 2)
    return CTCoefficients(sol.grid.points, mu, s2, lam, rho)


def ct_coefficients_direct(sol: EquilibriumSolution) -> CTCoefficients:
    """Same coefficients rebuilt from the primitives without the branch kernel.

    Tails come from scipy.stats.norm.sf, state posteriors from odds ratios and
    the failure jump from log1p, so no intermediate is shared with the solver.
    """
    p = sol.params
    pi = sol.grid.points
    out = {k: np.empty(pi.size) for k in ("mu", "s2", "lam", "rho")}
    for j, (x, s) in enumerate(zip(pi, sol.cutoffs)):
        sl = s + p.delta_l
        a_h, b_h = norm.sf(s, p.mu1, p.sigma_h), norm.sf(s, p.mu0, p.sigma_h)
        a_l, b_l = norm.sf(sl, p.mu1, p.sigma_l), norm.sf(sl, p.mu0, p.sigma_l)
        r_h = p.lam * a_h + (1 - p.lam) * b_h
        r_l = p.lam * a_l + (1 - p.lam) * b_l
        if min(r_h, r_l) < 1e-12:
            out["mu"][j] = out["s2"][j] = out["lam"][j] = 0.0
            out["rho"][j] = r_h
            continue
        odds_good = p.lam / (1 - p.lam)
        q_h = 1.0 / (1.0 + b_h / (a_h * odds_good))
        q_l = 1.0 / (1.0 + b_l / (a_l * odds_good))
        odds_type = x / (1 - x) * r_h / r_l
        w = min(max(odds_type / (1 + odds_type), BELIEF_FLOOR), 1 - BELIEF_FLOOR)
        e = q_l + w * (q_h - q_l)
        jp = math.log(q_h / q_l)
        jm = math.log1p(-e * q_h) - math.log1p(-e * q_l)
        ps = e * e
        out["mu"][j] = r_h * (ps * jp + (1 - ps) * jm)
        out["s2"][j] = r_h * (ps * jp * jp + (1 - ps) * jm * jm)
        out["lam"][j] = ps
        out["rho"][j] = r_h
    return CTCoefficients(pi, out["mu"], out["s2"], out["lam"], out["rho"])

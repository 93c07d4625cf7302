"""Committee pivotality: k-of-n and general monotone rules over independent member votes."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, ParamError, _tails, branch_arrays
from .solver import SolveSettings, ValueFunction, bisect_cutoffs, CLAMP_LABELS

COMMITTEE_COLUMNS = ["n", "k", "lambda", "rho0", "rho1", "zeta"]
ORACLE_LIMIT = 20


@dataclass(frozen=True)
class CommitteeSpec:
    """Rule is a threshold k or an influence profile over the others' risky-vote count.

    member_probs maps state (0, 1) to either a float shared by all other members
    or a sequence of n-1 per-member probabilities.
    """

    n: int
    lam: float
    member_probs: dict
    k: int | None = None
    influence: tuple | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ParamError("committee size must be at least 1")
        if not 0 < self.lam < 1:
            raise ParamError("lambda must lie in (0, 1)")
        if (self.k is None) == (self.influence is None):
            raise ParamError("give exactly one of a threshold k or an influence profile")
        if self.k is not None and not 1 <= self.k <= self.n:
            raise ParamError("threshold k must lie in [1, n]")
        if self.influence is not None:
            prof = tuple(int(v) for v in self.influence)
            if len(prof) != self.n or any(v not in (0, 1) for v in prof):
                raise ParamError("influence profile needs n entries in {0, 1}")
            switches = [(a, b) for a, b in zip(prof, prof[1:]) if a != b]
            valley = switches[:1] == [(1, 0)] and (0, 1) in switches
            if switches.count((0, 1)) > 1 or switches.count((1, 0)) > 1 or valley:
                raise ParamError("influence profile must be weakly single-peaked")
            object.__setattr__(self, "influence", prof)
        for w in (0, 1):
            if w not in self.member_probs:
                raise ParamError(f"member probabilities missing for state {w}")
            v = self.member_probs[w]
            arr = np.asarray(v, dtype=float)
            if np.any((arr < 0) | (arr > 1)) or not np.all(np.isfinite(arr)):
                raise ParamError("member probabilities must lie in [0, 1]")
            if arr.ndim > 1 or (arr.ndim == 1 and arr.size != self.n - 1):
                raise ParamError("per-member probabilities need n-1 entries")

    def shared(self) -> bool:
        return all(np.ndim(self.member_probs[w]) == 0 for w in (0, 1))

    def probs(self, w: int) -> np.ndarray:
        v = np.asarray(self.member_probs[w], dtype=float)
        return np.full(self.n - 1, float(v)) if v.ndim == 0 else v.copy()

    def profile(self) -> tuple:
        if self.influence is not None:
            return self.influence
        return tuple(int(m == self.k - 1) for m in range(self.n))


def binomial_pmf(n: int, k: int, p: float) -> float:
    """Binomial pmf evaluated in log space."""
    if k < 0 or k > n:
        return 0.0
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    lg = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    return math.exp(lg + k * math.log(p) + (n - k) * math.log1p(-p))


def pivot_k_of_n(spec: CommitteeSpec) -> float:
    """Probability that a member's vote decides a k-of-n rule."""
    if spec.k is None or not spec.shared():
        raise ParamError("pivotKofN needs a threshold rule with shared probabilities")
    n, k, lam = spec.n, spec.k, spec.lam
    r0, r1 = float(spec.member_probs[0]), float(spec.member_probs[1])
    return lam * binomial_pmf(n - 1, k - 1, r1) + (1 - lam) * binomial_pmf(n - 1, k - 1, r0)


def poisson_binomial_pmf(probs) -> np.ndarray:
    """Distribution of a sum of independent Bernoullis by sequential convolution."""
    p = np.asarray(probs, dtype=float).ravel()
    if np.any(~np.isfinite(p)) or np.any((p < 0) | (p > 1)):
        raise ParamError("probabilities must lie in [0, 1]")
    pmf = np.zeros(p.size + 1)
    pmf[0] = 1.0
    for i, q in enumerate(p):
        pmf[1:i + 2] = pmf[1:i + 2] * (1 - q) + pmf[:i + 1] * q
        pmf[0] *= 1 - q
    return pmf


def enumerate_counts(probs) -> np.ndarray:
    """Brute-force pmf of the vote count over all 2^N vote vectors."""
    p = np.asarray(probs, dtype=float).ravel()
    N = p.size
    if N > ORACLE_LIMIT:
        raise ParamError(f"enumeration oracle limited to {ORACLE_LIMIT} members")
    if N == 0:
        return np.ones(1)
    pmf = np.zeros(N + 1)
    # process in 16-bit blocks to keep memory bounded
    lo_bits = min(N, 16)
    lo = ((np.arange(2 ** lo_bits)[:, None] >> np.arange(lo_bits)) & 1).astype(bool)
    w_lo = np.prod(np.where(lo, p[:lo_bits], 1 - p[:lo_bits]), axis=1)
    c_lo = lo.sum(1)
    hi_bits = N - lo_bits
    for hi in itertools.product((0, 1), repeat=hi_bits):
        hv = np.array(hi, dtype=bool)
        w = np.prod(np.where(hv, p[lo_bits:], 1 - p[lo_bits:])) if hi_bits else 1.0
        np.add.at(pmf, c_lo + int(hv.sum()), w_lo * w)
    return pmf


def _state_pivot(profile, pmf) -> float:
    return float(np.dot(np.asarray(profile, dtype=float), pmf))


def pivot_general_enumerated(spec: CommitteeSpec) -> float:
    """Pivot probability by direct sum over every vote vector of the other members."""
    prof = spec.profile()
    total = 0.0
    for w, weight in ((1, spec.lam), (0, 1 - spec.lam)):
        p = spec.probs(w)
        N = p.size
        acc = 0.0
        for votes in itertools.product((0, 1), repeat=N):
            pr = 1.0
            for v, q in zip(votes, p):
                pr *= q if v else 1 - q
            acc += pr * prof[sum(votes)]
        total += weight * acc
    return total


def pivot_general(spec: CommitteeSpec, check: bool = True) -> float:
    """Pivot probability of a monotone rule from its influence profile.

    With at most 20 other members the result is cross-checked against the
    exhaustive vote-vector sum.
    """
    prof = spec.profile()
    z = 0.0
    for w, weight in ((1, spec.lam), (0, 1 - spec.lam)):
        z += weight * _state_pivot(prof, poisson_binomial_pmf(spec.probs(w)))
    if check and spec.n - 1 <= ORACLE_LIMIT:
        zo = 0.0
        for w, weight in ((1, spec.lam), (0, 1 - spec.lam)):
            zo += weight * _state_pivot(prof, enumerate_counts(spec.probs(w)))
        if abs(z - zo) > 1e-12:
            raise ArithmeticError(f"pivot mismatch against enumeration: {z!r} vs {zo!r}")
    return z


def member_risk_probs(pi: float, s: float, params: ModelParams) -> tuple[float, float]:
    """Risky-vote probability per state of a member whose type is H with probability pi."""
    t = _tails(s, params)
    r1 = pi * float(t.a_h) + (1 - pi) * float(t.a_l)
    r0 = pi * float(t.b_h) + (1 - pi) * float(t.b_l)
    return r0, r1


def committee_delta_arrays(s, pi, V, params, zeta, safe_update="recOnly"):
    b = branch_arrays(pi, s, params, safe_update)
    option = b.p_s * V(b.pi_plus) + (1 - b.p_s) * V(b.pi_minus) - V(b.pi)
    signal = V(b.pi) - V(b.safe_next)
    return params.phi + params.delta * (zeta * option - signal)


def committee_delta(s: float, pi: float, V: ValueFunction, params: ModelParams, zeta: float,
                    safe_update: str = "recOnly") -> float:
    """Member's risky-safe margin when the vote decides the outcome with probability zeta."""
    if not 0 <= zeta <= 1:
        raise ParamError("zeta must lie in [0, 1]")
    if not 0 < pi < 1:
        raise ParamError("pi must lie in (0, 1)")
    return float(committee_delta_arrays(s, pi, V, params, zeta, safe_update))


def committee_cutoff(pi: float, V: ValueFunction, params: ModelParams, zeta: float,
                     st: SolveSettings = SolveSettings()) -> tuple[float, str]:
    lo, hi = params.bracket(st.bracket_width)
    margin = lambda s, p: committee_delta_arrays(s, p, V, params, zeta, st.safe_update)
    r = bisect_cutoffs(margin, np.array([pi]), lo, hi, st.bisection_iterations)
    return float(r.s_star[0]), CLAMP_LABELS[int(r.clamp[0])]


@dataclass
class PivotRow:
    k: int
    zeta: float
    zeta_next: float | None
    applicable: bool
    holds: bool | None


def pivot_monotonicity(n: int, lam: float, rho0: float, rho1: float, k_range) -> list[PivotRow]:
    """Check zeta_{k+1} <= zeta_k wherever both state probabilities are at most k/n."""
    rows = []
    for k in k_range:
        z = pivot_k_of_n(CommitteeSpec(n, lam, {0: rho0, 1: rho1}, k=k))
        zn = pivot_k_of_n(CommitteeSpec(n, lam, {0: rho0, 1: rho1}, k=k + 1)) if k < n else None
        ok = max(rho0, rho1) <= k / n and zn is not None
        rows.append(PivotRow(k, z, zn, ok, (zn <= z + 1e-15) if ok else None))
    return rows

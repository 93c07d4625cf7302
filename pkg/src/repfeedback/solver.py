"""Damped value iteration on a reputation grid with bisection for the high-type cutoff."""

from __future__ import annotations

import csv
import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .model import (DEGENERATE_TAIL, SAFE_UPDATES, Branch, ModelParams, ParamError, branch_arrays,
                    clamp_belief, diagnosticity_slack, upper_lower)

CLAMP_NONE, CLAMP_LOW, CLAMP_HIGH = 0, -1, 1
CLAMP_LABELS = {CLAMP_NONE: "none", CLAMP_LOW: "low", CLAMP_HIGH: "high"}
# margins this close to zero at both bracket ends count as an exact tie
ZERO_BAND = 1e-12

CSV_COLUMNS = ["pi", "sStar", "rho", "piRec1", "piRec0", "effort", "pS",
               "jPlus", "jMinus", "piPlus", "piMinus", "clamped"]


class SolverError(RuntimeError):
    """Non-finite margins or other numerical breakdown."""


class ConvergenceError(SolverError):
    def __init__(self, message, residuals):
        super().__init__(message)
        self.residuals = list(residuals)


@dataclass(frozen=True)
class Grid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ParamError("grid needs at least two points")
        if not np.all(np.diff(pts) > 0):
            raise ParamError("grid must be strictly increasing")
        if not (pts[0] > 0 and pts[-1] < 1):
            raise ParamError("grid endpoints must lie inside (0, 1)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, count: int = 321, lo: float = 0.05, hi: float = 0.95) -> "Grid":
        return cls(np.linspace(lo, hi, count))

    @property
    def count(self) -> int:
        return self.points.size


@dataclass(frozen=True)
class ValueFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.points.shape or not np.all(np.isfinite(v)):
            raise ParamError("value function must be finite on every grid point")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        pts = self.grid.points
        gaps = np.diff(pts)
        h = (pts[-1] - pts[0]) / (pts.size - 1)
        uniform = bool(np.all(np.abs(gaps - h) <= 1e-9 * h))
        object.__setattr__(self, "_step", 1.0 / h if uniform else None)
        object.__setattr__(self, "_slopes", np.diff(v) / gaps)

    def __call__(self, x):
        """Linear interpolation, clamped to the end values outside the grid."""
        if self._step is None:
            return np.interp(x, self.grid.points, self.values)
        pts = self.grid.points
        xc = np.minimum(np.maximum(x, pts[0]), pts[-1])
        # direct bucket index on a uniform grid; rounding at a knot only picks
        # the neighbouring segment, which agrees there to within one ulp
        k = np.minimum(((xc - pts[0]) * self._step).astype(np.intp), pts.size - 2)
        return self.values[k] + (xc - pts[k]) * self._slopes[k]

    def slope(self, x):
        """Derivative of the piecewise-linear interpolant (zero outside the grid)."""
        pts = self.grid.points
        x = np.asarray(x, dtype=float)
        k = np.clip(np.searchsorted(pts, x, side="right") - 1, 0, pts.size - 2)
        sl = (self.values[k + 1] - self.values[k]) / (pts[k + 1] - pts[k])
        return np.where((x < pts[0]) | (x > pts[-1]), 0.0, sl)


@dataclass(frozen=True)
class SolveSettings:
    damping: float = 0.4
    tolerance: float = 1e-6
    max_iterations: int = 10000
    bisection_iterations: int = 80
    bracket_width: float = 6.0
    safe_update: str = "recOnly"

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ParamError("damping must lie in (0, 1]")
        if not self.tolerance > 0:
            raise ParamError("tolerance must be positive")
        if self.max_iterations < 1 or self.bisection_iterations < 1:
            raise ParamError("iteration limits must be positive")
        if self.safe_update not in SAFE_UPDATES:
            raise ParamError(f"safeUpdate must be one of {SAFE_UPDATES}")


def delta_h_arrays(s, pi, V: ValueFunction, params: ModelParams, safe_update="recOnly",
                   branch: Branch | None = None):
    if branch is None:
        fast = _margin_kernel(s, pi, V, params, safe_update)
        if fast is not None:
            return fast
        branch = branch_arrays(pi, s, params, safe_update)
    b = branch
    cont = b.p_s * V(b.pi_plus) + (1 - b.p_s) * V(b.pi_minus)
    return params.phi + params.delta * (cont - V(b.safe_next))


def _margin_kernel(s, pi, V, p: ModelParams, safe_update):
    """Margin only, with the same arithmetic as branch_arrays but fewer temporaries.

    Returns None when any tail is degenerate so the caller takes the general path.
    """
    lam, lam1 = p.lam, 1.0 - p.lam
    s = np.asarray(s, dtype=float)
    pi = np.asarray(pi, dtype=float)
    s_l = s + p.delta_l
    a_h, na_h = upper_lower((s - p.mu1) / p.sigma_h)
    b_h, nb_h = upper_lower((s - p.mu0) / p.sigma_h)
    a_l, na_l = upper_lower((s_l - p.mu1) / p.sigma_l)
    b_l, nb_l = upper_lower((s_l - p.mu0) / p.sigma_l)
    r_h = lam * a_h + lam1 * b_h
    r_l = lam * a_l + lam1 * b_l
    if min(r_h.min(), r_l.min()) < DEGENERATE_TAIL:
        return None
    omp = 1 - pi
    num = pi * r_h
    rec1 = clamp_belief(num / (num + omp * r_l))
    p_h = lam * a_h / r_h
    p_l = lam * a_l / r_l
    e = rec1 * p_h + (1 - rec1) * p_l
    ps = e * e
    lo = np.log(rec1) - np.log1p(-rec1)
    up = clamp_belief(1.0 / (1.0 + np.exp(-(lo + (np.log(p_h) - np.log(p_l))))))
    jm = np.log1p(-e * p_h) - np.log1p(-e * p_l)
    dn = clamp_belief(1.0 / (1.0 + np.exp(-(lo + jm))))
    if safe_update == "recOnly":
        c_h = lam * na_h + lam1 * nb_h
        c_l = lam * na_l + lam1 * nb_l
        if min(c_h.min(), c_l.min()) < DEGENERATE_TAIL:
            return None
        num0 = pi * c_h
        safe = clamp_belief(num0 / (num0 + omp * c_l))
    else:
        safe = clamp_belief(pi)
    cont = ps * V(up) + (1 - ps) * V(dn)
    return p.phi + p.delta * (cont - V(safe))


def delta_h(s: float, pi: float, V: ValueFunction, params: ModelParams,
            safe_update: str = "recOnly") -> float:
    """Risky-minus-safe continuation margin of the high type at signal cutoff s."""
    if not 0 < pi < 1:
        raise ParamError("pi must lie in (0, 1)")
    return float(delta_h_arrays(s, pi, V, params, safe_update))


@dataclass(frozen=True)
class CutoffResult:
    s_star: np.ndarray
    clamp: np.ndarray
    tie: np.ndarray


def bisect_cutoffs(margin: Callable, pi, lo: float, hi: float, iterations: int = 80,
                   lookahead: int = 2) -> CutoffResult:
    """Vectorised sign bisection of margin(s, pi) on [lo, hi] for each pi.

    Points without a sign change are clamped: nonnegative margin at both ends
    gives the lower end (always risky), negative at both ends gives the upper.
    Each pass evaluates the next `lookahead` levels of midpoints in one call
    and then walks them exactly as plain halving would, so the result is
    bit-identical to one-midpoint-at-a-time bisection.
    """
    if lookahead < 1:
        raise ValueError("lookahead must be at least 1")
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    a = np.full(pi.shape, lo)
    b = np.full(pi.shape, hi)
    fa = margin(a, pi)
    fb = margin(b, pi)
    if not (np.all(np.isfinite(fa)) and np.all(np.isfinite(fb))):
        bad = pi[~(np.isfinite(fa) & np.isfinite(fb))]
        raise SolverError(f"non-finite risky-safe margin at pi={bad[0]:.12g}")
    neg_a = fa < -ZERO_BAND
    neg_b = fb < -ZERO_BAND
    clamp = np.where(~neg_a & ~neg_b, CLAMP_LOW, np.where(neg_a & neg_b, CLAMP_HIGH, CLAMP_NONE))
    tie = (np.abs(fa) <= ZERO_BAND) & (np.abs(fb) <= ZERO_BAND)
    pos_a = fa >= 0
    done = 0
    while done < iterations:
        depth = min(lookahead, iterations - done)
        # heap-ordered tree of midpoints: node k has children 2k+1, 2k+2
        lows, highs, mids = [a], [b], []
        for level in range(depth):
            nl, nh = [], []
            for x, y in zip(lows, highs):
                m = 0.5 * (x + y)
                mids.append(m)
                nl += [x, m]
                nh += [m, y]
            lows, highs = nl, nh
        stack = np.stack(mids)
        fm = margin(stack, np.broadcast_to(pi, stack.shape))
        if not np.all(np.isfinite(fm)):
            bad = np.broadcast_to(pi, stack.shape)[~np.isfinite(fm)]
            raise SolverError(f"non-finite risky-safe margin at pi={bad[0]:.12g}")
        node = np.zeros(pi.shape, dtype=np.int64)
        cols = np.arange(pi.size)
        a_new, b_new = a, b
        for level in range(depth):
            m = stack[node, cols]
            same = (fm[node, cols] >= 0) == pos_a
            a_new = np.where(same, m, a_new)
            b_new = np.where(same, b_new, m)
            node = 2 * node + np.where(same, 2, 1)
        done += depth
        if np.array_equal(a_new, a) and np.array_equal(b_new, b):
            break  # bracket at floating-point resolution; further halvings are no-ops
        a, b = a_new, b_new
    s = 0.5 * (a + b)
    s = np.where(clamp == CLAMP_LOW, lo, np.where(clamp == CLAMP_HIGH, hi, s))
    return CutoffResult(s, clamp, tie)


def _grid_cutoffs(V: ValueFunction, params: ModelParams, st: SolveSettings, pi=None):
    pi = V.grid.points if pi is None else pi
    lo, hi = params.bracket(st.bracket_width)
    margin = lambda s, p: delta_h_arrays(s, p, V, params, st.safe_update)
    return bisect_cutoffs(margin, pi, lo, hi, st.bisection_iterations)


def solve_cutoff(pi: float, V: ValueFunction, params: ModelParams,
                 st: SolveSettings = SolveSettings()) -> tuple[float, str, bool]:
    """High-type cutoff at belief pi; returns (s*, clamp label, zero-everywhere flag)."""
    if not 0 < pi < 1:
        raise ParamError("pi must lie in (0, 1)")
    r = _grid_cutoffs(V, params, st, np.array([pi]))
    return float(r.s_star[0]), CLAMP_LABELS[int(r.clamp[0])], bool(r.tie[0])


def bellman_update(V: ValueFunction, params: ModelParams, st: SolveSettings,
                   cutoffs=None):
    """Undamped Bellman image of V; cutoffs are re-optimised against V unless given."""
    pts = V.grid.points
    if cutoffs is None:
        cutoffs = _grid_cutoffs(V, params, st).s_star
    b = branch_arrays(pts, cutoffs, params, st.safe_update)
    risky = b.p_s * V(b.pi_plus) + (1 - b.p_s) * V(b.pi_minus)
    fee = params.phi * b.r_h if params.phi > 0 else 0.0
    return params.flow(pts) + fee + params.delta * (b.r_h * risky + b.c_h * V(b.safe_next))


@dataclass(frozen=True)
class EquilibriumSolution:
    params: ModelParams
    settings: SolveSettings
    value: ValueFunction
    cutoffs: np.ndarray
    clamp: np.ndarray
    tie: np.ndarray
    branch: Branch
    iterations: int
    residual: float
    residuals: tuple = field(repr=False, default=())

    @property
    def grid(self) -> Grid:
        return self.value.grid

    @property
    def rho(self) -> np.ndarray:
        return self.branch.r_h

    @property
    def clamped_low(self) -> np.ndarray:
        return self.clamp == CLAMP_LOW

    @property
    def clamped_high(self) -> np.ndarray:
        return self.clamp == CLAMP_HIGH

    def cutoff_at(self, pi):
        """Cutoff at off-grid beliefs by linear interpolation (clamped at the ends)."""
        return np.interp(pi, self.grid.points, self.cutoffs)

    def public_branch(self, pi) -> Branch:
        return branch_arrays(pi, self.cutoff_at(pi), self.params, self.settings.safe_update)

    def table(self) -> dict:
        b = self.branch
        return {
            "pi": self.grid.points, "sStar": self.cutoffs, "rho": b.r_h,
            "piRec1": b.pi_rec1, "piRec0": b.pi_rec0, "effort": b.effort, "pS": b.p_s,
            "jPlus": b.j_plus, "jMinus": b.j_minus, "piPlus": b.pi_plus,
            "piMinus": b.pi_minus,
            "clamped": np.array([CLAMP_LABELS[int(c)] for c in self.clamp]),
        }

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.params.to_json().encode())
        h.update(repr(self.settings).encode())
        for arr in (self.grid.points, self.value.values, self.cutoffs, self.clamp.astype(np.int64)):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def to_csv(self, path) -> None:
        write_table(path, self.table(), CSV_COLUMNS)


def fmt(x) -> str:
    if isinstance(x, (str, np.str_)):
        return str(x)
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def write_table(path, table: dict, columns) -> None:
    n = len(table[columns[0]]) if columns else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for i in range(n):
            w.writerow([fmt(table[c][i]) for c in columns])


def read_table(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SolverError(f"{path}: empty file")
    head, body = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(head):
        vals = [r[j] for r in body]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = np.array(vals)
    return cols


def value_iteration(params: ModelParams, grid: Grid | None = None,
                    st: SolveSettings = SolveSettings(), initial=None) -> EquilibriumSolution:
    """Damped value iteration with cutoffs re-solved against the current V each sweep."""
    grid = grid or Grid.uniform()
    pts = grid.points
    if initial is None:
        v = params.flow(pts) / (1 - params.delta)
    else:
        v = np.array(initial, dtype=float)
    residuals = []
    eta = st.damping
    for it in range(1, st.max_iterations + 1):
        V = ValueFunction(grid, v)
        raw = bellman_update(V, params, st)
        # increment form: a fixed point of the raw map is reproduced exactly
        new = v + eta * (raw - v)
        if not np.all(np.isfinite(new)):
            raise SolverError(f"value iteration produced non-finite values at sweep {it}")
        r = float(np.max(np.abs(new - v)))
        residuals.append(r)
        v = new
        if r < st.tolerance:
            break
    else:
        raise ConvergenceError(
            f"value iteration did not converge in {st.max_iterations} sweeps "
            f"(last residual {residuals[-1]:.3e})", residuals)
    V = ValueFunction(grid, v)
    cut = _grid_cutoffs(V, params, st)
    b = branch_arrays(pts, cut.s_star, params, st.safe_update)
    return EquilibriumSolution(params, st, V, cut.s_star, cut.clamp, cut.tie, b, it,
                               residuals[-1], tuple(residuals))


def experimentation_rate(sol: EquilibriumSolution):
    return list(zip(sol.grid.points.tolist(), sol.rho.tolist()))


def margin_scan(sol: EquilibriumSolution, points: int = 2000, pi=None):
    """Margin on a dense cutoff scan of the bracket; rows are beliefs, columns cutoffs."""
    p = sol.params
    lo, hi = p.bracket(sol.settings.bracket_width)
    s = np.linspace(lo, hi, points)
    pi = sol.grid.points if pi is None else np.atleast_1d(pi)
    return s, delta_h_arrays(s[None, :], pi[:, None], sol.value, p, sol.settings.safe_update)


def sign_changes(rows) -> np.ndarray:
    """Strict sign changes along each row (exact zeros are skipped)."""
    out = []
    for row in np.atleast_2d(rows):
        sg = np.sign(row[row != 0])
        out.append(int(np.count_nonzero(sg[1:] != sg[:-1])))
    return np.array(out)


@dataclass
class SweepStep:
    before: float
    after: float
    moved: np.ndarray
    violations: int
    interior: int
    max_violation: float


@dataclass
class SweepReport:
    axis: str
    direction: int
    values: list
    steps: list
    solutions: list = field(repr=False, default_factory=list)

    @property
    def violations(self) -> int:
        return sum(s.violations for s in self.steps)


SWEEP_AXES = {"sigmaH": ("sigma_h", +1), "lambda": ("lam", -1), "delta": ("delta", +1)}


def comparative_sweep(base: ModelParams, axis: str, values, grid: Grid | None = None,
                      st: SolveSettings = SolveSettings(), threads: int = 1,
                      tol: float = 1e-9) -> SweepReport:
    """Re-solve along one primitive and check the direction cutoffs move.

    The expected direction is up in sigmaH and delta and down in lambda; a
    violation is an interior point (unclamped at both values) that moved the
    other way by more than tol.
    """
    if axis not in SWEEP_AXES:
        raise ParamError(f"sweep axis must be one of {sorted(SWEEP_AXES)}")
    values = [float(v) for v in values]
    if len(values) < 2:
        raise ParamError("a sweep needs at least two values")
    attr, direction = SWEEP_AXES[axis]
    grid = grid or Grid.uniform()
    plist = [replace(base, **{attr: v}) for v in values]

    def run(p):
        try:
            return value_iteration(p, grid, st)
        except SolverError as e:
            raise SolverError(f"sweep {axis}={getattr(p, attr)!r} failed: {e}") from e

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            sols = list(ex.map(run, plist))
    else:
        sols = [run(p) for p in plist]
    steps = []
    for v0, v1, s0, s1 in zip(values, values[1:], sols, sols[1:]):
        # direction is per unit increase of the parameter
        sgn = direction * (1 if v1 > v0 else -1)
        d = sgn * (s1.cutoffs - s0.cutoffs)
        interior = (s0.clamp == CLAMP_NONE) & (s1.clamp == CLAMP_NONE)
        bad = interior & (d < -tol)
        steps.append(SweepStep(v0, v1, d >= -tol, int(bad.sum()), int(interior.sum()),
                               float(max(0.0, -d[interior].min())) if interior.any() else 0.0))
    return SweepReport(axis, direction, values, steps, sols)


def monotonicity_violations(values, clamp=None, increasing=True, tol=1e-9):
    """Adjacent pairs (both unclamped) moving against the stated direction by more than tol."""
    v = np.asarray(values, dtype=float)
    d = np.diff(v) if increasing else -np.diff(v)
    ok = np.ones(d.shape, dtype=bool) if clamp is None else (clamp[1:] == 0) & (clamp[:-1] == 0)
    return int(np.count_nonzero(ok & (d < -tol)))


def diagnosticity_at_cutoff(sol: EquilibriumSolution):
    """Per grid point: (holds, slack) with slack = J+ + J- (failures dominate when <= 0)."""
    slack = diagnosticity_slack(sol.branch.j_plus, sol.branch.j_minus)
    return slack <= 0, slack


def binary_diagnosticity(bp) -> tuple[bool, float]:
    """Same test for the binary-signal benchmark, through log L+ + log L-."""
    slack = float(np.log(bp.q_h / bp.q_l) + np.log((1 - bp.q_h) / (1 - bp.q_l)))
    return slack <= 0, slack


def contraction_check(V1: ValueFunction, V2: ValueFunction, params: ModelParams,
                      st: SolveSettings = SolveSettings(), cutoffs=None) -> tuple[float, float]:
    """(||T V1 - T V2||, delta ||V1 - V2||) for one undamped sweep at a common policy."""
    if cutoffs is None:
        cutoffs = _grid_cutoffs(V1, params, st).s_star
    t1 = bellman_update(V1, params, st, cutoffs)
    t2 = bellman_update(V2, params, st, cutoffs)
    return float(np.max(np.abs(t1 - t2))), params.delta * float(np.max(np.abs(V1.values - V2.values)))

"""Leave-one-out Beta-Bernoulli reputation scores and regression-ready panel tables."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import groupby
from pathlib import Path

import numpy as np

from .solver import write_table

P1_COLUMNS = ["expert", "t", "repLag", "a"]
P2_COLUMNS = ["expert", "t", "repLag", "y"]
P3_COLUMNS = ["expert", "t", "repLag", "dSuccess", "dFailure", "failXrep", "dRep"]


class PanelError(ValueError):
    """Malformed or misaligned panel input."""


@dataclass(frozen=True)
class PanelRecord:
    expert: int
    t: int
    a: int
    y: int
    true_pi: float | None = None

    def __post_init__(self):
        if self.a not in (0, 1) or self.y not in (0, 1):
            raise PanelError(f"expert {self.expert} t={self.t}: a and y must be 0/1")
        if self.a == 0 and self.y == 1:
            raise PanelError(f"expert {self.expert} t={self.t}: success without a risky action")


def panel_from_ensemble(ens) -> list[PanelRecord]:
    """One expert per replication, periods in order."""
    R, T = ens.pi.shape
    return [PanelRecord(r, t, int(ens.a[r, t]), int(ens.y[r, t]), float(ens.pi[r, t]))
            for r in range(R) for t in range(T)]


def _check_sorted(panel):
    seen = set()
    prev = None
    for rec in panel:
        if prev is not None and rec.expert == prev.expert:
            if rec.t <= prev.t:
                raise PanelError(f"expert {rec.expert}: periods not strictly increasing at t={rec.t}")
        elif rec.expert in seen:
            raise PanelError(f"expert {rec.expert}: records are not contiguous")
        seen.add(rec.expert)
        prev = rec


def rep_beta_bernoulli(panel, alpha0: float = 1.0, beta0: float = 1.0,
                       risky_only: bool = True, terminal: bool = False) -> dict:
    """Posterior-mean success rate per (expert, t) using only periods before t.

    With terminal=True each expert also gets a score one period past their
    last record, which folds in every observed outcome.
    """
    if not (alpha0 > 0 and beta0 > 0):
        raise PanelError("prior counts must be positive")
    panel = list(panel)
    _check_sorted(panel)
    scores = {}
    for expert, recs in groupby(panel, key=lambda r: r.expert):
        succ = n = 0
        last = None
        for rec in recs:
            scores[(expert, rec.t)] = (alpha0 + succ) / (alpha0 + beta0 + n)
            if rec.a == 1 or not risky_only:
                n += 1
                succ += rec.y
            last = rec.t
        if terminal and last is not None:
            scores[(expert, last + 1)] = (alpha0 + succ) / (alpha0 + beta0 + n)
    return scores


def regression_tables(panel, scores: dict) -> dict:
    """P1 (a on lagged score), P2 (y on lagged score, risky periods) and P3 tables.

    repLag is the score one period earlier, so rows start at each expert's
    second period. dRep in P3 is the revision produced by the period's own
    outcome: the next period's score minus this period's (scores exclude the
    current outcome by construction).
    """
    panel = list(panel)
    _check_sorted(panel)
    missing = [(r.expert, r.t) for r in panel if (r.expert, r.t) not in scores]
    if missing:
        shown = ", ".join(f"({e},{t})" for e, t in missing[:10])
        raise PanelError(f"{len(missing)} panel keys without a score: {shown}")
    p1 = {c: [] for c in P1_COLUMNS}
    p2 = {c: [] for c in P2_COLUMNS}
    p3 = {c: [] for c in P3_COLUMNS}

    def add(tab, **row):
        for k, v in row.items():
            tab[k].append(v)

    for expert, recs in groupby(panel, key=lambda r: r.expert):
        recs = list(recs)
        for prev, rec in zip(recs, recs[1:]):
            lag = scores[(expert, prev.t)]
            add(p1, expert=expert, t=rec.t, repLag=lag, a=rec.a)
            if rec.a != 1:
                continue
            add(p2, expert=expert, t=rec.t, repLag=lag, y=rec.y)
            after = scores.get((expert, rec.t + 1))
            if after is None:
                continue
            fail = 1 - rec.y
            add(p3, expert=expert, t=rec.t, repLag=lag, dSuccess=rec.y, dFailure=fail,
                failXrep=fail * lag, dRep=after - scores[(expert, rec.t)])
    conv = lambda tab: {k: np.array(v, dtype=float if k in ("repLag", "failXrep", "dRep") else np.int64)
                        for k, v in tab.items()}
    return {"p1": conv(p1), "p2": conv(p2), "p3": conv(p3)}


def export_regression_tables(ens, scores: dict | None = None, out_dir=None,
                             alpha0: float = 1.0, beta0: float = 1.0, risky_only: bool = True):
    """Build (and optionally write p1.csv, p2.csv, p3.csv) from a simulated ensemble."""
    panel = panel_from_ensemble(ens)
    if scores is None:
        scores = rep_beta_bernoulli(panel, alpha0, beta0, risky_only, terminal=True)
    tabs = regression_tables(panel, scores)
    if out_dir is not None:
        out = Path(out_dir)
        for name, cols in (("p1", P1_COLUMNS), ("p2", P2_COLUMNS), ("p3", P3_COLUMNS)):
            write_table(out / f"{name}.csv", tabs[name], cols)
    return tabs


def sign_diagnostics(ens) -> dict:
    """Correlations of actions with the lagged public belief and of risky outcomes with it."""
    pi_lag = ens.pi[:, :-1].ravel()
    a = ens.a[:, 1:].ravel().astype(float)
    risky = ens.a.ravel()
    y = ens.y.ravel()[risky].astype(float)
    pi_r = ens.pi.ravel()[risky]

    def corr(x, z):
        if x.size < 2 or np.std(x) == 0 or np.std(z) == 0:
            return float("nan")
        return float(np.corrcoef(x, z)[0, 1])

    return {"corr_a_lagPi": corr(a, pi_lag), "corr_y_pi_risky": corr(y, pi_r)}

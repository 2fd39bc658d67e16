"""The estimated-FDP view: ledger, trajectory verification, and a greedy rule.

A rule whose running sum of test levels never exceeds alpha times the
(floored) rejection count inherits mFDR control, and FDR control when it is
also monotone with independent p-values. The verifier checks that premise
pointwise on any trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeInput
from .types import TOL


@dataclass(frozen=True)
class FdpLedger:
    """Running sum of test levels and rejection count; fdp_hat = sum/(R v 1)."""

    cumulative_alpha: float = 0.0
    r_count: int = 0

    @property
    def fdp_hat(self) -> float:
        return self.cumulative_alpha / max(self.r_count, 1)


def update_fdp_hat(ledger: FdpLedger, alpha_t: float, rejected: bool) -> FdpLedger:
    if alpha_t < 0:
        raise NegativeInput(f"alpha_t must be >= 0, got {alpha_t}")
    return FdpLedger(
        cumulative_alpha=ledger.cumulative_alpha + alpha_t,
        r_count=ledger.r_count + (1 if rejected else 0),
    )


@dataclass(frozen=True)
class VerifyReport:
    ok: bool
    max_fdp_hat: float
    first_violation: int | None
    n_steps: int

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "max_fdp_hat": self.max_fdp_hat,
            "first_violation": self.first_violation,
            "n_steps": self.n_steps,
        }


def verify_arrays(alpha_seq, rejected_seq, alpha: float, t_seq=None) -> VerifyReport:
    """Check sup_t fdp_hat(t) <= alpha on per-step level/decision vectors.

    Abstained steps should carry alpha 0 / rejected 0 (as the engine logs
    them). ``t_seq`` supplies wall step indices for violation reporting.
    """
    a = np.asarray(alpha_seq, dtype=np.float64)
    r = np.asarray(rejected_seq, dtype=np.float64)
    if a.size == 0:
        return VerifyReport(ok=True, max_fdp_hat=0.0, first_violation=None, n_steps=0)
    fdp = np.cumsum(a) / np.maximum(np.cumsum(r), 1.0)
    bad = np.flatnonzero(fdp > alpha + TOL)
    first = None
    if bad.size:
        first = int(t_seq[bad[0]]) if t_seq is not None else int(bad[0] + 1)
    return VerifyReport(
        ok=bad.size == 0,
        max_fdp_hat=float(fdp.max()),
        first_violation=first,
        n_steps=int(a.size),
    )


def verify_rule(trajectory, alpha: float) -> VerifyReport:
    """verify_arrays over an iterable of DecisionRecords."""
    recs = list(trajectory)
    return verify_arrays(
        [r.alpha_t for r in recs],
        [1.0 if r.rejected else 0.0 for r in recs],
        alpha,
        t_seq=[r.t for r in recs],
    )


def greedy_fdp_rule(
    r_count_prev: int, cum_alpha_prev: float, t: int, alpha: float, gamma
) -> float:
    """Largest gamma-shaped level that keeps the running estimate below alpha.

    alpha_t = max(0, alpha*(R(t-1) v 1) - sum_{j<t} alpha_j) * gamma_t; passes
    verify_rule by construction since gamma_t < 1.
    """
    slack = alpha * max(r_count_prev, 1) - cum_alpha_prev
    return max(0.0, slack) * gamma[t]


def run_greedy(pvalues, alpha: float, gamma) -> tuple[np.ndarray, np.ndarray]:
    """Run the greedy rule on a p-value sequence; returns (levels, decisions)."""
    cum = 0.0
    r = 0
    levels = np.empty(len(pvalues))
    rej = np.zeros(len(pvalues), dtype=bool)
    for i, p in enumerate(pvalues):
        a = greedy_fdp_rule(r, cum, i + 1, alpha, gamma)
        levels[i] = a
        if p <= a:
            rej[i] = True
            r += 1
        cum += a
    return levels, rej

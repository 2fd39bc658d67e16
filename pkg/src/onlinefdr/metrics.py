"""Error and power metrics, per trajectory and Monte Carlo aggregated.

Conventions: dotted fractions a/(b v 1) everywhere a count can be zero; the
FDR/sFDR/power statistics are means of per-trial ratios with plain standard
errors, the marginal FDR is a ratio of means with a delta-method SE. The
decayed (mem-) series use the metric's own decay factor, which need not match
any engine's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import GridMismatch, InvalidParams


def fdp(V: float, R: float) -> float:
    """Dotted fraction V/(R v 1)."""
    return V / max(R, 1)


def decayed_cumsum(x, delta: float) -> np.ndarray:
    """y_t = delta*y_{t-1} + x_t (the decaying counters' recursion)."""
    x = np.asarray(x, dtype=np.float64)
    if delta == 1.0:
        return np.cumsum(x)
    return lfilter([1.0], [1.0, -delta], x)


def default_checkpoints(T: int) -> np.ndarray:
    """Every step up to 2000, log-spaced (deduplicated) beyond."""
    if T <= 2000:
        return np.arange(1, T + 1)
    tail = np.unique(np.geomspace(2001, T, num=200).astype(np.int64))
    return np.concatenate((np.arange(1, 2001), tail))


@dataclass
class MemPowerState:
    """Running decayed power counters U (rejected non-nulls) and D (non-nulls)."""

    u: float = 0.0
    d: float = 0.0

    @property
    def mem_power(self) -> float:
        return self.u / max(self.d, 1.0)


def mem_power_update(
    state: MemPowerState, rejected: bool, truth: bool, delta: float
) -> MemPowerState:
    """U = delta*U + R*1{non-null}; D = delta*D + 1{non-null}."""
    non_null = not truth
    return MemPowerState(
        u=delta * state.u + (1.0 if (rejected and non_null) else 0.0),
        d=delta * state.d + (1.0 if non_null else 0.0),
    )


@dataclass
class TrajectoryMetrics:
    """Per-checkpoint series for one labeled run.

    All arrays share the checkpoint grid. mem_num/mem_den are the decayed
    (penalty-weighted) false-rejection/rejection counters; power_num/_den and
    mem_power_num/_den the corresponding power pieces; wealth is optional.
    """

    checkpoints: np.ndarray
    rejections: np.ndarray
    false_rejections: np.ndarray
    fdp: np.ndarray
    mem_num: np.ndarray
    mem_den: np.ndarray
    mem_fdp: np.ndarray
    power_num: np.ndarray
    power_den: np.ndarray
    mem_power_num: np.ndarray
    mem_power_den: np.ndarray
    wealth: np.ndarray | None = None

    @classmethod
    def from_run(
        cls,
        rejected,
        is_null,
        delta: float = 1.0,
        u=None,
        wealth=None,
        checkpoints=None,
    ) -> "TrajectoryMetrics":
        rejected = np.asarray(rejected, dtype=np.float64)
        is_null = np.asarray(is_null, dtype=np.float64)
        T = rejected.size
        if is_null.size != T:
            raise InvalidParams("rejected and is_null must have equal length")
        uu = np.ones(T) if u is None else np.asarray(u, dtype=np.float64)
        cp = default_checkpoints(T) if checkpoints is None else np.asarray(checkpoints)
        ix = cp - 1

        r_cum = np.cumsum(rejected)
        v_cum = np.cumsum(rejected * is_null)
        mem_den = decayed_cumsum(uu * rejected, delta)
        mem_num = decayed_cumsum(uu * rejected * is_null, delta)
        non_null = 1.0 - is_null
        p_num = np.cumsum(rejected * non_null)
        p_den = np.cumsum(non_null)
        mp_num = decayed_cumsum(rejected * non_null, delta)
        mp_den = decayed_cumsum(non_null, delta)

        return cls(
            checkpoints=cp,
            rejections=r_cum[ix],
            false_rejections=v_cum[ix],
            fdp=v_cum[ix] / np.maximum(r_cum[ix], 1.0),
            mem_num=mem_num[ix],
            mem_den=mem_den[ix],
            mem_fdp=mem_num[ix] / np.maximum(mem_den[ix], 1.0),
            power_num=p_num[ix],
            power_den=p_den[ix],
            mem_power_num=mp_num[ix],
            mem_power_den=mp_den[ix],
            wealth=None if wealth is None else np.asarray(wealth, dtype=np.float64)[ix],
        )

    @property
    def power(self) -> np.ndarray:
        return self.power_num / np.maximum(self.power_den, 1.0)

    @property
    def mem_power(self) -> np.ndarray:
        return self.mem_power_num / np.maximum(self.mem_power_den, 1.0)


def _mean_se(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = rows.shape[0]
    mean = rows.mean(axis=0)
    se = rows.std(axis=0, ddof=1) / np.sqrt(n)
    return mean, se


@dataclass
class TrialReport:
    """Monte Carlo aggregates over trials at shared checkpoints."""

    n_trials: int
    eta: float
    checkpoints: np.ndarray
    fdr: np.ndarray
    fdr_se: np.ndarray
    sfdr: np.ndarray
    sfdr_se: np.ndarray
    mfdr: np.ndarray
    mfdr_se: np.ndarray
    power: np.ndarray
    power_se: np.ndarray
    mem_fdr: np.ndarray
    mem_fdr_se: np.ndarray
    mem_power: np.ndarray
    mem_power_se: np.ndarray
    wealth: np.ndarray | None = None
    wealth_se: np.ndarray | None = None

    _STATS = ("fdr", "sfdr", "mfdr", "power", "mem_fdr", "mem_power", "wealth")

    def rows(self, name: str = "") -> list[dict]:
        """One dict per checkpoint per statistic (the report.csv layout)."""
        out = []
        for stat in self._STATS:
            mean = getattr(self, stat)
            if mean is None:
                continue
            se = getattr(self, stat + "_se")
            for i, t in enumerate(self.checkpoints):
                out.append(
                    {
                        "series": name,
                        "checkpoint": int(t),
                        "stat": stat,
                        "mean": float(mean[i]),
                        "se": float(se[i]),
                        "n_trials": self.n_trials,
                    }
                )
        return out

    def summary(self) -> dict:
        """Final-checkpoint values (the report.json layout)."""
        out = {"n_trials": self.n_trials, "eta": self.eta, "T": int(self.checkpoints[-1])}
        for stat in self._STATS:
            mean = getattr(self, stat)
            if mean is None:
                continue
            se = getattr(self, stat + "_se")
            out[stat] = float(mean[-1])
            out[stat + "_se"] = float(se[-1])
        return out

    def at(self, T: int, stat: str) -> tuple[float, float]:
        """(mean, se) of a statistic at checkpoint T."""
        ix = np.flatnonzero(self.checkpoints == T)
        if ix.size == 0:
            raise GridMismatch(f"checkpoint {T} not on the grid")
        return float(getattr(self, stat)[ix[0]]), float(getattr(self, stat + "_se")[ix[0]])


def aggregate(trials: list[TrajectoryMetrics], eta: float = 1.0) -> TrialReport:
    """Aggregate per-trial trajectories; grids must match exactly.

    FDR/sFDR/power/mem-* are means of per-trial ratios; mFDR_eta is
    mean(V)/(mean(R)+eta) with a delta-method SE.
    """
    if len(trials) < 2:
        raise InvalidParams("aggregate needs at least 2 trials")
    cp = trials[0].checkpoints
    for tm in trials[1:]:
        if tm.checkpoints.shape != cp.shape or np.any(tm.checkpoints != cp):
            raise GridMismatch("trials have different checkpoint grids")

    n = len(trials)
    V = np.vstack([tm.false_rejections for tm in trials])
    R = np.vstack([tm.rejections for tm in trials])
    fdr, fdr_se = _mean_se(V / np.maximum(R, 1.0))
    sfdr, sfdr_se = _mean_se(V / (R + eta))
    power, power_se = _mean_se(np.vstack([tm.power for tm in trials]))
    mem_fdr, mem_fdr_se = _mean_se(np.vstack([tm.mem_fdp for tm in trials]))
    mem_power, mem_power_se = _mean_se(np.vstack([tm.mem_power for tm in trials]))

    vbar = V.mean(axis=0)
    rbar = R.mean(axis=0)
    denom = rbar + eta
    g = vbar / denom
    var_v = V.var(axis=0, ddof=1)
    var_r = R.var(axis=0, ddof=1)
    cov = ((V - vbar) * (R - rbar)).sum(axis=0) / (n - 1)
    mfdr_var = (var_v - 2.0 * g * cov + g * g * var_r) / (n * denom * denom)
    mfdr_se = np.sqrt(np.maximum(mfdr_var, 0.0))

    wealth = wealth_se = None
    if all(tm.wealth is not None for tm in trials):
        wealth, wealth_se = _mean_se(np.vstack([tm.wealth for tm in trials]))

    return TrialReport(
        n_trials=n,
        eta=eta,
        checkpoints=cp.copy(),
        fdr=fdr,
        fdr_se=fdr_se,
        sfdr=sfdr,
        sfdr_se=sfdr_se,
        mfdr=g,
        mfdr_se=mfdr_se,
        power=power,
        power_se=power_se,
        mem_fdr=mem_fdr,
        mem_fdr_se=mem_fdr_se,
        mem_power=mem_power,
        mem_power_se=mem_power_se,
        wealth=wealth,
        wealth_se=wealth_se,
    )

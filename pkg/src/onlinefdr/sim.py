"""Data generators and Monte Carlo experiment suites.

Gaussian testing streams: Z_j ~ N(mu_j, 1) with mu_j = 0 under the null and
mu_j ~ N(0, sigma^2) (default sigma^2 = 2 log T) under the alternative;
one-sided p = Phi(-Z), two-sided p = 2*Phi(-|Z|) clamped to [0, 1]. Null
p-values are exactly uniform; uniformity is self-tested in the suite.

Seed derivation (documented contract): every grid point uses
point_seed = suite.seed + 1000003 * point_index, and trial k within a point
draws its stream from default_rng(point_seed XOR k). Trials are independent
work units and may run in any order.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import _kernels
from .engine import Stream
from .errors import ConfigError, InvalidParams
from .fdphat import VerifyReport, verify_arrays
from .metrics import TrajectoryMetrics, TrialReport, aggregate
from .policies import GammaSequence, LordPP, Policy, PolicySpec, alpha_schedule
from .types import EngineConfig, fresh_state
from .weights import OracleWeights, UnitWeights, WeightStream, build_weights


@dataclass(frozen=True)
class GaussianScenario:
    """One labeled stream blueprint. ``pi1`` is piecewise-constant:
    ((start_t, value), ...) with 1-based ascending start times, first at 1."""

    T: int
    pi1: tuple[tuple[int, float], ...]
    sigma2: float | None = None
    sided: str = "two"
    seed: int = 0

    def __post_init__(self):
        if self.T < 1:
            raise InvalidParams("T must be >= 1")
        if not self.pi1 or self.pi1[0][0] != 1:
            raise InvalidParams("pi1 schedule must start at t=1")
        starts = [s for s, _ in self.pi1]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise InvalidParams("pi1 schedule start times must be increasing")
        if any(not (0.0 <= v <= 1.0) for _, v in self.pi1):
            raise InvalidParams("pi1 values must lie in [0, 1]")
        if self.sided not in ("one", "two"):
            raise InvalidParams(f"sided must be 'one' or 'two', got {self.sided!r}")
        if self.sigma2 is not None and self.sigma2 <= 0:
            raise InvalidParams("sigma2 must be > 0")

    @classmethod
    def constant(cls, T: int, pi1: float, **kw) -> "GaussianScenario":
        return cls(T=T, pi1=((1, pi1),), **kw)

    @property
    def sigma2_value(self) -> float:
        return self.sigma2 if self.sigma2 is not None else 2.0 * np.log(self.T)

    def pi1_array(self) -> np.ndarray:
        out = np.empty(self.T)
        starts = [s for s, _ in self.pi1] + [self.T + 1]
        for (s, v), e in zip(self.pi1, starts[1:]):
            out[s - 1 : e - 1] = v
        return out


def generate_stream(scenario: GaussianScenario) -> tuple[np.ndarray, np.ndarray]:
    """Labeled p-value stream: returns (pvalues, is_null) arrays.

    Deterministic given the scenario seed (one default_rng, fixed draw order).
    """
    rng = np.random.default_rng(scenario.seed)
    non_null = rng.random(scenario.T) < scenario.pi1_array()
    mu = np.zeros(scenario.T)
    k = int(non_null.sum())
    if k:
        mu[non_null] = rng.normal(0.0, np.sqrt(scenario.sigma2_value), size=k)
    z = mu + rng.standard_normal(scenario.T)
    if scenario.sided == "one":
        p = ndtr(-z)
    else:
        p = np.clip(2.0 * ndtr(-np.abs(z)), 0.0, 1.0)
    return p, ~non_null


# -- single-stream runner -------------------------------------------------------

_STATIC_WEIGHT_KINDS = ("unit", "constant", "file", "oracle")


def run_stream(
    p, is_null, cfg: EngineConfig, policy: Policy, weights: WeightStream | None = None
) -> dict:
    """Run one labeled stream, fast path when the policy/weights allow it.

    Returns the kernel's per-step array dict (alpha, psi, b, rejected, wealth,
    r_dec, v_dec, abstained, resets, cum_alpha). Kernel-supported policies
    with static weights use the compiled/pure kernel; anything else falls back
    to the reference engine loop (identical semantics, slower).
    """
    weights = weights if weights is not None else UnitWeights()
    p = np.asarray(p, dtype=np.float64)
    T = p.size
    labels = (
        np.zeros(T, dtype=np.int8)
        if is_null is None
        else np.asarray(is_null).astype(np.int8)
    )
    if policy.kernel_family is not None and weights.kind in _STATIC_WEIGHT_KINDS:
        w_arr, u_arr = weights.arrays(T, is_null)
        gamma = getattr(policy, "gamma", None)
        gamma_tab = gamma.table(T) if gamma is not None else np.zeros(T + 1)
        return _kernels.run_lord_family(
            p,
            labels,
            w_arr,
            u_arr,
            gamma_tab,
            cfg.alpha,
            cfg.w0,
            cfg.delta,
            policy.kernel_family,
            policy.kernel_reward_mode,
            cfg.abstinence_enabled,
            cfg.eps_wealth,
            cfg.eps_reject,
            cfg.reset_on_raw_count,
            cfg.abstain_reset_patience,
        )
    return _engine_run(p, labels, cfg, policy, weights)


def _engine_run(p, labels, cfg, policy, weights) -> dict:
    T = p.size
    out = {
        "alpha": np.zeros(T),
        "psi": np.zeros(T),
        "b": np.zeros(T),
        "rejected": np.zeros(T, dtype=np.uint8),
        "wealth": np.empty(T),
        "r_dec": np.empty(T),
        "v_dec": np.empty(T),
        "abstained": np.zeros(T, dtype=np.uint8),
        "resets": np.zeros(T, dtype=np.uint8),
        "cum_alpha": np.empty(T),
    }
    stream = Stream(cfg, policy, weights)
    from .types import Observation

    cum = 0.0
    n_resets = 0
    for t in range(T):
        rec = stream.submit(Observation.test(float(p[t])), bool(labels[t]))
        if not rec.abstained:
            cum += rec.alpha_t
        out["alpha"][t] = rec.alpha_t
        out["psi"][t] = rec.psi_t
        out["b"][t] = rec.b_t
        out["rejected"][t] = rec.rejected
        out["wealth"][t] = rec.wealth_after
        out["r_dec"][t] = rec.r_decay_after
        out["v_dec"][t] = rec.v_decay_after if rec.v_decay_after is not None else 0.0
        out["abstained"][t] = rec.abstained
        out["cum_alpha"][t] = cum
        if len(stream.reset_times) > n_resets:
            out["resets"][t] = 1
            cum = 0.0
            n_resets += 1
    return out


# -- suites ---------------------------------------------------------------------


@dataclass
class SuiteEntry:
    """One algorithm under comparison: engine config + policy + weights."""

    name: str
    engine: EngineConfig
    policy: Policy
    weights: WeightStream = field(default_factory=UnitWeights)


@dataclass
class ScenarioSuite:
    """A family of scenarios and the algorithms to run on them.

    kind: 'pi1_sweep' (grid of constant pi1), 'piggyback' (pi1_high until
    switch_at, pi1_low after), or 'alpha_death' (constant small pi1).
    delta_metric is the decay used by the *metrics* (mem-FDR/mem-power),
    independent of any engine's delta.
    """

    kind: str
    T: int
    n_trials: int
    entries: list[SuiteEntry]
    grid: tuple[float, ...] = ()
    pi1_high: float = 0.9
    pi1_low: float = 0.01
    switch_at: int = 1000
    pi1: float = 0.01
    sided: str = "two"
    sigma2: float | None = None
    seed: int = 0
    eta: float = 1.0
    delta_metric: float = 1.0

    def __post_init__(self):
        if self.kind not in ("pi1_sweep", "piggyback", "alpha_death"):
            raise ConfigError(f"suite.kind: unknown kind {self.kind!r}")
        if self.kind == "pi1_sweep" and not self.grid:
            raise ConfigError("suite.grid: pi1_sweep needs a nonempty grid")
        if self.kind == "piggyback" and not (1 <= self.switch_at <= self.T):
            raise ConfigError("suite.switch_at: must lie in [1, T]")
        if self.n_trials < 2:
            raise ConfigError("suite.n_trials: need at least 2 trials")
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ConfigError("entries: names must be unique")

    def points(self) -> list:
        if self.kind == "pi1_sweep":
            return list(self.grid)
        return [self.pi1_high if self.kind == "piggyback" else self.pi1]

    def scenario_for(self, point_index: int, trial: int) -> GaussianScenario:
        point_seed = self.seed + 1000003 * point_index
        stream_seed = point_seed ^ trial
        common = dict(sided=self.sided, sigma2=self.sigma2, seed=stream_seed)
        if self.kind == "pi1_sweep":
            return GaussianScenario.constant(self.T, self.grid[point_index], **common)
        if self.kind == "piggyback":
            return GaussianScenario(
                T=self.T,
                pi1=((1, self.pi1_high), (self.switch_at + 1, self.pi1_low)),
                **common,
            )
        return GaussianScenario.constant(self.T, self.pi1, **common)


@dataclass
class SuiteResult:
    suite: ScenarioSuite
    points: list
    reports: dict[str, list[TrialReport]]
    trial_rows: list[dict]
    raw: dict[str, list[list[dict]]]

    def report(self, name: str, point_index: int = 0) -> TrialReport:
        return self.reports[name][point_index]


def run_suite(suite: ScenarioSuite, keep: frozenset | set = frozenset()) -> SuiteResult:
    """Run all trials serially; every trial's stream is shared by all entries.

    ``keep`` selects raw per-trial pieces to retain: any of {'rejected',
    'wealth', 'resets', 'abstained', 'alpha', 'verify'}.
    """
    points = suite.points()
    reports: dict[str, list[TrialReport]] = {e.name: [] for e in suite.entries}
    raw: dict[str, list[list[dict]]] = {e.name: [] for e in suite.entries}
    trial_rows: list[dict] = []

    for pi, _point in enumerate(points):
        per_entry_metrics = {e.name: [] for e in suite.entries}
        for e in suite.entries:
            raw[e.name].append([])
        for k in range(suite.n_trials):
            scenario = suite.scenario_for(pi, k)
            p, is_null = generate_stream(scenario)
            for e in suite.entries:
                arrays = run_stream(p, is_null, e.engine, e.policy, e.weights)
                tm = TrajectoryMetrics.from_run(
                    arrays["rejected"],
                    is_null,
                    delta=suite.delta_metric,
                    wealth=arrays["wealth"],
                )
                per_entry_metrics[e.name].append(tm)
                if keep:
                    piece = {}
                    for key in ("rejected", "wealth", "resets", "abstained", "alpha"):
                        if key in keep:
                            piece[key] = arrays[key]
                    if "verify" in keep:
                        piece["verify"] = verify_arrays(
                            arrays["alpha"], arrays["rejected"], e.engine.alpha
                        )
                    raw[e.name][pi].append(piece)
                trial_rows.append(
                    {
                        "entry": e.name,
                        "point": _point,
                        "trial": k,
                        "T": suite.T,
                        "rejections": int(tm.rejections[-1]),
                        "false_rejections": int(tm.false_rejections[-1]),
                        "fdp": float(tm.fdp[-1]),
                        "power": float(tm.power[-1]),
                        "mem_fdp": float(tm.mem_fdp[-1]),
                        "wealth": float(arrays["wealth"][-1]),
                    }
                )
        for e in suite.entries:
            reports[e.name].append(aggregate(per_entry_metrics[e.name], eta=suite.eta))

    return SuiteResult(
        suite=suite, points=points, reports=reports, trial_rows=trial_rows, raw=raw
    )


# -- suite config (structured text) ----------------------------------------------


def suite_from_config(doc: dict) -> ScenarioSuite:
    """Build a suite from its JSON document; errors name the offending field."""
    if "suite" not in doc:
        raise ConfigError("missing 'suite' section")
    s = doc["suite"]
    alpha = doc.get("alpha", 0.05)
    entries = []
    for i, ed in enumerate(doc.get("entries", [])):
        loc = f"entries[{i}]"
        if "policy" not in ed:
            raise ConfigError(f"{loc}.policy: missing")
        try:
            spec = PolicySpec.from_dict(ed["policy"])
            policy = spec.build()
        except InvalidParams as err:
            raise ConfigError(f"{loc}.policy: {err}") from err
        eng = ed.get("engine", {})
        try:
            cfg = EngineConfig(
                alpha=eng.get("alpha", alpha),
                w0=eng.get("w0", eng.get("alpha", alpha) / 2.0),
                delta=eng.get("delta", 1.0),
                eps_wealth=eng.get("eps_wealth", 0.0),
                eps_reject=eng.get("eps_reject", 0.0),
                abstinence_enabled=eng.get("abstinence_enabled", False),
                reset_on_raw_count=eng.get("reset_on_raw_count", False),
                abstain_reset_patience=eng.get("abstain_reset_patience", 0),
                lenient=eng.get("lenient", False),
            )
        except InvalidParams as err:
            raise ConfigError(f"{loc}.engine: {err}") from err
        if policy.family == "alpha_spending" and cfg.w0 != cfg.alpha:
            raise ConfigError(
                f"{loc}.engine.w0: alpha_spending needs w0 == alpha "
                f"(its budget is the whole level); got w0={cfg.w0}"
            )
        try:
            weights = build_weights(ed.get("weights", {"kind": "unit"}))
        except InvalidParams as err:
            raise ConfigError(f"{loc}.weights: {err}") from err
        entries.append(
            SuiteEntry(
                name=ed.get("name", f"{policy.family}_{i}"),
                engine=cfg,
                policy=policy,
                weights=weights,
            )
        )
    if not entries:
        raise ConfigError("entries: need at least one entry")
    try:
        return ScenarioSuite(
            kind=s.get("kind", "pi1_sweep"),
            T=int(s.get("T", 1000)),
            n_trials=int(s.get("n_trials", 200)),
            entries=entries,
            grid=tuple(s.get("grid", ())),
            pi1_high=s.get("pi1_high", 0.9),
            pi1_low=s.get("pi1_low", 0.01),
            switch_at=int(s.get("switch_at", 1000)),
            pi1=s.get("pi1", 0.01),
            sided=s.get("sided", "two"),
            sigma2=s.get("sigma2"),
            seed=int(doc.get("seed", 0)),
            eta=doc.get("eta", 1.0),
            delta_metric=doc.get("delta_metric", 1.0),
        )
    except InvalidParams as err:
        raise ConfigError(f"suite: {err}") from err


# -- outputs ----------------------------------------------------------------------


def write_outputs(result: SuiteResult, out_dir: str, figures_data: bool = False) -> list[str]:
    """Write report.csv, report.json, trajectories.csv and optional fig_*.csv."""
    import csv

    os.makedirs(out_dir, exist_ok=True)
    written = []
    suite = result.suite

    path = os.path.join(out_dir, "report.csv")
    with open(path, "w", newline="") as f:
        wr = csv.DictWriter(
            f, fieldnames=["series", "point", "checkpoint", "stat", "mean", "se", "n_trials"]
        )
        wr.writeheader()
        for name, reps in result.reports.items():
            for point, rep in zip(result.points, reps):
                for row in rep.rows(name):
                    row["point"] = point
                    wr.writerow(row)
    written.append(path)

    path = os.path.join(out_dir, "report.json")
    summary = {
        "kind": suite.kind,
        "T": suite.T,
        "n_trials": suite.n_trials,
        "seed": suite.seed,
        "alpha": {e.name: e.engine.alpha for e in suite.entries},
        "kernel_backend": _kernels.backend(),
        "points": result.points,
        "series": {
            name: [rep.summary() for rep in reps]
            for name, reps in result.reports.items()
        },
    }
    with open(path, "w") as f:
        json.dump(summary, f, indent=2)
    written.append(path)

    path = os.path.join(out_dir, "trajectories.csv")
    with open(path, "w", newline="") as f:
        wr = csv.DictWriter(
            f,
            fieldnames=[
                "entry", "point", "trial", "T", "rejections", "false_rejections",
                "fdp", "power", "mem_fdp", "wealth",
            ],
        )
        wr.writeheader()
        wr.writerows(result.trial_rows)
    written.append(path)

    if figures_data:
        written.extend(write_figure_data(result, out_dir))
    return written


def _fig_kind(result: SuiteResult) -> str:
    weighted = any(isinstance(e.weights, OracleWeights) for e in result.suite.entries)
    if result.suite.kind == "pi1_sweep":
        return "weighted" if weighted else "sweep"
    return {"piggyback": "piggyback", "alpha_death": "alpha_death"}[result.suite.kind]


def write_figure_data(result: SuiteResult, out_dir: str) -> list[str]:
    """Tidy per-figure CSVs (kind,panel,series,x,y,se) plus a .meta.json sidecar.

    Every number is copied from the aggregated reports; figure scripts must
    not recompute statistics.
    """
    import csv

    suite = result.suite
    kind = _fig_kind(result)
    rows = []
    if suite.kind == "pi1_sweep":
        panels = (("power", "power"), ("fdr", "fdr"))
        for name, reps in result.reports.items():
            for point, rep in zip(result.points, reps):
                for panel, stat in panels:
                    m, se = rep.at(suite.T, stat)
                    rows.append(
                        {"kind": kind, "panel": panel, "series": name,
                         "x": point, "y": m, "se": se}
                    )
    else:
        if suite.kind == "piggyback":
            panels = (("mem_power", "mem_power"), ("mem_fdr", "mem_fdr"))
        else:
            panels = (("wealth", "wealth"), ("mem_power", "mem_power"))
        for name, reps in result.reports.items():
            rep = reps[0]
            for panel, stat in panels:
                means = getattr(rep, stat)
                ses = getattr(rep, stat + "_se")
                for i, t in enumerate(rep.checkpoints):
                    rows.append(
                        {"kind": kind, "panel": panel, "series": name,
                         "x": int(t), "y": float(means[i]), "se": float(ses[i])}
                    )

    base = os.path.join(out_dir, f"fig_{kind}")
    csv_path = base + ".csv"
    with open(csv_path, "w", newline="") as f:
        wr = csv.DictWriter(f, fieldnames=["kind", "panel", "series", "x", "y", "se"])
        wr.writeheader()
        wr.writerows(rows)
    meta = {
        "kind": kind,
        "alpha": suite.entries[0].engine.alpha,
        "x_label": "pi1" if suite.kind == "pi1_sweep" else "t",
    }
    if suite.kind == "piggyback":
        meta["switch_at"] = suite.switch_at
    meta_path = base + ".meta.json"
    with open(meta_path, "w") as f:
        json.dump(meta, f, indent=2)
    return [csv_path, meta_path]


# -- super-uniformity property harness --------------------------------------------


@dataclass
class SuperUniformityReport:
    """Per-null-index comparison of E[1{P<=f}/g] vs E[f/g] (dotted fractions)."""

    per_index: list[dict]
    ok: bool
    n_samples: int
    exact: bool

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "n_samples": self.n_samples,
            "exact": self.exact,
            "per_index": self.per_index,
        }


def _threshold_tables(policy: Policy, cfg: EngineConfig, T: int) -> list[np.ndarray]:
    """f_t for every rejection history: tabs[t][code], bit s of code = R_{s+1}."""
    tabs = []
    for t in range(1, T + 1):
        vals = np.empty(1 << (t - 1))
        for code in range(1 << (t - 1)):
            bits = [(code >> s) & 1 for s in range(t - 1)]
            vals[code] = alpha_schedule(policy, cfg, bits)[-1]
        tabs.append(vals)
    return tabs


def _run_threshold_grid(P: np.ndarray, tabs: list[np.ndarray]):
    n, T = P.shape
    codes = np.zeros(n, dtype=np.int64)
    R = np.zeros((n, T), dtype=bool)
    F = np.empty((n, T))
    for t in range(T):
        ft = tabs[t][codes]
        F[:, t] = ft
        rej = P[:, t] <= ft
        R[:, t] = rej
        codes = codes + (rej.astype(np.int64) << t)
    return R, F


def _g_values(R: np.ndarray, g: str) -> np.ndarray:
    if g == "rejections":
        return np.maximum(R.sum(axis=1), 1.0)
    if g == "one":
        return np.ones(R.shape[0])
    raise InvalidParams(f"unknown g spec {g!r}; use 'rejections' or 'one'")


def super_uniformity_check(
    T: int,
    n_samples: int,
    alpha: float = 0.05,
    w0: float = 0.025,
    g: str = "rejections",
    policy: Policy | None = None,
    seed: int = 0,
) -> SuperUniformityReport:
    """Monte Carlo check under the global null (uniform p-values), T <= 10.

    For each index t, estimates mean(1{P_t <= f_t}/g - f_t/g) and requires it
    to be <= 3 standard errors of the paired difference.
    """
    if T > 10:
        raise InvalidParams("super_uniformity_check is exponential in T; use T <= 10")
    cfg = EngineConfig(alpha=alpha, w0=w0)
    policy = policy if policy is not None else LordPP(GammaSequence.lord_default())
    tabs = _threshold_tables(policy, cfg, T)
    rng = np.random.default_rng(seed)
    P = rng.random((n_samples, T))
    R, F = _run_threshold_grid(P, tabs)
    gv = _g_values(R, g)
    per_index = []
    ok = True
    for t in range(T):
        lhs = R[:, t] / gv
        rhs = F[:, t] / gv
        diff = lhs - rhs
        mean_diff = float(diff.mean())
        se = float(diff.std(ddof=1) / np.sqrt(n_samples))
        holds = mean_diff <= 3.0 * se + 1e-15
        ok = ok and holds
        per_index.append(
            {
                "t": t + 1,
                "lhs": float(lhs.mean()),
                "rhs": float(rhs.mean()),
                "mean_diff": mean_diff,
                "se_diff": se,
                "ok": holds,
            }
        )
    return SuperUniformityReport(per_index=per_index, ok=ok, n_samples=n_samples, exact=False)


def super_uniformity_exhaustive(
    T: int = 3,
    m: int = 20,
    alpha: float = 0.05,
    w0: float = 0.025,
    g: str = "rejections",
    policy: Policy | None = None,
) -> SuperUniformityReport:
    """Exact check: p-values on the grid {1/m, ..., m/m} enumerated fully.

    The grid distribution is itself super-uniform (P{P <= x} = floor(mx)/m
    <= x), so the inequality must hold exactly, without Monte Carlo slack.
    """
    cfg = EngineConfig(alpha=alpha, w0=w0)
    policy = policy if policy is not None else LordPP(GammaSequence.lord_default())
    tabs = _threshold_tables(policy, cfg, T)
    axes = np.arange(1, m + 1) / m
    mesh = np.meshgrid(*([axes] * T), indexing="ij")
    P = np.stack([ax.ravel() for ax in mesh], axis=1)
    R, F = _run_threshold_grid(P, tabs)
    gv = _g_values(R, g)
    per_index = []
    ok = True
    for t in range(T):
        lhs = float((R[:, t] / gv).mean())
        rhs = float((F[:, t] / gv).mean())
        holds = lhs <= rhs + 1e-15
        ok = ok and holds
        per_index.append(
            {"t": t + 1, "lhs": lhs, "rhs": rhs, "mean_diff": lhs - rhs,
             "se_diff": 0.0, "ok": holds}
        )
    return SuperUniformityReport(per_index=per_index, ok=ok, n_samples=m**T, exact=True)

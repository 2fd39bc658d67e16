import numpy as np
import pytest
from scipy.stats import kstest

from onlinefdr import (
    AlphaInvesting,
    ConfigError,
    EngineConfig,
    GaussianScenario,
    Lord17,
    LordPP,
    MemLordPP,
    OracleWeights,
    ScenarioSuite,
    SuiteEntry,
    Uncorrected,
    generate_stream,
    super_uniformity_check,
    super_uniformity_exhaustive,
    run_stream,
    run_suite,
)
from onlinefdr.errors import InvalidParams
from onlinefdr.sim import _engine_run, suite_from_config, write_outputs
from onlinefdr.weights import UnitWeights


def test_scenario_validation():
    with pytest.raises(InvalidParams):
        GaussianScenario(T=10, pi1=((2, 0.5),))  # must start at 1
    with pytest.raises(InvalidParams):
        GaussianScenario(T=10, pi1=((1, 0.5), (1, 0.2)))
    with pytest.raises(InvalidParams):
        GaussianScenario.constant(10, 1.5)
    with pytest.raises(InvalidParams):
        GaussianScenario.constant(10, 0.5, sided="both")


def test_pi1_schedule_materialization():
    sc = GaussianScenario(T=6, pi1=((1, 0.9), (4, 0.1)))
    assert list(sc.pi1_array()) == [0.9, 0.9, 0.9, 0.1, 0.1, 0.1]


def test_null_pvalues_uniform_ks():
    p, is_null = generate_stream(
        GaussianScenario.constant(100_000, 0.0, sided="one", seed=123)
    )
    assert is_null.all()
    assert kstest(p, "uniform").pvalue > 0.01
    p2, _ = generate_stream(
        GaussianScenario.constant(100_000, 0.0, sided="two", seed=123)
    )
    assert kstest(p2, "uniform").pvalue > 0.01
    assert p2.min() >= 0.0 and p2.max() <= 1.0


def test_stream_determinism_and_seed_separation():
    sc = GaussianScenario.constant(500, 0.3, seed=42)
    p1, n1 = generate_stream(sc)
    p2, n2 = generate_stream(sc)
    assert np.array_equal(p1, p2) and np.array_equal(n1, n2)
    p3, _ = generate_stream(GaussianScenario.constant(500, 0.3, seed=43))
    assert not np.array_equal(p1, p3)


def test_sigma2_default_is_2_log_T():
    sc = GaussianScenario.constant(1000, 0.5)
    assert sc.sigma2_value == pytest.approx(2.0 * np.log(1000))


@pytest.mark.parametrize(
    "cfg_kwargs,policy,weights",
    [
        (dict(alpha=0.05, w0=0.025), LordPP(), None),
        (dict(alpha=0.05, w0=0.01), Lord17(), None),
        (dict(alpha=0.05, w0=0.025, delta=0.99), MemLordPP(), None),
        (dict(alpha=0.05, w0=0.025), LordPP(), OracleWeights(0.5)),
        (dict(alpha=0.05, w0=0.025), LordPP(), OracleWeights(-0.5)),
        (
            dict(
                alpha=0.05, w0=0.025, delta=0.99, eps_wealth=0.00125,
                eps_reject=0.1, abstinence_enabled=True,
            ),
            MemLordPP(),
            None,
        ),
    ],
    ids=["lordpp", "lord17", "mem", "oracle+", "oracle-", "abstinent"],
)
def test_kernel_path_matches_engine_path(cfg_kwargs, policy, weights):
    cfg = EngineConfig(**cfg_kwargs)
    p, is_null = generate_stream(GaussianScenario.constant(400, 0.15, seed=31))
    fast = run_stream(p, is_null, cfg, policy, weights)
    if weights is not None:
        w_arr, u_arr = weights.arrays(len(p), is_null)

        class _Fixed(UnitWeights):
            def emit(self, state, truth=None):
                return float(w_arr[state.t]), float(u_arr[state.t])

        slow = _engine_run(p, is_null.astype(np.int8), cfg, policy, _Fixed())
    else:
        slow = _engine_run(p, is_null.astype(np.int8), cfg, policy, UnitWeights())
    assert np.array_equal(fast["rejected"], slow["rejected"])
    assert np.array_equal(fast["abstained"], slow["abstained"])
    assert np.array_equal(fast["resets"], slow["resets"])
    for key in ("alpha", "psi", "b", "wealth", "r_dec", "v_dec", "cum_alpha"):
        assert np.max(np.abs(fast[key] - slow[key])) <= 1e-12, key


def test_engine_path_used_for_non_kernel_policy(cfg):
    p, is_null = generate_stream(GaussianScenario.constant(50, 0.3, seed=1))
    out = run_stream(p, is_null, cfg, AlphaInvesting(0.1))
    assert out["alpha"].shape == (50,)
    assert out["wealth"].min() >= -1e-12


def _tiny_suite(**kw):
    base = dict(
        kind="pi1_sweep",
        T=100,
        n_trials=2,
        grid=(0.2,),
        entries=[
            SuiteEntry("lord_pp", EngineConfig(alpha=0.05, w0=0.025), LordPP()),
        ],
        seed=1,
    )
    base.update(kw)
    return ScenarioSuite(**base)


def test_run_suite_smoke_and_outputs(tmp_path):
    res = run_suite(_tiny_suite())
    rep = res.report("lord_pp")
    assert 0.0 <= rep.fdr[-1] <= 1.0
    files = write_outputs(res, str(tmp_path), figures_data=True)
    names = {f.split("/")[-1] for f in files}
    assert {"report.csv", "report.json", "trajectories.csv", "fig_sweep.csv",
            "fig_sweep.meta.json"} <= names
    report_csv = (tmp_path / "report.csv").read_text().splitlines()
    assert report_csv[0] == "series,point,checkpoint,stat,mean,se,n_trials"
    assert len(report_csv) > 100


def test_run_suite_seeded_determinism():
    r1 = run_suite(_tiny_suite())
    r2 = run_suite(_tiny_suite())
    assert np.array_equal(r1.report("lord_pp").fdr, r2.report("lord_pp").fdr)
    assert np.array_equal(r1.report("lord_pp").power, r2.report("lord_pp").power)


def test_suite_config_errors():
    with pytest.raises(ConfigError, match="entries"):
        suite_from_config({"suite": {"kind": "pi1_sweep", "grid": [0.1]}})
    with pytest.raises(ConfigError, match="family"):
        suite_from_config(
            {
                "suite": {"kind": "pi1_sweep", "grid": [0.1]},
                "entries": [{"policy": {"family": "bogus"}}],
            }
        )
    with pytest.raises(ConfigError, match="w0"):
        suite_from_config(
            {
                "suite": {"kind": "pi1_sweep", "grid": [0.1]},
                "entries": [
                    {"policy": {"family": "alpha_spending"}, "engine": {"w0": 0.01}}
                ],
            }
        )
    with pytest.raises(ConfigError, match="kind"):
        suite_from_config(
            {"suite": {"kind": "nope"}, "entries": [{"policy": {"family": "lord_pp"}}]}
        )


def test_suite_from_config_builds():
    suite = suite_from_config(
        {
            "suite": {"kind": "piggyback", "T": 60, "n_trials": 2, "switch_at": 30},
            "alpha": 0.05,
            "delta_metric": 0.99,
            "entries": [
                {"name": "m", "policy": {"family": "mem_lord_pp"}, "engine": {"delta": 0.99}},
            ],
        }
    )
    assert suite.kind == "piggyback" and suite.entries[0].engine.delta == 0.99
    res = run_suite(suite)
    assert res.report("m").checkpoints[-1] == 60


def test_global_null_uncorrected_fdr_near_one():
    suite = ScenarioSuite(
        kind="pi1_sweep", T=400, n_trials=40, grid=(0.0,),
        entries=[SuiteEntry("unc", EngineConfig(alpha=0.05, w0=0.025), Uncorrected())],
        seed=3,
    )
    res = run_suite(suite)
    assert res.report("unc").fdr[-1] >= 0.95


# -- super-uniformity harness -------------------------------------------------


def test_super_uniformity_exhaustive_exact():
    rep = super_uniformity_exhaustive(T=3, m=25)
    assert rep.exact and rep.ok
    for row in rep.per_index:
        assert row["lhs"] <= row["rhs"] + 1e-15


def test_super_uniformity_check_monte_carlo_smoke():
    rep = super_uniformity_check(T=5, n_samples=20_000, seed=0)
    assert rep.ok


def test_constant_g_reduces_to_marginal_super_uniformity():
    rep = super_uniformity_check(T=4, n_samples=20_000, g="one", seed=1)
    assert rep.ok
    # with g = 1 the rhs is just E[f_t] and lhs is P(P_t <= f_t)
    for row in rep.per_index:
        assert row["lhs"] <= row["rhs"] + 3.0 * row["se_diff"] + 1e-15


def test_super_uniformity_guards():
    with pytest.raises(InvalidParams):
        super_uniformity_check(T=11, n_samples=10)
    with pytest.raises(InvalidParams):
        super_uniformity_check(T=3, n_samples=10, g="max")

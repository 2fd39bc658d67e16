import numpy as np
import pytest

from onlinefdr import GridMismatch, TrajectoryMetrics, aggregate, fdp
from onlinefdr.errors import InvalidParams
from onlinefdr.metrics import MemPowerState, decayed_cumsum, default_checkpoints, mem_power_update


def test_fdp_examples():
    assert fdp(0, 0) == 0.0
    assert fdp(1, 1) == 1.0
    assert fdp(2, 5) == pytest.approx(0.4)


def test_decayed_cumsum_matches_recursion():
    rng = np.random.default_rng(0)
    x = rng.random(50)
    for delta in (1.0, 0.9, 0.5):
        y = decayed_cumsum(x, delta)
        acc = 0.0
        for i in range(50):
            acc = delta * acc + x[i]
            assert y[i] == pytest.approx(acc, rel=1e-12)


def test_default_checkpoints():
    assert list(default_checkpoints(5)) == [1, 2, 3, 4, 5]
    cp = default_checkpoints(10_000)
    assert cp[0] == 1 and cp[-1] == 10_000
    assert np.all(np.diff(cp) > 0)


def test_mem_power_update_examples():
    s = MemPowerState()
    # delta = 1: reduces to the ordinary running power counters
    s = mem_power_update(s, rejected=True, truth=False, delta=1.0)
    s = mem_power_update(s, rejected=False, truth=False, delta=1.0)
    assert s.u == 1.0 and s.d == 2.0 and s.mem_power == 0.5

    s2 = MemPowerState(u=1.0, d=2.0)
    s2 = mem_power_update(s2, rejected=True, truth=False, delta=0.5)
    assert s2.u == pytest.approx(1.5) and s2.d == pytest.approx(2.0)

    # long null stretch: denominator decays toward zero, ratio stays defined
    s3 = MemPowerState(u=0.5, d=1.0)
    for _ in range(200):
        s3 = mem_power_update(s3, rejected=False, truth=True, delta=0.9)
    assert s3.d < 1e-8 and 0.0 <= s3.mem_power <= 1.0


def test_trajectory_delta_one_mem_equals_plain():
    rng = np.random.default_rng(1)
    rejected = rng.random(400) < 0.1
    is_null = rng.random(400) < 0.7
    tm = TrajectoryMetrics.from_run(rejected, is_null, delta=1.0)
    assert np.array_equal(tm.mem_num, tm.false_rejections)
    assert np.array_equal(tm.mem_den, tm.rejections)
    assert np.array_equal(tm.mem_fdp, tm.fdp)


def _toy_trial(v, r, T=10, n_non_null=4):
    rejected = np.zeros(T, dtype=bool)
    is_null = np.ones(T, dtype=bool)
    is_null[:n_non_null] = False
    rejected[:r] = True
    # first v rejections fall on nulls
    order = list(range(n_non_null, n_non_null + v)) + list(range(0, r - v))
    rejected[:] = False
    for i in order:
        rejected[i] = True
    return TrajectoryMetrics.from_run(rejected, is_null)


def test_aggregate_fdr_mean_of_ratios():
    t1 = _toy_trial(v=0, r=2)
    t2 = _toy_trial(v=2, r=4)
    rep = aggregate([t1, t2])
    assert rep.fdr[-1] == pytest.approx((0.0 + 0.5) / 2)


def test_aggregate_mfdr_ratio_of_means():
    t1 = _toy_trial(v=1, r=3, T=20, n_non_null=10)
    t2 = _toy_trial(v=1, r=3, T=20, n_non_null=10)
    rep = aggregate([t1, t2], eta=1.0)
    # identical trials: V mean 1, R mean 3 -> mFDR_1 = 1/4, SE 0
    assert rep.mfdr[-1] == pytest.approx(0.25)
    assert rep.mfdr_se[-1] == pytest.approx(0.0, abs=1e-15)


def test_aggregate_mfdr_example_means():
    # V means 1, R means 9 with eta=1 -> 0.1
    a = _toy_trial(v=0, r=8, T=40, n_non_null=20)
    b = _toy_trial(v=2, r=10, T=40, n_non_null=20)
    rep = aggregate([a, b], eta=1.0)
    assert rep.mfdr[-1] == pytest.approx(1.0 / 10.0)


def test_aggregate_grid_mismatch():
    t1 = _toy_trial(v=0, r=1, T=10)
    t2 = _toy_trial(v=0, r=1, T=12)
    with pytest.raises(GridMismatch):
        aggregate([t1, t2])
    with pytest.raises(InvalidParams):
        aggregate([t1])


def test_sfdr_below_fdr_per_trial():
    rng = np.random.default_rng(2)
    trials = []
    for _ in range(30):
        rejected = rng.random(100) < 0.15
        is_null = rng.random(100) < 0.6
        trials.append(TrajectoryMetrics.from_run(rejected, is_null))
    rep = aggregate(trials, eta=1.0)
    assert np.all(rep.sfdr <= rep.fdr + 1e-15)


def test_report_rows_and_summary():
    t1 = _toy_trial(v=0, r=2)
    t2 = _toy_trial(v=2, r=4)
    rep = aggregate([t1, t2])
    rows = rep.rows("toy")
    stats = {r["stat"] for r in rows}
    assert {"fdr", "sfdr", "mfdr", "power", "mem_fdr", "mem_power"} <= stats
    assert all(r["series"] == "toy" for r in rows)
    summary = rep.summary()
    assert summary["n_trials"] == 2
    assert 0.0 <= summary["fdr"] <= 1.0
    m, se = rep.at(10, "fdr")
    assert m == rep.fdr[-1]
    with pytest.raises(GridMismatch):
        rep.at(99, "fdr")

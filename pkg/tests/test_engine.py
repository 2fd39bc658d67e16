import numpy as np
import pytest

from onlinefdr import (
    BudgetViolation,
    EngineConfig,
    InvalidPValue,
    LordPP,
    Observation,
    ResetNotAllowed,
    RewardViolation,
    StepInputs,
    Stream,
    StreamState,
    budget_b,
    fresh_state,
    reset,
    reward_cap,
    should_abstain,
    should_reset,
    step,
)
from onlinefdr.errors import NegativeInput
from onlinefdr.sim import GaussianScenario, generate_stream, run_stream
from onlinefdr.types import replace

from oracles import PlainAlphaInvesting, PlainLordPP


def rejected_state(cfg, wealth=0.05, tau=(2,), rewards=None):
    rewards = rewards if rewards is not None else (cfg.alpha,) * len(tau)
    return StreamState(
        wealth=wealth,
        t=max(tau),
        tests_done=max(tau),
        rejection_times=tuple(tau),
        rejection_test_idx=tuple(tau),
        rejection_rewards=rewards,
        r_count=len(tau),
        r_decay_u=float(len(tau)),
    )


# -- budget_b ---------------------------------------------------------------


def test_budget_before_first_rejection(cfg):
    assert budget_b(fresh_state(cfg), 1.0, cfg) == pytest.approx(0.025, abs=1e-15)


def test_budget_after_first_rejection(cfg):
    assert budget_b(rejected_state(cfg), 1.0, cfg) == pytest.approx(0.05, abs=1e-15)


def test_budget_with_penalty_weight():
    cfg = EngineConfig(alpha=0.05, w0=0.02)
    assert budget_b(fresh_state(cfg), 2.0, cfg) == pytest.approx(0.04, abs=1e-15)


# -- reward_cap ---------------------------------------------------------------


def test_reward_cap_second_branch_binds():
    assert reward_cap(0.01, 0.01, 1.0, 1.0, 0.05) == pytest.approx(0.05, abs=1e-15)


def test_reward_cap_first_branch_binds():
    assert reward_cap(0.01, 0.005, 1.0, 1.0, 0.05) == pytest.approx(0.06, abs=1e-15)


def test_reward_cap_clamped_to_zero():
    # min{0.102, -1.85} clamps at zero: overstated weights earn nothing
    assert reward_cap(0.002, 0.01, 2.0, 2.0, 0.05) == 0.0


def test_reward_cap_alpha_zero_uses_first_branch():
    assert reward_cap(0.01, 0.0, 1.0, 1.0, 0.05) == pytest.approx(0.06, abs=1e-15)


def test_reward_cap_negative_input():
    with pytest.raises(NegativeInput):
        reward_cap(-0.01, 0.01, 1.0, 1.0, 0.05)
    with pytest.raises(NegativeInput):
        reward_cap(0.01, -0.01, 1.0, 1.0, 0.05)
    with pytest.raises(NegativeInput):
        reward_cap(0.01, 0.01, -1.0, 1.0, 0.05)
    # b_t may be any real
    assert reward_cap(0.01, 0.01, 1.0, 1.0, -0.5) == 0.0


# -- step ----------------------------------------------------------------------


def test_step_wealth_decrement_only(cfg):
    state = replace(rejected_state(cfg), wealth=0.05)
    inputs = StepInputs(alpha_t=0.01, phi_t=0.01, psi_t=0.0)
    rec, new = step(state, Observation.test(0.5), inputs, cfg)
    assert not rec.rejected
    assert new.wealth == pytest.approx(0.04, abs=1e-15)


def test_step_decayed_wealth_update():
    cfg = EngineConfig(alpha=0.05, w0=0.025, delta=0.99)
    state = rejected_state(cfg, wealth=0.05)
    inputs = StepInputs(alpha_t=0.0005, phi_t=0.001, psi_t=0.0)
    rec, new = step(state, Observation.test(0.9), inputs, cfg)
    assert new.wealth == pytest.approx(0.99 * 0.05 - 0.001, abs=1e-15)


def test_step_v_decay_recursion_on_null_rejection():
    cfg = EngineConfig(alpha=0.05, w0=0.025, delta=0.5)
    state = replace(rejected_state(cfg, wealth=0.05), v_decay_u=1.0)
    inputs = StepInputs(alpha_t=0.02, phi_t=0.0, psi_t=0.0)
    rec, new = step(state, Observation.test(0.001), inputs, cfg, truth=True)
    assert rec.rejected
    assert new.v_decay_u == pytest.approx(1.5, abs=1e-15)


def test_step_unlabeled_never_increments_v(cfg):
    state = replace(rejected_state(cfg, wealth=0.05), v_decay_u=0.0)
    inputs = StepInputs(alpha_t=0.02, phi_t=0.0, psi_t=0.0)
    rec, new = step(state, Observation.test(0.001), inputs, cfg, truth=None)
    assert rec.rejected and new.v_decay_u == 0.0 and rec.v_decay_after is None


def test_step_abstain_only_decays():
    cfg = EngineConfig(alpha=0.05, w0=0.025, delta=0.5)
    state = replace(rejected_state(cfg, wealth=0.04), r_decay_u=2.0, v_decay_u=1.0)
    rec, new = step(state, Observation.abstain(), StepInputs(0.0, 0.0, 0.0), cfg)
    assert rec.abstained and not rec.rejected
    assert new.wealth == pytest.approx(0.02, abs=1e-15)
    assert new.r_decay_u == pytest.approx(1.0, abs=1e-15)
    assert new.v_decay_u == pytest.approx(0.5, abs=1e-15)
    assert new.tests_done == state.tests_done
    assert new.consecutive_abstains == 1


def test_step_abstain_delta_one_is_identity_on_wealth(cfg):
    state = rejected_state(cfg, wealth=0.037)
    rec, new = step(state, Observation.abstain(), StepInputs(0.0, 0.0, 0.0), cfg)
    assert new.wealth == state.wealth


def test_step_invalid_pvalue(cfg):
    with pytest.raises(InvalidPValue):
        Observation.test(1.5)


def test_step_budget_violation(cfg):
    state = fresh_state(cfg)  # wealth 0.025
    with pytest.raises(BudgetViolation):
        step(state, Observation.test(0.5), StepInputs(0.01, 0.03, 0.0), cfg)


def test_step_reward_violation_and_lenient_clamp():
    cfg = EngineConfig(alpha=0.05, w0=0.025)
    state = fresh_state(cfg)
    bad = StepInputs(alpha_t=0.01, phi_t=0.01, psi_t=0.2)
    with pytest.raises(RewardViolation):
        step(state, Observation.test(0.5), bad, cfg)
    lenient = EngineConfig(alpha=0.05, w0=0.025, lenient=True)
    rec, new = step(state, Observation.test(0.001), bad, lenient)
    assert rec.clamped
    # clamped to the cap: min(phi+b, phi/alpha + b - 1) with b = alpha - w0
    cap = min(0.01 + 0.025, 0.01 / 0.01 + 0.025 - 1.0)
    assert rec.psi_t == pytest.approx(cap, abs=1e-15)
    assert new.wealth == pytest.approx(0.025 - 0.01 + cap, abs=1e-15)


def test_threshold_clamped_to_one(cfg):
    state = replace(fresh_state(cfg), wealth=0.025)
    inputs = StepInputs(alpha_t=0.9, phi_t=0.0, psi_t=0.0, w_t=5.0, u_t=1.0)
    rec, _ = step(state, Observation.test(1.0), inputs, cfg)
    assert rec.rejected  # threshold min(1, 4.5) = 1 catches p = 1


# -- abstain / reset ------------------------------------------------------------


def test_should_abstain_threshold():
    cfg = EngineConfig(alpha=0.05, w0=0.025, eps_wealth=0.0025, abstinence_enabled=True)
    assert should_abstain(replace(fresh_state(cfg), wealth=0.0001), cfg)
    assert not should_abstain(replace(fresh_state(cfg), wealth=0.01), cfg)
    # boundary is strict
    assert not should_abstain(replace(fresh_state(cfg), wealth=0.0025), cfg)


def test_should_reset_conditions():
    cfg = EngineConfig(
        alpha=0.05, w0=0.025, eps_reject=0.1, abstinence_enabled=True, delta=0.99
    )
    dying = replace(rejected_state(cfg), r_decay_u=0.05)
    assert should_reset(dying, cfg)
    assert not should_reset(replace(rejected_state(cfg), r_decay_u=0.5), cfg)
    # no rejections ever: never reset on the counter alone
    assert not should_reset(replace(fresh_state(cfg), r_decay_u=0.0), cfg)


def test_should_reset_raw_count_variant():
    cfg = EngineConfig(
        alpha=0.05, w0=0.025, eps_reject=1.5, abstinence_enabled=True,
        reset_on_raw_count=True,
    )
    assert should_reset(rejected_state(cfg, tau=(2,)), cfg)  # raw count 1 < 1.5
    assert not should_reset(rejected_state(cfg, tau=(2, 3)), cfg)


def test_should_reset_patience_fallback():
    cfg = EngineConfig(
        alpha=0.05, w0=0.025, abstinence_enabled=True, abstain_reset_patience=5
    )
    stuck = replace(fresh_state(cfg), consecutive_abstains=5)
    assert should_reset(stuck, cfg)
    assert not should_reset(replace(fresh_state(cfg), consecutive_abstains=4), cfg)


def test_reset_returns_fresh_state_and_guards():
    cfg = EngineConfig(
        alpha=0.05, w0=0.025, eps_reject=0.1, abstinence_enabled=True, delta=0.99
    )
    dying = replace(rejected_state(cfg), r_decay_u=0.01, wealth=0.0001)
    assert reset(dying, cfg) == fresh_state(cfg)
    with pytest.raises(ResetNotAllowed):
        reset(fresh_state(cfg), cfg)


def test_post_reset_stream_equals_new_stream():
    cfg = EngineConfig(
        alpha=0.05, w0=0.025, eps_reject=0.1, abstinence_enabled=True, delta=0.99
    )
    dying = replace(rejected_state(cfg), r_decay_u=0.01, wealth=0.0001)
    reborn = reset(dying, cfg)
    rng = np.random.default_rng(3)
    ps = rng.random(50) * 0.05
    a = Stream(cfg, LordPP())
    b = Stream(cfg, LordPP())
    b.state = reborn
    for p in ps:
        ra = a.submit(Observation.test(p))
        rb = b.submit(Observation.test(p))
        assert (ra.alpha_t, ra.rejected, ra.wealth_after) == (
            rb.alpha_t, rb.rejected, rb.wealth_after,
        )


# -- reduction identity and stream-level invariants ------------------------------


def test_engine_matches_plain_stepper_record_for_record(cfg):
    rng = np.random.default_rng(42)
    for trial in range(20):
        p, is_null = generate_stream(GaussianScenario.constant(150, 0.3, seed=trial))
        stream = Stream(cfg, LordPP())
        oracle = PlainLordPP(cfg.alpha, cfg.w0)
        for pv in p:
            rec = stream.submit(Observation.test(float(pv)))
            a, r, w = oracle.step(float(pv))
            assert abs(rec.alpha_t - a) <= 1e-12
            assert rec.rejected == r
            assert abs(rec.wealth_after - w) <= 1e-12


def test_alpha_investing_matches_plain_stepper(cfg):
    from onlinefdr import AlphaInvesting

    rng = np.random.default_rng(7)
    p = rng.random(300)
    stream = Stream(cfg, AlphaInvesting(spend_fraction=0.1))
    oracle = PlainAlphaInvesting(cfg.alpha, cfg.w0, 0.1)
    for pv in p:
        rec = stream.submit(Observation.test(float(pv)))
        a, r, w = oracle.step(float(pv))
        assert abs(rec.alpha_t - a) <= 1e-12
        assert rec.rejected == r
        assert abs(rec.wealth_after - w) <= 1e-12


def test_wealth_never_negative_under_decay():
    cfg = EngineConfig(alpha=0.05, w0=0.025, delta=0.99)
    for seed in range(10):
        p, is_null = generate_stream(GaussianScenario.constant(800, 0.4, seed=seed))
        out = run_stream(p, is_null, cfg, LordPP())
        assert out["wealth"].min() >= -1e-12


def test_abstention_neutral_when_delta_one(cfg):
    rng = np.random.default_rng(11)
    p, _ = generate_stream(GaussianScenario.constant(120, 0.3, seed=5))
    plain = Stream(cfg, LordPP())
    plain_recs = [plain.submit(Observation.test(float(pv))) for pv in p]

    mixed = Stream(cfg, LordPP())
    mixed_recs = []
    for pv in p:
        while rng.random() < 0.3:
            mixed.submit(Observation.abstain())
        mixed_recs.append(mixed.submit(Observation.test(float(pv))))
    for ra, rb in zip(plain_recs, mixed_recs):
        assert ra.rejected == rb.rejected
        assert abs(ra.alpha_t - rb.alpha_t) <= 1e-12


def test_schedule_depends_only_on_rejection_prefix(cfg):
    # two different p-value streams inducing the same decisions must produce
    # identical (alpha, phi, psi, b) schedules
    p1, _ = generate_stream(GaussianScenario.constant(200, 0.3, seed=9))
    s1 = Stream(cfg, LordPP())
    recs1 = [s1.submit(Observation.test(float(pv))) for pv in p1]
    s2 = Stream(cfg, LordPP())
    recs2 = []
    for rec in recs1:
        pv = rec.alpha_t * 0.5 if rec.rejected else (rec.alpha_t + 1.0) / 2.0
        recs2.append(s2.submit(Observation.test(min(pv, 1.0))))
    for ra, rb in zip(recs1, recs2):
        assert ra.rejected == rb.rejected
        assert (ra.alpha_t, ra.phi_t, ra.psi_t, ra.b_t) == (
            rb.alpha_t, rb.phi_t, rb.psi_t, rb.b_t,
        )


def test_decayed_error_ratio_bound_empirical():
    # mean over trials of (V + W)/(Rdec v 1) stays below alpha + 3 SE at
    # every checkpoint, for the decayed weighted engine
    cfg = EngineConfig(alpha=0.05, w0=0.025, delta=0.99)
    ratios = []
    for seed in range(200):
        p, is_null = generate_stream(GaussianScenario.constant(400, 0.2, seed=seed))
        out = run_stream(p, is_null, cfg, LordPP())
        ratios.append(
            (out["v_dec"] + out["wealth"]) / np.maximum(out["r_dec"], 1.0)
        )
    rows = np.vstack(ratios)
    mean = rows.mean(axis=0)
    se = rows.std(axis=0, ddof=1) / np.sqrt(rows.shape[0])
    assert np.all(mean <= 0.05 + 3.0 * se + 1e-12)


def test_stream_auto_abstains_and_resets():
    cfg = EngineConfig(
        alpha=0.05, w0=0.025, delta=0.9, eps_wealth=0.05 * 0.025, eps_reject=0.1,
        abstinence_enabled=True,
    )
    stream = Stream(cfg, LordPP())
    # one early rejection, then a long null stretch to force alpha-death
    stream.submit(Observation.test(0.0001))
    for _ in range(400):
        stream.submit(Observation.test(0.99))
    assert stream.reset_times, "expected at least one reset"
    assert any(r.abstained for r in stream.records)
    assert stream.state.wealth >= cfg.eps_wealth * 0.999 or stream.state.t < 401

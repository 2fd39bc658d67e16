"""The generalized stream engine: doubly-weighted, decaying-memory wealth updates.

One step per observation. Every simpler algorithm is a reduction (unit
weights, delta=1) or a constant-reward variant; the policies module supplies
the per-step proposals, this module enforces the budget/reward constraints
and keeps the accounting honest.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import (
    BudgetViolation,
    InvalidParams,
    InvalidPValue,
    NegativeInput,
    ResetNotAllowed,
    RewardViolation,
)
from .types import (
    TOL,
    DecisionRecord,
    EngineConfig,
    Observation,
    StreamState,
    fresh_state,
)


@dataclass(frozen=True)
class StepInputs:
    """A policy's proposal for one step: test level, penalty, reward, weights."""

    alpha_t: float
    phi_t: float
    psi_t: float
    w_t: float = 1.0
    u_t: float = 1.0

    def __post_init__(self):
        if self.alpha_t < 0 or self.phi_t < 0 or self.psi_t < 0:
            raise NegativeInput("alpha_t, phi_t, psi_t must be >= 0")
        if self.w_t <= 0 or self.u_t <= 0:
            raise InvalidParams("weights w_t, u_t must be > 0")


def budget_b(state: StreamState, u_t: float, cfg: EngineConfig) -> float:
    """Reward budget: alpha - W0/u before the first rejection, alpha after."""
    if u_t <= 0:
        raise InvalidParams("u_t must be > 0")
    if state.first_rejection_seen:
        return cfg.alpha
    return cfg.alpha - cfg.w0 / u_t


def reward_cap(phi_t: float, alpha_t: float, w_t: float, u_t: float, b_t: float) -> float:
    """Largest admissible reward for this step's (phi, alpha, weights, budget).

    max(0, min{phi + u*b, phi/(u*w*alpha) + u*b - u}); the second branch is
    +inf when alpha_t == 0. b_t may be any real; everything else must be
    nonnegative (weights strictly positive).
    """
    if phi_t < 0 or alpha_t < 0:
        raise NegativeInput("phi_t and alpha_t must be >= 0")
    if w_t <= 0 or u_t <= 0:
        raise NegativeInput("weights must be > 0")
    cap = phi_t + u_t * b_t
    if alpha_t > 0:
        cap = min(cap, phi_t / (u_t * w_t * alpha_t) + u_t * b_t - u_t)
    return max(0.0, cap)


def available_budget(state: StreamState, cfg: EngineConfig) -> float:
    """Largest admissible penalty: delta*W(t-1) + (1-delta)*W0 before tau_1."""
    pre_first = 0.0 if state.first_rejection_seen else 1.0
    return cfg.delta * state.wealth + (1.0 - cfg.delta) * cfg.w0 * pre_first


def step(
    state: StreamState,
    obs: Observation,
    inputs: StepInputs,
    cfg: EngineConfig,
    truth: bool | None = None,
) -> tuple[DecisionRecord, StreamState]:
    """Execute one step; returns the audit record and the successor state.

    ``truth`` is the optional ground-truth label (True = null hypothesis),
    available only in simulation. Constraint violations by the proposal are
    hard errors, except that lenient mode clamps an oversized reward to the
    cap and flags the record.
    """
    t = state.t + 1
    delta = cfg.delta
    pre_first = 0.0 if state.first_rejection_seen else 1.0
    decayed_wealth = delta * state.wealth + (1.0 - delta) * cfg.w0 * pre_first
    b_t = budget_b(state, inputs.u_t, cfg)

    if obs.is_abstain:
        new = replace(
            state,
            t=t,
            wealth=decayed_wealth,
            r_decay_u=delta * state.r_decay_u,
            v_decay_u=delta * state.v_decay_u,
            consecutive_abstains=state.consecutive_abstains + 1,
        )
        new.check_invariants()
        rec = DecisionRecord(
            t=t,
            p=None,
            alpha_t=0.0,
            phi_t=0.0,
            psi_t=0.0,
            b_t=b_t,
            w_t=inputs.w_t,
            u_t=inputs.u_t,
            rejected=False,
            abstained=True,
            wealth_after=new.wealth,
            r_decay_after=new.r_decay_u,
            v_decay_after=None if truth is None else new.v_decay_u,
            is_null=truth,
        )
        return rec, new

    p = obs.p
    if p is None or not (0.0 <= p <= 1.0):
        raise InvalidPValue(f"p-value {p!r} outside [0, 1]")
    if inputs.phi_t > decayed_wealth + TOL:
        raise BudgetViolation(
            f"phi_t={inputs.phi_t:.6g} exceeds available budget {decayed_wealth:.6g} at t={t}"
        )
    cap = reward_cap(inputs.phi_t, inputs.alpha_t, inputs.w_t, inputs.u_t, b_t)
    psi = inputs.psi_t
    clamped = False
    if psi > cap + TOL:
        if not cfg.lenient:
            raise RewardViolation(
                f"psi_t={psi:.6g} exceeds reward cap {cap:.6g} at t={t}"
            )
        psi = cap
        clamped = True

    threshold = min(1.0, inputs.alpha_t * inputs.u_t * inputs.w_t)
    rejected = p <= threshold
    wealth = decayed_wealth - inputs.phi_t + (psi if rejected else 0.0)
    r_dec = delta * state.r_decay_u + (inputs.u_t if rejected else 0.0)
    if rejected and truth is True:
        v_dec = delta * state.v_decay_u + inputs.u_t
    else:
        v_dec = delta * state.v_decay_u

    if rejected:
        new = replace(
            state,
            t=t,
            tests_done=state.tests_done + 1,
            wealth=wealth,
            rejection_times=state.rejection_times + (t,),
            rejection_test_idx=state.rejection_test_idx + (state.tests_done + 1,),
            rejection_rewards=state.rejection_rewards + (psi,),
            r_count=state.r_count + 1,
            r_decay_u=r_dec,
            v_decay_u=v_dec,
            consecutive_abstains=0,
        )
    else:
        new = replace(
            state,
            t=t,
            tests_done=state.tests_done + 1,
            wealth=wealth,
            r_decay_u=r_dec,
            v_decay_u=v_dec,
            consecutive_abstains=0,
        )
    new.check_invariants()
    rec = DecisionRecord(
        t=t,
        p=p,
        alpha_t=inputs.alpha_t,
        phi_t=inputs.phi_t,
        psi_t=psi,
        b_t=b_t,
        w_t=inputs.w_t,
        u_t=inputs.u_t,
        rejected=rejected,
        abstained=False,
        wealth_after=wealth,
        r_decay_after=r_dec,
        v_decay_after=None if truth is None else v_dec,
        is_null=truth,
        clamped=clamped,
    )
    return rec, new


def force_step(
    state: StreamState, rejected: bool, inputs: StepInputs, cfg: EngineConfig
) -> StreamState:
    """Advance the state with a forced decision, bypassing the p-value.

    Used for schedule replay on counterfactual rejection histories (e.g. the
    monotonicity property suite); no validation beyond the wealth update.
    """
    t = state.t + 1
    pre_first = 0.0 if state.first_rejection_seen else 1.0
    wealth = (
        cfg.delta * state.wealth
        + (1.0 - cfg.delta) * cfg.w0 * pre_first
        - inputs.phi_t
        + (inputs.psi_t if rejected else 0.0)
    )
    kwargs = dict(
        t=t,
        tests_done=state.tests_done + 1,
        wealth=wealth,
        r_decay_u=cfg.delta * state.r_decay_u + (inputs.u_t if rejected else 0.0),
        v_decay_u=cfg.delta * state.v_decay_u,
    )
    if rejected:
        kwargs.update(
            rejection_times=state.rejection_times + (t,),
            rejection_test_idx=state.rejection_test_idx + (state.tests_done + 1,),
            rejection_rewards=state.rejection_rewards + (inputs.psi_t,),
            r_count=state.r_count + 1,
        )
    return replace(state, **kwargs)


def should_abstain(state: StreamState, cfg: EngineConfig) -> bool:
    """True iff wealth has fallen strictly below the abstinence trigger."""
    return state.wealth < cfg.eps_wealth


def should_reset(state: StreamState, cfg: EngineConfig) -> bool:
    """Reset condition: decayed (or raw) rejection count below eps_reject.

    Requires at least one past rejection, otherwise a fresh stream would
    reset immediately; the patience fallback covers zero-discovery death.
    """
    counter = float(state.r_count) if cfg.reset_on_raw_count else state.r_decay_u
    primary = state.first_rejection_seen and counter < cfg.eps_reject
    fallback = (
        cfg.abstain_reset_patience > 0
        and state.consecutive_abstains >= cfg.abstain_reset_patience
    )
    return primary or fallback


def reset(state: StreamState, cfg: EngineConfig) -> StreamState:
    """Return a fresh state (time zero, wealth W0, empty counters)."""
    if not should_reset(state, cfg):
        raise ResetNotAllowed("reset precondition not met")
    return fresh_state(cfg)


class Stream:
    """Drives one stream: weights -> policy proposal -> engine step -> ledger.

    With abstinence enabled, an incoming test is converted into an abstention
    while wealth < eps_wealth, and a reset fires after an abstained step once
    the decayed rejection count has fallen below eps_reject (the pre-reset
    records stay in the audit log). All DecisionRecords are appended to
    ``records``; reset wall-times to ``reset_times``.
    """

    def __init__(self, cfg: EngineConfig, policy, weights=None):
        from .weights import UnitWeights

        self.cfg = cfg
        self.policy = policy
        self.weights = weights if weights is not None else UnitWeights()
        self.state = fresh_state(cfg)
        self.records: list[DecisionRecord] = []
        self.reset_times: list[int] = []
        self.cumulative_alpha = 0.0

    def submit(
        self,
        obs: Observation,
        truth: bool | None = None,
        weights_override: tuple[float, float] | None = None,
    ) -> DecisionRecord:
        cfg = self.cfg
        if (
            cfg.abstinence_enabled
            and not obs.is_abstain
            and should_abstain(self.state, cfg)
        ):
            obs = Observation.abstain()
        if obs.is_abstain:
            inputs = StepInputs(0.0, 0.0, 0.0, 1.0, 1.0)
        else:
            if weights_override is not None:
                w_t, u_t = weights_override
            else:
                w_t, u_t = self.weights.emit(self.state, truth)
            b_t = budget_b(self.state, u_t, cfg)
            inputs = self.policy.propose(self.state, cfg, w_t, u_t, b_t)
        rec, self.state = step(self.state, obs, inputs, cfg, truth)
        self.records.append(rec)
        if not rec.abstained:
            self.cumulative_alpha += rec.alpha_t
        elif (
            cfg.abstinence_enabled
            and self.state.wealth < cfg.eps_wealth
            and should_reset(self.state, cfg)
        ):
            self.state = reset(self.state, cfg)
            self.reset_times.append(rec.t)
            self.cumulative_alpha = 0.0
        return rec

    def run(self, pvalues, truths=None) -> list[DecisionRecord]:
        out = []
        for i, p in enumerate(pvalues):
            truth = None if truths is None else bool(truths[i])
            out.append(self.submit(Observation.test(float(p)), truth))
        return out

"""Schedule generators: gamma spending sequences and the policy families.

Policies are pure functions of (stream state, config): given the rejection
history they propose (alpha_t, phi_t, psi_t). Gamma sequences are memoized
and extended on demand so horizonless streams work.

Gamma indexing under abstention: spending positions advance with *tested*
steps (``state.tests_done``) while decay powers use wall-clock time, so with
delta=1 an abstention is a true no-op and without abstention both clocks
coincide with the usual formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engine import StepInputs, budget_b, force_step, reward_cap
from .errors import InvalidParams
from .types import TOL, EngineConfig, StreamState, fresh_state


def gamma_lord_default(j: int) -> float:
    """Default spending sequence 0.0722 * log(j v 2) / (j * exp(sqrt(log j)))."""
    if j < 1:
        raise InvalidParams(f"gamma index must be >= 1, got {j}")
    lj = math.log(j) if j > 1 else 0.0
    return 0.0722 * math.log(max(j, 2)) / (j * math.exp(math.sqrt(lj)))


def _gamma_lord_default_array(lo: int, hi: int) -> np.ndarray:
    j = np.arange(lo, hi, dtype=np.float64)
    lj = np.log(j)
    return 0.0722 * np.log(np.maximum(j, 2.0)) / (j * np.exp(np.sqrt(lj)))


class GammaSequence:
    """Nonincreasing, nonnegative sequence with sum <= 1, lazily tabulated."""

    def __init__(self, kind: str, ratio: float | None = None, values=None):
        self.kind = kind
        self.ratio = ratio
        if kind == "lord_default":
            self._tab = np.concatenate(([0.0], _gamma_lord_default_array(1, 65)))
        elif kind == "geometric":
            if ratio is None or not (0.0 < ratio < 1.0):
                raise InvalidParams(f"geometric ratio must be in (0, 1), got {ratio}")
            self._tab = np.concatenate(([0.0], (1 - ratio) * ratio ** np.arange(64.0)))
        elif kind == "custom":
            vals = np.asarray(list(values), dtype=np.float64)
            if vals.size == 0:
                raise InvalidParams("custom gamma sequence must be nonempty")
            if np.any(vals < 0) or not np.all(np.isfinite(vals)):
                raise InvalidParams("custom gamma values must be finite and >= 0")
            if np.any(np.diff(vals) > TOL):
                raise InvalidParams("custom gamma values must be nonincreasing")
            if vals.sum() > 1.0 + TOL:
                raise InvalidParams(f"custom gamma sum {vals.sum():.6g} exceeds 1")
            self._tab = np.concatenate(([0.0], vals))
        else:
            raise InvalidParams(f"unknown gamma kind {kind!r}")

    @classmethod
    def lord_default(cls) -> "GammaSequence":
        return cls("lord_default")

    @classmethod
    def geometric(cls, ratio: float) -> "GammaSequence":
        return cls("geometric", ratio=ratio)

    @classmethod
    def custom(cls, values) -> "GammaSequence":
        return cls("custom", values=values)

    def _extend(self, n: int) -> None:
        m = self._tab.size
        while m <= n:
            m *= 2
        if self.kind == "lord_default":
            tail = _gamma_lord_default_array(self._tab.size, m)
        elif self.kind == "geometric":
            r = self.ratio
            tail = (1 - r) * r ** np.arange(self._tab.size - 1.0, m - 1.0)
        else:  # custom: zero beyond the provided list
            tail = np.zeros(m - self._tab.size)
        self._tab = np.concatenate((self._tab, tail))

    def __getitem__(self, j: int) -> float:
        if j < 1:
            raise InvalidParams(f"gamma index must be >= 1, got {j}")
        if j >= self._tab.size:
            self._extend(j)
        return float(self._tab[j])

    def table(self, n: int) -> np.ndarray:
        """gamma_1..gamma_n as a (n+1)-vector with index 0 unused (zero)."""
        if n >= self._tab.size:
            self._extend(n)
        return self._tab[: n + 1].copy()

    def descriptor(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "geometric":
            d["ratio"] = self.ratio
        if self.kind == "custom":
            d["values"] = [float(x) for x in self._tab[1:]]
        return d


# -- closed-form test levels (no-abstention forms, wall-clock indexing) -------


def lord_pp_alpha(t: int, rejection_times, cfg: EngineConfig, gamma: GammaSequence) -> float:
    """gamma_t*W0 + (alpha-W0)*gamma_{t-tau_1} + alpha * sum_{j>=2} gamma_{t-tau_j}."""
    taus = [tau for tau in rejection_times if tau < t]
    a = gamma[t] * cfg.w0
    if taus:
        a += (cfg.alpha - cfg.w0) * gamma[t - taus[0]]
        for tau in taus[1:]:
            a += cfg.alpha * gamma[t - tau]
    return a


def lord17_alpha(t: int, rejection_times, cfg: EngineConfig, gamma: GammaSequence) -> float:
    """gamma_t*W0 + B0 * sum_j gamma_{t-tau_j} with B0 = alpha - W0."""
    b0 = cfg.alpha - cfg.w0
    a = gamma[t] * cfg.w0
    for tau in rejection_times:
        if tau < t:
            a += b0 * gamma[t - tau]
    return a


def mem_lord_pp_alpha(
    t: int, rejection_times, rewards_at_rejections, cfg: EngineConfig, gamma: GammaSequence
) -> float:
    """gamma_t*W0*delta^{t-min(tau_1,t)} + sum_j delta^{t-tau_j} gamma_{t-tau_j} psi_{tau_j}."""
    taus = [tau for tau in rejection_times if tau < t]
    d = cfg.delta
    a = gamma[t] * cfg.w0 * (d ** (t - taus[0]) if taus else 1.0)
    for tau, r in zip(taus, rewards_at_rejections):
        a += d ** (t - tau) * gamma[t - tau] * r
    return a


def alpha_spending_schedule(t: int, cfg: EngineConfig, gamma: GammaSequence) -> StepInputs:
    """alpha_t = alpha*gamma_t, phi = alpha_t, psi = 0 (never earns; FWER baseline)."""
    a = cfg.alpha * gamma[t]
    return StepInputs(alpha_t=a, phi_t=a, psi_t=0.0)


def alpha_investing_schedule(
    state: StreamState, cfg: EngineConfig, spend_fraction: float
) -> StepInputs:
    """phi = f*W(t-1), alpha = phi/(1+phi), psi = phi + B0 with B0 = alpha - W0."""
    if not (0.0 < spend_fraction < 1.0):
        raise InvalidParams(f"spend_fraction must be in (0, 1), got {spend_fraction}")
    phi = spend_fraction * state.wealth
    a = phi / (1.0 + phi)
    return StepInputs(alpha_t=a, phi_t=phi, psi_t=phi + (cfg.alpha - cfg.w0))


def alpha_spend_rewards_schedule(
    state: StreamState, cfg: EngineConfig, kappa: float, c: float
) -> StepInputs:
    """alpha = c*W(t-1), phi = kappa*W(t-1), psi = the admissible cap."""
    if kappa > 1.0 or kappa < 0.0:
        raise InvalidParams(f"kappa must be in [0, 1], got {kappa}")
    if c <= 0.0:
        raise InvalidParams(f"c must be > 0, got {c}")
    a = c * state.wealth
    phi = kappa * state.wealth
    b = budget_b(state, 1.0, cfg)
    return StepInputs(alpha_t=a, phi_t=phi, psi_t=reward_cap(phi, a, 1.0, 1.0, b))


# -- policy objects ------------------------------------------------------------


class Policy:
    """Base: produce StepInputs from (state, config, weights, reward budget)."""

    family = "base"
    # kernel family code for the fast path; None means engine-only.
    kernel_family: int | None = None
    kernel_reward_mode: int | None = None

    def propose(
        self, state: StreamState, cfg: EngineConfig, w_t: float, u_t: float, b_t: float
    ) -> StepInputs:
        raise NotImplementedError

    def descriptor(self) -> dict:
        return {"family": self.family}


class _LordBase(Policy):
    def __init__(self, gamma: GammaSequence | None = None):
        self.gamma = gamma if gamma is not None else GammaSequence.lord_default()

    def _level(self, state: StreamState, cfg: EngineConfig) -> float:
        n = state.tests_done + 1
        t = state.t + 1
        g = self.gamma
        d = cfg.delta
        if state.rejection_times:
            a = g[n] * cfg.w0 * d ** (t - state.rejection_times[0])
        else:
            a = g[n] * cfg.w0
        for tau, ntau, r in zip(
            state.rejection_times, state.rejection_test_idx, state.rejection_rewards
        ):
            a += d ** (t - tau) * g[n - ntau] * r
        return a

    def descriptor(self) -> dict:
        return {"family": self.family, "gamma": self.gamma.descriptor()}


class LordPP(_LordBase):
    """Gamma-weighted spending of initial wealth plus full earned rewards."""

    family = "lord_pp"
    kernel_family = 0
    kernel_reward_mode = 1

    def propose(self, state, cfg, w_t, u_t, b_t):
        a = self._level(state, cfg)
        # with unit weights the cap collapses to b_t exactly; avoid the
        # (1 + b) - 1 round-trip so reductions are bit-identical
        if w_t == 1.0 and u_t == 1.0:
            psi = max(0.0, b_t)
        else:
            psi = reward_cap(a, a, w_t, u_t, b_t)
        return StepInputs(alpha_t=a, phi_t=a, psi_t=psi, w_t=w_t, u_t=u_t)


class MemLordPP(LordPP):
    """LordPP under a decaying-memory config; alias kept for config clarity."""

    family = "mem_lord_pp"


class Lord17(_LordBase):
    """Constant-reward variant: every rejection earns B0 = alpha - W0."""

    family = "lord17"
    kernel_family = 0
    kernel_reward_mode = 0

    def propose(self, state, cfg, w_t, u_t, b_t):
        a = self._level(state, cfg)
        return StepInputs(
            alpha_t=a, phi_t=a, psi_t=cfg.alpha - cfg.w0, w_t=w_t, u_t=u_t
        )


class AlphaSpending(Policy):
    """Bonferroni-style baseline; needs w0 = alpha so the budget covers it."""

    family = "alpha_spending"
    kernel_family = 1
    kernel_reward_mode = 1

    def __init__(self, gamma: GammaSequence | None = None):
        self.gamma = gamma if gamma is not None else GammaSequence.lord_default()

    def propose(self, state, cfg, w_t, u_t, b_t):
        si = alpha_spending_schedule(state.tests_done + 1, cfg, self.gamma)
        return StepInputs(si.alpha_t, si.phi_t, si.psi_t, w_t, u_t)

    def descriptor(self) -> dict:
        return {"family": self.family, "gamma": self.gamma.descriptor()}


class AlphaInvesting(Policy):
    """Spend a constant fraction of current wealth each step (GAI, not GAI++)."""

    family = "alpha_investing"

    def __init__(self, spend_fraction: float = 0.1):
        if not (0.0 < spend_fraction < 1.0):
            raise InvalidParams(f"spend_fraction must be in (0, 1), got {spend_fraction}")
        self.spend_fraction = spend_fraction

    def propose(self, state, cfg, w_t, u_t, b_t):
        si = alpha_investing_schedule(state, cfg, self.spend_fraction)
        return StepInputs(si.alpha_t, si.phi_t, si.psi_t, w_t, u_t)

    def descriptor(self) -> dict:
        return {"family": self.family, "spend_fraction": self.spend_fraction}


class AlphaSpendRewards(Policy):
    """alpha = c*W, phi = kappa*W, psi at the cap."""

    family = "alpha_spend_rewards"

    def __init__(self, kappa: float = 0.1, c: float = 0.1):
        if kappa > 1.0 or kappa < 0.0:
            raise InvalidParams(f"kappa must be in [0, 1], got {kappa}")
        if c <= 0.0:
            raise InvalidParams(f"c must be > 0, got {c}")
        self.kappa = kappa
        self.c = c

    def propose(self, state, cfg, w_t, u_t, b_t):
        a = self.c * state.wealth
        phi = self.kappa * state.wealth
        return StepInputs(
            alpha_t=a,
            phi_t=phi,
            psi_t=reward_cap(phi, a, w_t, u_t, b_t),
            w_t=w_t,
            u_t=u_t,
        )

    def descriptor(self) -> dict:
        return {"family": self.family, "kappa": self.kappa, "c": self.c}


class Uncorrected(Policy):
    """Fixed-level testing with no multiplicity correction (cautionary baseline)."""

    family = "uncorrected"
    kernel_family = 2
    kernel_reward_mode = 1

    def propose(self, state, cfg, w_t, u_t, b_t):
        return StepInputs(alpha_t=cfg.alpha, phi_t=0.0, psi_t=0.0, w_t=w_t, u_t=u_t)


_FAMILIES = {
    cls.family: cls
    for cls in (LordPP, MemLordPP, Lord17, AlphaSpending, AlphaInvesting, AlphaSpendRewards, Uncorrected)
}


@dataclass
class PolicySpec:
    """Config-file form of a policy: family name, gamma spec, parameters."""

    family: str
    gamma: dict = field(default_factory=lambda: {"kind": "lord_default"})
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "PolicySpec":
        if "family" not in d:
            raise InvalidParams("policy spec missing 'family'")
        return cls(
            family=d["family"],
            gamma=d.get("gamma", {"kind": "lord_default"}),
            params=d.get("params", {}),
        )

    def build(self) -> Policy:
        if self.family not in _FAMILIES:
            raise InvalidParams(
                f"unknown policy family {self.family!r}; known: {sorted(_FAMILIES)}"
            )
        cls = _FAMILIES[self.family]
        g = GammaSequence(
            self.gamma.get("kind", "lord_default"),
            ratio=self.gamma.get("ratio"),
            values=self.gamma.get("values"),
        )
        if cls in (LordPP, MemLordPP, Lord17, AlphaSpending):
            return cls(gamma=g)
        if cls is AlphaInvesting:
            return cls(**self.params)
        if cls is AlphaSpendRewards:
            return cls(**self.params)
        return cls()


def alpha_schedule(policy: Policy, cfg: EngineConfig, history) -> np.ndarray:
    """Test levels alpha_1..alpha_{len(history)+1} under a forced history.

    ``history`` is a bit sequence of rejection indicators R_1..R_{T-1}; the
    returned vector has one extra entry: the level the policy would assign at
    step T given the full history. Weights are unit.
    """
    state = fresh_state(cfg)
    out = []
    for bit in list(history) + [False]:
        b = budget_b(state, 1.0, cfg)
        si = policy.propose(state, cfg, 1.0, 1.0, b)
        out.append(si.alpha_t)
        state = force_step(state, bool(bit), si, cfg)
    return np.asarray(out)

"""Sources of prior weights w_t and penalty weights u_t.

Built-in kinds are static (independent of the rejection history), hence
trivially predictable and monotone. History-dependent custom streams must
pass a randomized monotonicity check at construction. Oracle weights peek at
ground truth and are simulation-only.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import InvalidParams, NonPositiveWeight
from .types import EngineConfig, StreamState, fresh_state


class WeightStream:
    kind = "base"
    simulation_only = False

    def emit(self, state: StreamState, truth: bool | None = None) -> tuple[float, float]:
        raise NotImplementedError

    def arrays(self, T: int, is_null=None) -> tuple[np.ndarray, np.ndarray]:
        """Per-step (w, u) vectors for a whole stream; used by the fast path."""
        raise NotImplementedError

    def descriptor(self) -> dict:
        return {"kind": self.kind}


class UnitWeights(WeightStream):
    kind = "unit"

    def emit(self, state, truth=None):
        return 1.0, 1.0

    def arrays(self, T, is_null=None):
        return np.ones(T), np.ones(T)


class ConstantWeights(WeightStream):
    kind = "constant"

    def __init__(self, w: float = 1.0, u: float = 1.0):
        if w <= 0 or u <= 0:
            raise NonPositiveWeight(f"weights must be > 0, got w={w}, u={u}")
        self.w = float(w)
        self.u = float(u)

    def emit(self, state, truth=None):
        return self.w, self.u

    def arrays(self, T, is_null=None):
        return np.full(T, self.w), np.full(T, self.u)

    def descriptor(self):
        return {"kind": self.kind, "w": self.w, "u": self.u}


class FileWeights(WeightStream):
    """CSV columns t,w,u keyed by wall step; missing rows default to (1, 1)."""

    kind = "file"

    def __init__(self, path: str):
        self.path = str(path)
        self.by_t: dict[int, tuple[float, float]] = {}
        with open(path, newline="") as f:
            for row in csv.DictReader(f):
                t = int(row["t"])
                w = float(row.get("w") or 1.0)
                u = float(row.get("u") or 1.0)
                if w <= 0 or u <= 0:
                    raise NonPositiveWeight(
                        f"{path}: row t={t} has non-positive weight (w={w}, u={u})"
                    )
                self.by_t[t] = (w, u)

    def emit(self, state, truth=None):
        return self.by_t.get(state.t + 1, (1.0, 1.0))

    def arrays(self, T, is_null=None):
        w = np.ones(T)
        u = np.ones(T)
        for t, (wt, ut) in self.by_t.items():
            if 1 <= t <= T:
                w[t - 1] = wt
                u[t - 1] = ut
        return w, u

    def descriptor(self):
        return {"kind": self.kind, "path": self.path}


class OracleWeights(WeightStream):
    """w = 1+a on non-nulls, 1-a on nulls; u = 1. Requires ground truth.

    Not predictable in the technical sense (it looks at the current label),
    which is why it never ships in the live path; it exists to reproduce the
    weighted simulation study.
    """

    kind = "oracle"
    simulation_only = True

    def __init__(self, a: float):
        if not (-1.0 < a < 1.0):
            raise InvalidParams(f"oracle weight offset a must be in (-1, 1), got {a}")
        self.a = float(a)

    def emit(self, state, truth=None):
        if truth is None:
            raise InvalidParams("oracle weights require a ground-truth label")
        w = 1.0 - self.a if truth else 1.0 + self.a
        return w, 1.0

    def arrays(self, T, is_null=None):
        if is_null is None:
            raise InvalidParams("oracle weights require ground-truth labels")
        is_null = np.asarray(is_null, dtype=bool)
        w = np.where(is_null, 1.0 - self.a, 1.0 + self.a)
        return w, np.ones(T)

    def descriptor(self):
        return {"kind": self.kind, "a": self.a}


class CustomWeights(WeightStream):
    """History-dependent weights from a user callable fn(state, truth)->(w,u).

    Validated at construction: emissions must be positive and monotone
    (flipping a past rejection 0->1 never decreases w_t or u_t), checked over
    randomized histories since the engine's guarantees require it.
    """

    kind = "custom"

    def __init__(self, fn, check_trials: int = 200, check_len: int = 30, seed: int = 0):
        self.fn = fn
        validate_monotone(self, n_trials=check_trials, length=check_len, seed=seed)

    def emit(self, state, truth=None):
        w, u = self.fn(state, truth)
        if w <= 0 or u <= 0:
            raise NonPositiveWeight(f"custom weights must be > 0, got ({w}, {u})")
        return float(w), float(u)


def next_weights(
    stream: WeightStream, state: StreamState, sim_truth: bool | None = None
) -> tuple[float, float]:
    """Emit (w_t, u_t) for the upcoming step."""
    w, u = stream.emit(state, sim_truth)
    if w <= 0 or u <= 0:
        raise NonPositiveWeight(f"weight stream emitted non-positive pair ({w}, {u})")
    return w, u


def _state_from_history(bits, cfg: EngineConfig) -> StreamState:
    from .types import replace

    state = fresh_state(cfg)
    for i, bit in enumerate(bits):
        t = i + 1
        kwargs = dict(t=t, tests_done=t)
        if bit:
            kwargs.update(
                rejection_times=state.rejection_times + (t,),
                rejection_test_idx=state.rejection_test_idx + (t,),
                rejection_rewards=state.rejection_rewards + (0.0,),
                r_count=state.r_count + 1,
                r_decay_u=cfg.delta * state.r_decay_u + 1.0,
            )
        else:
            kwargs.update(r_decay_u=cfg.delta * state.r_decay_u)
        state = replace(state, **kwargs)
    return state


def validate_monotone(
    stream: WeightStream, n_trials: int = 200, length: int = 30, seed: int = 0
) -> None:
    """Randomized check that emissions never decrease when a past R_s flips 0->1."""
    rng = np.random.default_rng(seed)
    cfg = EngineConfig(alpha=0.05, w0=0.025)
    for _ in range(n_trials):
        n = int(rng.integers(1, length + 1))
        bits = rng.random(n) < 0.3
        zeros = np.flatnonzero(~bits)
        if zeros.size == 0:
            continue
        s = int(rng.choice(zeros))
        flipped = bits.copy()
        flipped[s] = True
        base = stream.emit(_state_from_history(bits, cfg), None)
        up = stream.emit(_state_from_history(flipped, cfg), None)
        if up[0] < base[0] - 1e-12 or up[1] < base[1] - 1e-12:
            raise InvalidParams(
                "custom weight stream is not monotone in past rejections"
            )


def build_weights(spec: dict) -> WeightStream:
    """Construct a weight stream from its config-file descriptor."""
    kind = spec.get("kind", "unit")
    if kind == "unit":
        return UnitWeights()
    if kind == "constant":
        return ConstantWeights(w=spec.get("w", 1.0), u=spec.get("u", 1.0))
    if kind == "file":
        if "path" not in spec:
            raise InvalidParams("file weights need a 'path'")
        return FileWeights(spec["path"])
    if kind == "oracle":
        if "a" not in spec:
            raise InvalidParams("oracle weights need an offset 'a'")
        return OracleWeights(spec["a"])
    raise InvalidParams(f"unknown weights kind {kind!r}")

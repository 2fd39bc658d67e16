"""Domain types shared by all modules: observations, stream state, records, config.

No algorithm logic lives here. Floats are 64-bit throughout; invariant
comparisons elsewhere use the shared absolute tolerance ``TOL`` to absorb
rounding in the decay recursions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

from .errors import InvalidParams, InvalidPValue, ParseError, VersionMismatch

# Absolute tolerance for invariant comparisons (wealth, caps, budgets).
TOL = 1e-12

# Sentinel used only in file/CSV formats to encode an abstention.
ABSTAIN_SENTINEL = -1.0

STATE_FORMAT = "onlinefdr-state"
STATE_VERSION = 1


@dataclass(frozen=True)
class Observation:
    """One submission: either a p-value test or an abstention.

    Internally a tagged union (``p is None`` means abstain); the -1 sentinel
    appears only in external file formats.
    """

    p: float | None

    def __post_init__(self):
        if self.p is not None and not (0.0 <= self.p <= 1.0):
            raise InvalidPValue(f"p-value {self.p!r} outside [0, 1]")

    @classmethod
    def test(cls, p: float) -> "Observation":
        return cls(p=float(p))

    @classmethod
    def abstain(cls) -> "Observation":
        return cls(p=None)

    @property
    def is_abstain(self) -> bool:
        return self.p is None


@dataclass(frozen=True)
class EngineConfig:
    """Static parameters of one stream.

    alpha      target FDR level.
    w0         initial alpha-wealth, 0 <= w0 <= alpha.
    delta      decay factor in (0, 1]; 1 disables decay.
    eps_wealth abstain (alpha-death protection) once wealth < eps_wealth.
    eps_reject reset once the decayed rejection count drops below this.
    abstinence_enabled   master switch for abstain/reset behavior.
    reset_on_raw_count   compare eps_reject against the raw rejection count
                         instead of the decayed one (documented variant).
    abstain_reset_patience  fallback reset after this many consecutive
                         abstentions with zero discoveries; 0 disables.
    lenient    clamp oversized rewards to the cap instead of raising; the
               clamp is flagged on the decision record.
    """

    alpha: float
    w0: float
    delta: float = 1.0
    eps_wealth: float = 0.0
    eps_reject: float = 0.0
    abstinence_enabled: bool = False
    reset_on_raw_count: bool = False
    abstain_reset_patience: int = 0
    lenient: bool = False

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise InvalidParams(f"alpha must be in (0, 1], got {self.alpha}")
        if not (0.0 <= self.w0 <= self.alpha):
            raise InvalidParams(f"w0 must be in [0, alpha], got {self.w0}")
        if not (0.0 < self.delta <= 1.0):
            raise InvalidParams(f"delta must be in (0, 1], got {self.delta}")
        if self.eps_wealth < 0 or self.eps_reject < 0:
            raise InvalidParams("eps_wealth and eps_reject must be >= 0")
        if self.abstain_reset_patience < 0:
            raise InvalidParams("abstain_reset_patience must be >= 0")


@dataclass(frozen=True)
class StreamState:
    """Full accounting state of one hypothesis stream after ``t`` steps.

    ``rejection_times`` are wall-clock step indices tau_1 < tau_2 < ...;
    ``rejection_test_idx`` the tested-step ordinal of each rejection (equal to
    the wall index when the stream never abstains); ``rejection_rewards`` the
    reward earned at each. ``r_decay_u``/``v_decay_u`` are the decayed,
    penalty-weighted rejection/false-rejection counters; v is meaningful only
    on labeled (simulation) streams and stays 0 otherwise.
    """

    wealth: float
    t: int = 0
    tests_done: int = 0
    rejection_times: tuple[int, ...] = ()
    rejection_test_idx: tuple[int, ...] = ()
    rejection_rewards: tuple[float, ...] = ()
    r_count: int = 0
    r_decay_u: float = 0.0
    v_decay_u: float = 0.0
    consecutive_abstains: int = 0

    @property
    def first_rejection_seen(self) -> bool:
        return self.r_count > 0

    def check_invariants(self) -> None:
        assert self.wealth >= -TOL, f"negative wealth {self.wealth}"
        assert self.r_count == len(self.rejection_times)
        assert len(self.rejection_times) == len(self.rejection_rewards)
        assert self.r_decay_u >= self.v_decay_u - TOL >= -TOL


def fresh_state(cfg: EngineConfig) -> StreamState:
    return StreamState(wealth=cfg.w0)


@dataclass(frozen=True)
class DecisionRecord:
    """Audit row for one step. ``p`` is None for abstentions (serialized -1).

    ``psi_t`` is the scheduled reward (paid only on rejection); ``clamped``
    flags a lenient-mode reward clamp. ``is_null``/``v_decay_after`` are None
    on unlabeled (live) streams.
    """

    t: int
    p: float | None
    alpha_t: float
    phi_t: float
    psi_t: float
    b_t: float
    w_t: float
    u_t: float
    rejected: bool
    abstained: bool
    wealth_after: float
    r_decay_after: float
    v_decay_after: float | None = None
    is_null: bool | None = None
    clamped: bool = False


# -- snapshot serialization --------------------------------------------------
#
# Layout: UTF-8 JSON, one object. Header keys "format" and "version" first,
# then "state" holding every StreamState field; floats are encoded with
# float.hex() so round-trips are bit-exact. The stream-level snapshot written
# by the CLI wraps this state dict together with a config hash (see cli.py).


def _float_out(x: float) -> str:
    return float(x).hex()


def _float_in(s) -> float:
    try:
        return float.fromhex(s) if isinstance(s, str) else float(s)
    except (ValueError, TypeError) as e:
        raise ParseError(f"bad float field: {s!r}") from e


def state_to_dict(state: StreamState) -> dict:
    return {
        "wealth": _float_out(state.wealth),
        "t": state.t,
        "tests_done": state.tests_done,
        "rejection_times": list(state.rejection_times),
        "rejection_test_idx": list(state.rejection_test_idx),
        "rejection_rewards": [_float_out(r) for r in state.rejection_rewards],
        "r_count": state.r_count,
        "r_decay_u": _float_out(state.r_decay_u),
        "v_decay_u": _float_out(state.v_decay_u),
        "consecutive_abstains": state.consecutive_abstains,
    }


def state_from_dict(d: dict) -> StreamState:
    try:
        return StreamState(
            wealth=_float_in(d["wealth"]),
            t=int(d["t"]),
            tests_done=int(d["tests_done"]),
            rejection_times=tuple(int(x) for x in d["rejection_times"]),
            rejection_test_idx=tuple(int(x) for x in d["rejection_test_idx"]),
            rejection_rewards=tuple(_float_in(x) for x in d["rejection_rewards"]),
            r_count=int(d["r_count"]),
            r_decay_u=_float_in(d["r_decay_u"]),
            v_decay_u=_float_in(d["v_decay_u"]),
            consecutive_abstains=int(d.get("consecutive_abstains", 0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed state: {e}") from e


def serialize_state(state: StreamState) -> bytes:
    doc = {"format": STATE_FORMAT, "version": STATE_VERSION, "state": state_to_dict(state)}
    return json.dumps(doc, sort_keys=True).encode("utf-8")


def deserialize_state(data: bytes) -> StreamState:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(f"snapshot is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or doc.get("format") != STATE_FORMAT:
        raise ParseError("snapshot missing format header")
    if doc.get("version") != STATE_VERSION:
        raise VersionMismatch(f"unsupported state version {doc.get('version')!r}")
    return state_from_dict(doc.get("state", {}))


def config_hash(cfg: EngineConfig, extra: dict | None = None) -> str:
    """Stable hash of the engine config plus any policy/weights descriptor."""
    payload = {"engine": cfg.__dict__, "extra": extra or {}}
    blob = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


__all__ = [
    "TOL",
    "ABSTAIN_SENTINEL",
    "Observation",
    "EngineConfig",
    "StreamState",
    "DecisionRecord",
    "fresh_state",
    "serialize_state",
    "deserialize_state",
    "state_to_dict",
    "state_from_dict",
    "config_hash",
]

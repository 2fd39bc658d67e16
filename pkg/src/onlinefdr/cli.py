"""Command-line surface: live stream mode, simulation suites, verification.

Exit codes: 0 ok, 1 violation/verification failure, 2 usage/config error.
Set ONLINEFDR_LOG=debug|info|warning for stderr log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import _kernels
from .engine import Stream
from .errors import (
    ConfigError,
    InvalidParams,
    OnlineFdrError,
    ParseError,
    SnapshotError,
    VersionMismatch,
)
from .fdphat import verify_arrays
from .ledger import LedgerWriter, read_ledger
from .policies import PolicySpec
from .sim import run_suite, suite_from_config, write_outputs
from .types import (
    ABSTAIN_SENTINEL,
    EngineConfig,
    Observation,
    config_hash,
    state_from_dict,
    state_to_dict,
)
from .weights import build_weights

log = logging.getLogger("onlinefdr")

SNAPSHOT_FORMAT = "onlinefdr-snapshot"
SNAPSHOT_VERSION = 1


def _setup_logging() -> None:
    level = os.environ.get("ONLINEFDR_LOG", "warning").upper()
    logging.basicConfig(
        stream=sys.stderr, level=getattr(logging, level, logging.WARNING),
        format="%(name)s %(levelname)s %(message)s",
    )


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise ConfigError(f"{what}: cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{what}: invalid JSON in {path}: {e}") from e


def _engine_from_config(doc: dict) -> EngineConfig:
    eng = doc.get("engine", {})
    if "alpha" not in eng:
        raise ConfigError("engine.alpha: required")
    try:
        return EngineConfig(
            alpha=eng["alpha"],
            w0=eng.get("w0", eng["alpha"] / 2.0),
            delta=eng.get("delta", 1.0),
            eps_wealth=eng.get("eps_wealth", 0.0),
            eps_reject=eng.get("eps_reject", 0.0),
            abstinence_enabled=eng.get("abstinence_enabled", False),
            reset_on_raw_count=eng.get("reset_on_raw_count", False),
            abstain_reset_patience=eng.get("abstain_reset_patience", 0),
            lenient=eng.get("lenient", False),
        )
    except InvalidParams as e:
        raise ConfigError(f"engine: {e}") from e


def _build_run(doc: dict, lenient: bool):
    cfg = _engine_from_config(doc)
    if lenient and not cfg.lenient:
        cfg = EngineConfig(**{**cfg.__dict__, "lenient": True})
    try:
        policy = PolicySpec.from_dict(doc.get("policy", {"family": "lord_pp"})).build()
    except InvalidParams as e:
        raise ConfigError(f"policy: {e}") from e
    wspec = doc.get("weights", {"kind": "unit"})
    try:
        weights = build_weights(wspec)
    except InvalidParams as e:
        raise ConfigError(f"weights: {e}") from e
    if weights.simulation_only:
        raise ConfigError("weights.kind: oracle weights are simulation-only")
    h = config_hash(cfg, {"policy": policy.descriptor(), "weights": weights.descriptor()})
    return cfg, policy, weights, h


def _parse_line(line: str, expect_t: int):
    parts = [x.strip() for x in line.split(",")]
    if len(parts) not in (2, 4):
        raise ParseError(f"expected 't,p' or 't,p,w,u', got {line!r}")
    try:
        t = int(parts[0])
        p = float(parts[1])
    except ValueError as e:
        raise ParseError(f"bad numeric field in {line!r}") from e
    if t != expect_t:
        raise ParseError(f"out-of-order step: got t={t}, expected {expect_t}")
    override = None
    if len(parts) == 4:
        try:
            override = (float(parts[2]), float(parts[3]))
        except ValueError as e:
            raise ParseError(f"bad weight field in {line!r}") from e
    if p == ABSTAIN_SENTINEL:
        return Observation.abstain(), override
    return Observation.test(p), override


def _write_snapshot(path: str, stream: Stream, cfg_hash: str) -> None:
    doc = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "config_hash": cfg_hash,
        "state": state_to_dict(stream.state),
        "cumulative_alpha": float(stream.cumulative_alpha).hex(),
        "reset_times": list(stream.reset_times),
    }
    with open(path, "w") as f:
        json.dump(doc, f, sort_keys=True, indent=1)


def _load_snapshot(path: str) -> dict:
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as e:
        raise ParseError(f"cannot read snapshot {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"snapshot {path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or doc.get("format") != SNAPSHOT_FORMAT:
        raise ParseError("snapshot missing format header")
    if doc.get("version") != SNAPSHOT_VERSION:
        raise VersionMismatch(f"unsupported snapshot version {doc.get('version')!r}")
    return doc


def cmd_stream(args) -> int:
    doc = _load_json(args.config, "config")
    cfg, policy, weights, cfg_hash = _build_run(doc, args.lenient)
    stream = Stream(cfg, policy, weights)
    resumed = False
    if args.snapshot_in:
        snap = _load_snapshot(args.snapshot_in)
        if snap["config_hash"] != cfg_hash:
            raise ConfigError(
                "snapshot config_hash does not match the current config"
            )
        stream.state = state_from_dict(snap["state"])
        stream.cumulative_alpha = float.fromhex(snap["cumulative_alpha"])
        stream.reset_times = [int(x) for x in snap.get("reset_times", [])]
        resumed = True
        log.info("resumed at t=%d", stream.state.t)

    fin = sys.stdin if args.input == "-" else open(args.input)
    fout = sys.stdout if args.output == "-" else open(args.output, "w", newline="")
    try:
        writer = LedgerWriter(fout, labeled=False)
        if not resumed:
            writer.write_header()
        for raw_line in fin:
            line = raw_line.strip()
            if not line or line.startswith("#"):
                continue
            obs, override = _parse_line(line, stream.state.t + 1)
            rec = stream.submit(obs, weights_override=override)
            writer.write(rec)
        if args.snapshot_out:
            _write_snapshot(args.snapshot_out, stream, cfg_hash)
    finally:
        if fin is not sys.stdin:
            fin.close()
        if fout is not sys.stdout:
            fout.close()
    return 0


def cmd_simulate(args) -> int:
    doc = _load_json(args.config, "suite config")
    if args.seed is not None:
        doc["seed"] = args.seed
    suite = suite_from_config(doc)
    log.info("running %s suite with %s backend", suite.kind, _kernels.backend())
    result = run_suite(suite)
    written = write_outputs(result, args.out_dir, figures_data=args.figures_data)
    for path in written:
        print(path)
    return 0


def cmd_verify(args) -> int:
    cols = read_ledger(args.ledger)
    report = verify_arrays(
        cols.get("alpha_t", []), cols.get("R_t", []), args.alpha,
        t_seq=cols.get("t"),
    )
    out = json.dumps(report.to_dict(), indent=2)
    if args.json_out:
        with open(args.json_out, "w") as f:
            f.write(out + "\n")
    else:
        print(out)
    if not report.ok:
        log.warning("estimate exceeds alpha at t=%s", report.first_violation)
        return 1
    return 0


def cmd_snapshot(args) -> int:
    doc = _load_snapshot(args.file)
    state = state_from_dict(doc["state"])
    view = dict(doc)
    view["state_decoded"] = {
        "t": state.t,
        "tests_done": state.tests_done,
        "wealth": state.wealth,
        "r_count": state.r_count,
        "r_decay_u": state.r_decay_u,
        "v_decay_u": state.v_decay_u,
        "rejection_times": list(state.rejection_times),
    }
    print(json.dumps(view, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="onlinefdr",
        description="Streaming FDR control engine and simulation harness.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("stream", help="run a live p-value stream")
    sp.add_argument("--config", required=True, help="run config JSON")
    sp.add_argument("--input", default="-", help="lines 't,p[,w,u]' or 't,-1' (default stdin)")
    sp.add_argument("--output", default="-", help="ledger CSV destination (default stdout)")
    sp.add_argument("--snapshot-out", default=None, help="write state snapshot on EOF")
    sp.add_argument("--snapshot-in", default=None, help="resume from a snapshot")
    sp.add_argument("--lenient", action="store_true", help="clamp oversized rewards instead of failing")
    sp.set_defaults(func=cmd_stream)

    sp = sub.add_parser("simulate", help="run a Monte Carlo suite")
    sp.add_argument("--config", required=True, help="suite config JSON")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--seed", type=int, default=None, help="override the suite seed")
    sp.add_argument("--figures-data", action="store_true", help="also write tidy fig_*.csv")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="check sup_t fdp_hat <= alpha on a ledger")
    sp.add_argument("--ledger", required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--json-out", default=None)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("snapshot", help="decode and print a snapshot file")
    sp.add_argument("--file", required=True)
    sp.set_defaults(func=cmd_snapshot)
    return ap


def main(argv=None) -> int:
    _setup_logging()
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParseError, SnapshotError, InvalidParams) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OnlineFdrError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

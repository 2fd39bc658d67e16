"""Append-only audit ledger CSV: one row per step, human-auditable.

Columns: t,p,alpha_t,phi_t,psi_t,b_t,w_t,u_t,R_t,W_t,Rdecay_t,clamped and,
when the stream is labeled, is_null,Vdecay_t. Abstentions carry p = -1 and
zero alpha/phi/psi. Floats are written with repr (shortest round-trip).
"""

from __future__ import annotations

import csv
import io

import numpy as np

from .errors import ParseError
from .types import ABSTAIN_SENTINEL, DecisionRecord

COLUMNS = [
    "t", "p", "alpha_t", "phi_t", "psi_t", "b_t", "w_t", "u_t",
    "R_t", "W_t", "Rdecay_t", "clamped",
]
LABELED_COLUMNS = COLUMNS + ["is_null", "Vdecay_t"]


def record_row(rec: DecisionRecord) -> dict:
    row = {
        "t": rec.t,
        "p": ABSTAIN_SENTINEL if rec.abstained else rec.p,
        "alpha_t": repr(rec.alpha_t),
        "phi_t": repr(rec.phi_t),
        "psi_t": repr(rec.psi_t),
        "b_t": repr(rec.b_t),
        "w_t": repr(rec.w_t),
        "u_t": repr(rec.u_t),
        "R_t": int(rec.rejected),
        "W_t": repr(rec.wealth_after),
        "Rdecay_t": repr(rec.r_decay_after),
        "clamped": int(rec.clamped),
    }
    if rec.is_null is not None:
        row["is_null"] = int(rec.is_null)
        row["Vdecay_t"] = repr(rec.v_decay_after)
    return row


class LedgerWriter:
    """Streams rows to a file-like; flushes after every row (live contract)."""

    def __init__(self, fh, labeled: bool = False):
        self._fh = fh
        self._writer = csv.DictWriter(
            fh, fieldnames=LABELED_COLUMNS if labeled else COLUMNS
        )

    def write_header(self) -> None:
        self._writer.writeheader()
        self._fh.flush()

    def write(self, rec: DecisionRecord) -> None:
        self._writer.writerow(record_row(rec))
        self._fh.flush()


def write_ledger(records, path: str, labeled: bool | None = None) -> None:
    records = list(records)
    if labeled is None:
        labeled = any(r.is_null is not None for r in records)
    with open(path, "w", newline="") as f:
        w = LedgerWriter(f, labeled=labeled)
        w.write_header()
        for r in records:
            w.write(r)


def write_arrays_ledger(path: str, p, arrays: dict, is_null=None) -> None:
    """Ledger from a kernel run's array bundle (simulation export)."""
    T = len(p)
    u = arrays.get("u", np.ones(T))
    w = arrays.get("w", np.ones(T))
    labeled = is_null is not None
    with open(path, "w", newline="") as f:
        wr = csv.DictWriter(f, fieldnames=LABELED_COLUMNS if labeled else COLUMNS)
        wr.writeheader()
        for t in range(T):
            abst = bool(arrays["abstained"][t])
            row = {
                "t": t + 1,
                "p": ABSTAIN_SENTINEL if abst else float(p[t]),
                "alpha_t": repr(float(arrays["alpha"][t])),
                "phi_t": repr(float(arrays["alpha"][t]) if not abst else 0.0),
                "psi_t": repr(float(arrays["psi"][t])),
                "b_t": repr(float(arrays["b"][t])),
                "w_t": repr(float(w[t])),
                "u_t": repr(float(u[t])),
                "R_t": int(arrays["rejected"][t]),
                "W_t": repr(float(arrays["wealth"][t])),
                "Rdecay_t": repr(float(arrays["r_dec"][t])),
                "clamped": 0,
            }
            if labeled:
                row["is_null"] = int(is_null[t])
                row["Vdecay_t"] = repr(float(arrays["v_dec"][t]))
            wr.writerow(row)


def read_ledger(path_or_text) -> dict:
    """Parse a ledger CSV into column arrays (t, p, alpha_t, R_t, ...)."""
    if isinstance(path_or_text, str) and "\n" not in path_or_text:
        fh = open(path_or_text, newline="")
        close = True
    else:
        fh = io.StringIO(path_or_text)
        close = False
    try:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return {"t": np.empty(0, dtype=np.int64), "p": np.empty(0),
                    "alpha_t": np.empty(0), "R_t": np.empty(0, dtype=np.int64)}
        missing = [c for c in ("t", "alpha_t", "R_t") if c not in reader.fieldnames]
        if missing:
            raise ParseError(f"ledger missing columns: {missing}")
        rows = list(reader)
    finally:
        if close:
            fh.close()
    cols: dict[str, list] = {name: [] for name in (reader.fieldnames or [])}
    for i, row in enumerate(rows):
        for name in cols:
            if row.get(name) in (None, ""):
                raise ParseError(f"ledger row {i + 2}: empty field {name!r}")
            cols[name].append(row[name])
    out: dict[str, np.ndarray] = {}
    for name, vals in cols.items():
        if name in ("t", "R_t", "clamped", "is_null"):
            out[name] = np.array([int(v) for v in vals], dtype=np.int64)
        else:
            out[name] = np.array([float(v) for v in vals])
    return out

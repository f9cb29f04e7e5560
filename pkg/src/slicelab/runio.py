"""Diagnostics CSV and stopping-record files.

The CSV schema is fixed: one header, seventeen columns, absent quantities
as empty fields, floats in shortest round-trip decimal so re-parsing
reproduces every bit.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .errors import DiagnosticsFormatError
from .stochastic import StoppingRecord

CSV_HEADER = ("t, energy, l2_us, l2_ut, l2_th, w1inf_us, w1inf_ut, "
              "w1inf_th, zkp, max_div, enstrophy_q2, circulation, lambda, "
              "w_t, cutoff_us, cutoff_ut, cutoff_th")

_COLUMNS = tuple(c.strip() for c in CSV_HEADER.split(","))


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One monitored-step row; None marks a quantity that does not apply."""

    t: float
    energy: float
    l2_us: float
    l2_ut: float
    l2_th: float
    w1inf_us: float
    w1inf_ut: float
    w1inf_th: float
    zkp: float
    max_div: float
    enstrophy_q2: float
    circulation: float | None = None
    lambda_: float | None = None
    w_t: float | None = None
    cutoff_us: float | None = None
    cutoff_ut: float | None = None
    cutoff_th: float | None = None


_FIELDS = tuple(f.name for f in fields(DiagnosticsRecord))
assert len(_FIELDS) == len(_COLUMNS)


def format_row(rec: DiagnosticsRecord) -> str:
    parts = []
    for name in _FIELDS:
        v = getattr(rec, name)
        parts.append("" if v is None else repr(float(v)))
    return ",".join(parts)


def _parse_row(line: str, lineno: int) -> DiagnosticsRecord:
    parts = [p.strip() for p in line.split(",")]
    if len(parts) != len(_FIELDS):
        raise DiagnosticsFormatError(
            f"row at line {lineno} has {len(parts)} fields, "
            f"expected {len(_FIELDS)}")
    vals = [None if p == "" else float(p) for p in parts]
    return DiagnosticsRecord(*vals)


def append_diagnostics(rec: DiagnosticsRecord, path) -> None:
    """Append one row, writing the header on first use."""
    line = format_row(rec)
    if os.path.exists(path) and os.path.getsize(path) > 0:
        with open(path, "r", encoding="ascii") as fh:
            head = fh.readline().rstrip("\n")
        if head != CSV_HEADER:
            raise DiagnosticsFormatError(
                f"header mismatch in {path}: {head!r}")
        with open(path, "a", encoding="ascii") as fh:
            fh.write(line + "\n")
    else:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(CSV_HEADER + "\n")
            fh.write(line + "\n")


def read_diagnostics(path) -> list[DiagnosticsRecord]:
    with open(path, "r", encoding="ascii") as fh:
        head = fh.readline().rstrip("\n")
        if head != CSV_HEADER:
            raise DiagnosticsFormatError(
                f"header mismatch in {path}: {head!r}")
        return [_parse_row(line.rstrip("\n"), i)
                for i, line in enumerate(fh, start=2) if line.strip()]


def write_stopping_record(rec: StoppingRecord, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"kind = {rec.kind}\n")
        fh.write(f"threshold = {rec.threshold!r}\n")
        fh.write(f"triggered = {'yes' if rec.triggered else 'no'}\n")
        if rec.trigger_time is not None:
            fh.write(f"trigger_time = {rec.trigger_time!r}\n")
        fh.write(f"trigger_value = {rec.trigger_value!r}\n")


def read_stopping_record(path) -> StoppingRecord:
    kv = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            if "=" in line:
                key, _, val = line.partition("=")
                kv[key.strip()] = val.strip()
    return StoppingRecord(
        kind=kv["kind"],
        threshold=float(kv["threshold"]),
        triggered=kv["triggered"] == "yes",
        trigger_time=(float(kv["trigger_time"])
                      if "trigger_time" in kv else None),
        trigger_value=float(kv["trigger_value"]))


def write_key_values(pairs, path) -> None:
    # summary files for the MC and convergence modes share this shape
    with open(path, "w", encoding="ascii") as fh:
        for key, value in pairs:
            if isinstance(value, float):
                fh.write(f"{key} = {value!r}\n")
            else:
                fh.write(f"{key} = {value}\n")

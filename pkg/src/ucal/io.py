"""CSV and JSON formats for transcripts, reports, rules and utilities.

Transcript CSV: header ``t,x,p`` (binary) or ``t,x,p_1,...,p_K``. Rounds are
numbered from 1. Binary outcomes are written as 0/1; multiclass outcomes are
written as 1-based class labels. Reals use 17 significant digits, so a
write/read round trip is exact.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .agents import UtilityMatrix
from .metrics import RegretReport
from .scoring import rule_from_json
from .transcript import Transcript, TranscriptError


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_transcript(t: Transcript, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if t.is_binary:
            w.writerow(["t", "x", "p"])
            for i, (x, p) in enumerate(zip(t.outcomes, t.predictions), start=1):
                w.writerow([i, int(x), fmt(p)])
        else:
            w.writerow(["t", "x"] + [f"p_{k}" for k in range(1, t.K + 1)])
            for i, (x, row) in enumerate(zip(t.outcomes, t.predictions), start=1):
                w.writerow([i, int(x) + 1] + [fmt(v) for v in row])


def read_transcript(path) -> Transcript:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise TranscriptError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    if header[:2] != ["t", "x"] or len(header) < 3:
        raise TranscriptError(f"{path}: header must start with t,x and name prediction columns")
    try:
        data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    except ValueError as exc:
        raise TranscriptError(f"{path}: {exc}") from None
    if header[2:] == ["p"]:
        return Transcript(data[:, 2], data[:, 1], K=2, meta={"source": str(path)})
    K = len(header) - 2
    if header[2:] != [f"p_{k}" for k in range(1, K + 1)]:
        raise TranscriptError(f"{path}: prediction columns must be p or p_1..p_K")
    return Transcript(data[:, 2:], data[:, 1] - 1, K=K, meta={"source": str(path)})


def write_report_csv(reports: list[RegretReport], path) -> None:
    """One row per report; the column order is that of the first report plus any extras."""
    cols: list[str] = []
    for r in reports:
        for c in r.columns():
            if c not in cols:
                cols.append(c)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in reports:
            row = r.row()
            w.writerow([fmt(row[c]) if c in row else "" for c in cols])


def to_jsonable(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=to_jsonable) + "\n")


def load_rules(source) -> dict:
    """Rules from a JSON list (inline text or a file path); names come from ``name`` or the index."""
    text = Path(source).read_text() if Path(source).is_file() else source
    objs = json.loads(text)
    if isinstance(objs, dict):
        objs = [objs]
    rules = {}
    for i, obj in enumerate(objs):
        name = obj.get("name") or f"{obj.get('kind', 'rule')}{i}"
        rules[name] = rule_from_json(obj)
    return rules


def load_utility(path) -> UtilityMatrix:
    return UtilityMatrix.from_json(json.loads(Path(path).read_text()))

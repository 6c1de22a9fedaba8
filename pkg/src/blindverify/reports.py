"""Report documents: JSON, CSV and JSON-lines writers.

Every report carries a ``generated_at`` timestamp; it is the only field that is
allowed to differ between two runs with the same configuration and seed.
"""
from __future__ import annotations

import csv
import datetime as _dt
import io
import json
from typing import Any, Iterable, Optional

import numpy as np

TIMESTAMP_KEY = "generated_at"
# output destinations are not part of an experiment's identity
_UNRECORDED = ("out", "transcripts")


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if hasattr(obj, "to_json"):
        return _plain(obj.to_json())
    return obj


def make_report(command: str, config: dict, results: Any, rows: Optional[list] = None) -> dict:
    config = {k: v for k, v in config.items() if k not in _UNRECORDED}
    doc = {"command": command, "config": _plain(config), "results": _plain(results)}
    if rows is not None:
        doc["rows"] = _plain(rows)
    doc[TIMESTAMP_KEY] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return doc


def strip_timestamp(doc: Any) -> Any:
    if isinstance(doc, dict):
        return {k: strip_timestamp(v) for k, v in doc.items() if k != TIMESTAMP_KEY}
    if isinstance(doc, list):
        return [strip_timestamp(v) for v in doc]
    return doc


def to_json_text(doc: dict) -> str:
    return json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n"


def _flatten(row: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in row.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = " ".join(str(x) for x in v)
        else:
            out[key] = v
    return out


def to_csv_text(doc: dict) -> str:
    """One line per entry of ``rows`` (or a single summary line) plus a timestamp column."""
    rows = doc.get("rows") or [doc.get("results", {})]
    flat = [_flatten(_plain(r)) for r in rows]
    for r in flat:
        r[TIMESTAMP_KEY] = doc.get(TIMESTAMP_KEY, "")
    fields = []
    for r in flat:
        fields.extend(k for k in r if k not in fields)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(flat)
    return buf.getvalue()


def render(doc: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return to_json_text(doc)
    if fmt == "csv":
        return to_csv_text(doc)
    raise ValueError(f"unknown format {fmt!r}")


def write_jsonl(records: Iterable[Any], path) -> int:
    n = 0
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(_plain(rec), sort_keys=True) + "\n")
            n += 1
    return n

"""Serialization of reports, solve results and experiment records.

Machine formats print floats with 17 significant digits so they round-trip
exactly; non-finite values become the strings ``"inf"``, ``"-inf"``, ``"nan"``.
"""

from __future__ import annotations

import dataclasses
import io
import math

import numpy as np

from .errors import UnsupportedFormat


def plain(obj):
    """Convert dataclasses, numpy values and tuples to plain Python containers."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return plain(obj.to_dict())
        return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def format_float(val: float) -> str:
    if math.isnan(val):
        return '"nan"'
    if math.isinf(val):
        return '"inf"' if val > 0 else '"-inf"'
    return format(val, ".17g")


def _escape(text: str) -> str:
    out = text.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
    return '"' + out + '"'


def dumps_json(obj, indent: int | None = None) -> str:
    """JSON text with ``%.17g`` floats and deterministic key order."""

    def enc(val, level):
        pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
        end = "" if indent is None else "\n" + " " * (indent * level)
        sep = "," if indent is None else ","
        if val is None:
            return "null"
        if isinstance(val, bool):
            return "true" if val else "false"
        if isinstance(val, int):
            return str(val)
        if isinstance(val, float):
            return format_float(val)
        if isinstance(val, str):
            return _escape(val)
        if isinstance(val, dict):
            if not val:
                return "{}"
            items = [pad + _escape(k) + ": " + enc(v, level + 1) for k, v in val.items()]
            return "{" + sep.join(items) + end + "}"
        if isinstance(val, list):
            if not val:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in val):
                return "[" + ", ".join(enc(v, level + 1) for v in val) + "]"
            items = [pad + enc(v, level + 1) for v in val]
            return "[" + sep.join(items) + end + "]"
        raise TypeError(f"cannot serialize {type(val).__name__}")

    return enc(plain(obj), 0)


def csv_cell(val) -> str:
    val = plain(val)
    if val is None:
        return ""
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return format_float(val).strip('"')
    text = str(val)
    if any(ch in text for ch in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def csv_text(header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(csv_cell(row.get(col)) for col in header) + "\n")
    return buf.getvalue()


def text_summary(report) -> str:
    if hasattr(report, "summary"):
        return report.summary()
    data = plain(report)
    if isinstance(data, dict):
        keys = [k for k in ("phi", "kappa", "zeta_p", "zeta_d", "xi") if k in data]
        if keys:
            return " ".join(f"{k}={data[k]:.6g}" for k in keys)
        parts = []
        for k, v in data.items():
            if isinstance(v, dict):
                parts.extend(f"{k}.{kk}={vv:.6g}" for kk, vv in v.items() if isinstance(vv, (int, float)))
            elif not isinstance(v, list):
                parts.append(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}")
        return " ".join(parts)
    if isinstance(data, list):
        return f"{len(data)} records"
    return str(data)


def emit_report(report, fmt: str = "json", header: list[str] | None = None) -> bytes:
    """Render a report, solve result or record list as json, csv or text."""
    if fmt == "json":
        return (dumps_json(report, indent=1) + "\n").encode()
    if fmt == "csv":
        rows = report if isinstance(report, list) else [report]
        rows = [plain(r) for r in rows]
        if header is None:
            if not rows:
                raise UnsupportedFormat("an empty record list needs an explicit csv header")
            header = [k for k, v in rows[0].items() if not isinstance(v, (dict, list))]
        return csv_text(header, rows).encode()
    if fmt == "text":
        return (text_summary(report) + "\n").encode()
    raise UnsupportedFormat(f"unknown format {fmt!r}; use json, csv or text")

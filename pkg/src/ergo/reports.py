"""Report serialisation: JSON with stable key order and CSV tables, floats at 9 significant digits."""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .cuts import CutProfile
from .errors import InputError, IOFailure
from .resilience import ResilienceReport

SCHEMA_VERSION = 1


def format_float(x: float) -> str:
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, "#.9g")


def to_plain(obj):
    """Dataclasses, numpy scalars/arrays and tuples converted to builtin containers."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_encode(str(k), indent, level)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise InputError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(to_plain(obj), indent, 0) + "\n"


def envelope(command: str, config: dict, seed: int, results, target_total: int | None = None) -> dict:
    """Common wrapper every emitted JSON report shares."""
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "log": "natural",
        "seed": seed,
        "target_total": target_total,
        "config": config,
        "results": results,
    }


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        s = format_float(float(v))
        return s.strip('"') if s != "null" else "nan"
    return str(v)


def csv_text(header: list[str], rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_csv_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def csv_table(report) -> tuple[list[str], list[tuple]]:
    if isinstance(report, CutProfile):
        return ["u", "min_ratio", "samples"], [
            (u, r, report.samples_per_bucket) for u, r in zip(report.size_buckets, report.min_ratio)
        ]
    if isinstance(report, ResilienceReport):
        return ["p", "estimate", "ci_low", "ci_high", "isolation_bound"], list(
            zip(report.p_grid, report.disconnect_prob, report.ci_low, report.ci_high, report.isolation_bound)
        )
    if isinstance(report, tuple) and len(report) == 2:
        return report
    raise InputError(f"no CSV layout for {type(report).__name__}")


def render(report, fmt: str) -> str:
    if fmt == "json":
        return dumps(report)
    if fmt == "csv":
        return csv_text(*csv_table(report))
    raise InputError(f"unknown report format {fmt!r}")


def emit_report(report, fmt: str, path) -> Path:
    text = render(report, fmt)
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc
    return path


def energy_trace_csv(trace) -> tuple[list[str], list[tuple]]:
    return ["step", "energy"], [(i, int(e)) for i, e in enumerate(trace)]

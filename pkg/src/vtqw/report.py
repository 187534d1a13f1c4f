"""Deterministic JSON reports: stable key order, fixed float formatting.

Two runs with identical scenario and seeds must produce byte-identical
reports, so floats are rendered with 17 significant digits, keys are
sorted, and every report embeds the configuration snapshot it ran under.
The emitter is hand-rolled because the stdlib encoder always uses the
shortest round-trip representation for floats.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .config import Config, DEFAULT


def _format_float(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    text = format(v, ".17g")
    # make integral floats recognizable as floats
    if "e" not in text and "E" not in text and "." not in text:
        text += ".0"
    return text


def _emit(value: Any, indent: int, out: list) -> None:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(value, dict):
        items = sorted(value.items(), key=lambda kv: str(kv[0]))
        if not items:
            out.append("{}")
            return
        out.append("{\n")
        for pos, (key, val) in enumerate(items):
            out.append(inner + json.dumps(str(key)) + ": ")
            _emit(val, indent + 1, out)
            out.append(",\n" if pos + 1 < len(items) else "\n")
        out.append(pad + "}")
    elif isinstance(value, (list, tuple)):
        if not value:
            out.append("[]")
            return
        out.append("[\n")
        for pos, val in enumerate(value):
            out.append(inner)
            _emit(val, indent + 1, out)
            out.append(",\n" if pos + 1 < len(value) else "\n")
        out.append(pad + "]")
    elif isinstance(value, (bool, np.bool_)):
        out.append("true" if value else "false")
    elif isinstance(value, (np.floating, float)):
        out.append(_format_float(float(value)))
    elif isinstance(value, (np.integer, int)):
        out.append(str(int(value)))
    elif isinstance(value, complex):
        _emit([value.real, value.imag], indent, out)
    elif isinstance(value, np.ndarray):
        _emit(value.tolist(), indent, out)
    elif value is None:
        out.append("null")
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=True))
    else:
        out.append(json.dumps(str(value), ensure_ascii=True))


def render_report(payload: dict, config: Config = DEFAULT) -> str:
    doc = dict(payload)
    doc["config"] = config.snapshot()
    out: list = []
    _emit(doc, 0, out)
    return "".join(out) + "\n"


def write_report(path, payload: dict, config: Config = DEFAULT) -> str:
    text = render_report(payload, config)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)
    return text

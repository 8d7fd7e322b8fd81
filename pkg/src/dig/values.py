"""Typed values: canonical text rendering and JSON (de)serialization.

Rendering rules (used when a bound value is spliced into a query string):
ints and floats print in plain decimal form, strings and relation/attribute
names verbatim (quoting belongs to the grammar's literals), dates as
ISO-8601, multi-column rows as comma-space joined members.
"""

from __future__ import annotations

import datetime
from typing import Any, Union

Value = Union[int, float, str, datetime.date, tuple]


def render_value(value: Value) -> str:
    if isinstance(value, bool):
        raise TypeError("booleans are not domain values")
    if isinstance(value, (int, str)):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, datetime.date):
        return value.isoformat()
    if isinstance(value, tuple):
        return ", ".join(render_value(v) for v in value)
    raise TypeError(f"cannot render {value!r}")


def value_type_name(value: Value) -> str:
    if isinstance(value, bool):
        raise TypeError("booleans are not domain values")
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "str"
    if isinstance(value, datetime.date):
        return "date"
    if isinstance(value, tuple):
        return "tuple"
    raise TypeError(f"unsupported value {value!r}")


def value_to_json(value: Value) -> dict[str, Any]:
    kind = value_type_name(value)
    if kind == "date":
        return {"type": "date", "value": value.isoformat()}
    if kind == "tuple":
        return {"type": "tuple", "value": [value_to_json(v) for v in value]}
    return {"type": kind, "value": value}


def value_from_json(data: dict[str, Any]) -> Value:
    kind = data["type"]
    raw = data["value"]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "str":
        return str(raw)
    if kind == "date":
        return datetime.date.fromisoformat(raw)
    if kind == "tuple":
        return tuple(value_from_json(v) for v in raw)
    raise ValueError(f"unknown value type {kind!r}")


def coerce_value(value: Any) -> Value:
    """Normalize values arriving from JSON payloads or SQL rows."""
    if isinstance(value, bool):
        raise TypeError("booleans are not domain values")
    if isinstance(value, (int, float, str, datetime.date)):
        return value
    if isinstance(value, (list, tuple)):
        return tuple(coerce_value(v) for v in value)
    raise TypeError(f"unsupported value {value!r}")

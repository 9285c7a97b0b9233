"""Canonical JSON serialization.

Object keys are sorted lexicographically by UTF-16 code unit at every
nesting level, whitespace is omitted, and integers are rendered without
an exponent. The output is stable: parsing and re-serializing yields
identical bytes.
"""

import json
import math


class NotSerializable(TypeError):
    pass


def _utf16_key(key: str) -> bytes:
    # big-endian UTF-16 compares code unit by code unit
    if not isinstance(key, str):
        raise NotSerializable(f"non-string key: {key!r}")
    return key.encode("utf-16-be")


def _render(value, out: list) -> None:
    if value is None:
        out.append("null")
    elif value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise NotSerializable("NaN/Infinity are not representable")
        if value == int(value) and abs(value) < 1e15:
            out.append(str(int(value)))
        else:
            out.append(repr(value))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, item in enumerate(value):
            if i:
                out.append(",")
            _render(item, out)
        out.append("]")
    elif isinstance(value, dict):
        out.append("{")
        for i, key in enumerate(sorted(value, key=_utf16_key)):
            if not isinstance(key, str):
                raise NotSerializable(f"non-string key: {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _render(value[key], out)
        out.append("}")
    else:
        raise NotSerializable(f"cannot canonicalize {type(value).__name__}")


def canonical_json(value) -> bytes:
    out: list = []
    _render(value, out)
    return "".join(out).encode("utf-8")

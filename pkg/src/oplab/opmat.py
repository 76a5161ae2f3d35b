"""Reading and writing dense operators as ``opmat v1`` files.

A file is a single JSON header line followed by one base64 line holding the
matrix entries as little-endian complex128 pairs in row-major order.  The
header pins down the window (representation and radius) and the basis
convention, so a load either reproduces the operator bit for bit or fails
with a specific error.
"""

from __future__ import annotations

import base64
import binascii
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import OpmatDimensionError, OpmatHeaderError, OpmatPayloadError
from .operators import Operator
from .windows import BASIS_TAG, TruncationWindow

FORMAT_TAG = "opmat v1"

_HEADER_FIELDS = ("format", "representation", "radius", "basis", "name", "dimension")


def _header_for(op: Operator, name: str) -> dict:
    window = op.window
    if not isinstance(window, TruncationWindow):
        raise OpmatHeaderError(
            "only operators on a plain truncation window can be saved; "
            f"got {type(window).__name__}"
        )
    return {
        "format": FORMAT_TAG,
        "representation": window.representation,
        "radius": window.radius_text(),
        "basis": BASIS_TAG,
        "name": name,
        "dimension": window.dimension,
    }


def dumps_operator(op: Operator, name: str = "") -> str:
    """Serialize ``op`` to the two-line text form."""
    header = _header_for(op, name or op.tags.get("name", ""))
    payload = np.ascontiguousarray(op.entries, dtype="<c16").tobytes(order="C")
    body = base64.b64encode(payload).decode("ascii")
    return json.dumps(header, sort_keys=True) + "\n" + body + "\n"


def save_operator(op: Operator, path: str | Path, name: str = "") -> Path:
    path = Path(path)
    path.write_text(dumps_operator(op, name), encoding="ascii")
    return path


def _parse_header(line: str) -> dict:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise OpmatHeaderError(f"header line is not valid JSON: {exc}") from exc
    if not isinstance(header, dict):
        raise OpmatHeaderError("header line must be a JSON object")
    missing = [f for f in _HEADER_FIELDS if f not in header]
    if missing:
        raise OpmatHeaderError(f"header is missing fields: {', '.join(missing)}")
    if header["format"] != FORMAT_TAG:
        raise OpmatHeaderError(f"unsupported format tag {header['format']!r}")
    if header["basis"] != BASIS_TAG:
        raise OpmatHeaderError(f"unknown basis convention {header['basis']!r}")
    if header["representation"] not in ("Z", "Z2"):
        raise OpmatHeaderError(f"unknown representation {header['representation']!r}")
    if not isinstance(header["dimension"], int) or header["dimension"] <= 0:
        raise OpmatHeaderError("dimension must be a positive integer")
    return header


def _window_from_header(header: dict) -> TruncationWindow:
    try:
        radius = Fraction(header["radius"])
    except (ValueError, ZeroDivisionError) as exc:
        raise OpmatHeaderError(f"unreadable radius {header['radius']!r}") from exc
    if header["representation"] == "Z":
        window = TruncationWindow.line(radius)
    else:
        window = TruncationWindow.plane(radius)
    if window.dimension != header["dimension"]:
        raise OpmatDimensionError(
            f"header claims dimension {header['dimension']} but the "
            f"{header['representation']} window of radius {header['radius']} "
            f"has {window.dimension} sites"
        )
    return window


def loads_operator(text: str) -> Operator:
    """Parse the two-line text form back into an operator."""
    head, sep, body = text.partition("\n")
    if not sep:
        raise OpmatHeaderError("file has no header line")
    header = _parse_header(head)
    window = _window_from_header(header)
    try:
        raw = base64.b64decode(body.strip(), validate=True)
    except (binascii.Error, ValueError) as exc:
        raise OpmatPayloadError(f"payload is not valid base64: {exc}") from exc
    d = header["dimension"]
    expected = d * d * 16
    if len(raw) != expected:
        raise OpmatPayloadError(
            f"payload holds {len(raw)} bytes, expected {expected} for a "
            f"{d}x{d} complex matrix"
        )
    entries = np.frombuffer(raw, dtype="<c16").reshape(d, d).astype(np.complex128)
    tags = {"name": header["name"]} if header["name"] else {}
    return Operator(window, entries, tags)


def load_operator(path: str | Path) -> Operator:
    return loads_operator(Path(path).read_text(encoding="ascii"))

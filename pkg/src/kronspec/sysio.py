"""JSON system files and complex-number serialization for the CLI.

A system file is a JSON document::

    {
      "d": 2,
      "m": 1,
      "A": [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.7, 0.0]]],
      "B": [ ...m matrices shaped like A... ]
    }

Every complex number is a two-element ``[re, im]`` array.  Parse failures
carry a location: line/column for malformed JSON, a JSON path like ``A[0][1]``
for structural problems.
"""

from __future__ import annotations

import json
import math
import numbers

import numpy as np

from .matrices import SystemSpec


class SystemFileError(ValueError):
    """Malformed system file or vector; ``location`` points at the offender."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{message} (at {location})" if location else message)


def _parse_complex(node, loc: str) -> complex:
    if (
        not isinstance(node, (list, tuple))
        or len(node) != 2
        or not all(isinstance(p, numbers.Real) and not isinstance(p, bool) for p in node)
    ):
        raise SystemFileError("complex entries must be [re, im] pairs of numbers", loc)
    re, im = float(node[0]), float(node[1])
    if not (math.isfinite(re) and math.isfinite(im)):
        raise SystemFileError("non-finite complex entry", loc)
    return complex(re, im)


def _parse_matrix(node, d: int, loc: str) -> np.ndarray:
    if not isinstance(node, list) or len(node) != d:
        raise SystemFileError(f"expected {d} rows", loc)
    out = np.empty((d, d), dtype=np.complex128)
    for i, row in enumerate(node):
        if not isinstance(row, list) or len(row) != d:
            raise SystemFileError(f"expected {d} entries", f"{loc}[{i}]")
        for j, entry in enumerate(row):
            out[i, j] = _parse_complex(entry, f"{loc}[{i}][{j}]")
    return out


def parse_system(doc) -> SystemSpec:
    """Build a :class:`SystemSpec` from a decoded system-file document."""
    if not isinstance(doc, dict):
        raise SystemFileError("system file must be a JSON object")
    for key in ("d", "m", "A", "B"):
        if key not in doc:
            raise SystemFileError(f"missing required key {key!r}")
    d, m = doc["d"], doc["m"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise SystemFileError("'d' must be a positive integer", "d")
    if not isinstance(m, int) or isinstance(m, bool) or m < 0:
        raise SystemFileError("'m' must be a nonnegative integer", "m")
    a = _parse_matrix(doc["A"], d, "A")
    if not isinstance(doc["B"], list) or len(doc["B"]) != m:
        raise SystemFileError(f"'B' must be a list of {m} matrices", "B")
    noise = tuple(_parse_matrix(bk, d, f"B[{k}]") for k, bk in enumerate(doc["B"]))
    try:
        return SystemSpec(a, noise)
    except ValueError as exc:
        raise SystemFileError(str(exc)) from exc


def load_system(path) -> SystemSpec:
    """Read and validate a system file from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemFileError(
            f"invalid JSON: {exc.msg}", f"line {exc.lineno}, column {exc.colno}"
        ) from exc
    return parse_system(doc)


def parse_vector(source, d: int | None = None) -> np.ndarray:
    """Parse a vector given as JSON text or a decoded list of [re, im] pairs."""
    if isinstance(source, str):
        try:
            source = json.loads(source)
        except json.JSONDecodeError as exc:
            raise SystemFileError(
                f"invalid vector JSON: {exc.msg}", f"column {exc.colno}"
            ) from exc
    if not isinstance(source, list) or not source:
        raise SystemFileError("vector must be a nonempty JSON array of [re, im] pairs")
    out = np.array([_parse_complex(e, f"[{i}]") for i, e in enumerate(source)])
    if d is not None and out.shape[0] != d:
        raise SystemFileError(f"vector has dimension {out.shape[0]}, expected {d}")
    return out


def complex_pair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def matrix_pairs(m: np.ndarray) -> list[list[list[float]]]:
    return [[complex_pair(z) for z in row] for row in np.asarray(m, dtype=np.complex128)]


def vector_pairs(v: np.ndarray) -> list[list[float]]:
    return [complex_pair(z) for z in np.asarray(v, dtype=np.complex128)]


def system_document(spec: SystemSpec) -> dict:
    """Serialize a system back to the file schema (round-trips exactly)."""
    return {
        "d": spec.d,
        "m": spec.m,
        "A": matrix_pairs(spec.a),
        "B": [matrix_pairs(b) for b in spec.noise_mats],
    }

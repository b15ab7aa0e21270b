"""Operator and candidate spec files.

Both formats are JSON documents (plain text, key-value plus nested
arrays).  Floats are written with Python's shortest round-trip repr, so
decimal literals with up to 17 significant digits survive a load/save
cycle bit-exactly.

Operator file:

    {"dim": 3,
     "Q": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
     "A": [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]}

Candidate file (declarative; arbitrary functions enter only via the API):

    {"candidates": [
        {"type": "constant", "value": 1.0},
        {"type": "affine", "b": [0.0, 0.0, 1.0], "offset": 0.0},
        {"type": "quadratic", "M": [[...], ...]},
        {"type": "bounded-1d", "a": 1.0, "q": 1.0, "direction": [1.0]}]}
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .candidates import (
    HarmonicCandidate,
    affine_candidate,
    constant_candidate,
    counterexample_1d,
    quadratic_candidate,
)
from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import InvalidOperatorError, SpecFileError
from .operators import OperatorSpec

__all__ = ["load_operator", "save_operator", "load_candidates", "save_candidates"]


def _read_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecFileError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFileError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise SpecFileError(f"{path}: top level must be an object")
    return doc


def _matrix(doc: dict, key: str, dim: int, path) -> np.ndarray:
    if key not in doc:
        raise SpecFileError(f"{path}: missing field {key!r}")
    rows = doc[key]
    if not isinstance(rows, list) or len(rows) != dim:
        raise SpecFileError(f"{path}: {key} must be a list of {dim} rows")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise SpecFileError(
                f"{path}: {key} row {i + 1} has {len(row) if isinstance(row, list) else 'no'}"
                f" entries, expected {dim}"
            )
        for j, v in enumerate(row):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise SpecFileError(
                    f"{path}: {key} row {i + 1}, column {j + 1} is not a number"
                )
    return np.array(rows, dtype=float)


def load_operator(path, tol: Tolerances = DEFAULT_TOLERANCES) -> OperatorSpec:
    """Load and validate an operator file."""
    doc = _read_json(path)
    dim = doc.get("dim")
    if not isinstance(dim, int) or dim < 1:
        raise SpecFileError(f"{path}: 'dim' must be a positive integer")
    Q = _matrix(doc, "Q", dim, path)
    A = _matrix(doc, "A", dim, path)
    try:
        return OperatorSpec(Q, A, tol)
    except InvalidOperatorError as exc:
        raise SpecFileError(f"{path}: {exc}") from exc


def save_operator(path, spec: OperatorSpec) -> None:
    doc = {"dim": spec.dim, "Q": spec.Q.tolist(), "A": spec.A.tolist()}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


_BUILDERS = {
    "constant": lambda e, dim: constant_candidate(_num(e, "value"), dim),
    "affine": lambda e, dim: affine_candidate(
        _vec(e, "b"), float(e.get("offset", 0.0))
    ),
    "quadratic": lambda e, dim: quadratic_candidate(e["M"]),
    "bounded-1d": lambda e, dim: counterexample_1d(
        _num(e, "a"), _num(e, "q"), direction=e.get("direction")
    ),
}


def _num(e: dict, key: str) -> float:
    if key not in e or isinstance(e[key], bool) or not isinstance(e[key], (int, float)):
        raise SpecFileError(f"candidate entry is missing numeric field {key!r}")
    return float(e[key])


def _vec(e: dict, key: str):
    if key not in e or not isinstance(e[key], list):
        raise SpecFileError(f"candidate entry is missing vector field {key!r}")
    return e[key]


def load_candidates(path, dim: int | None = None) -> list[HarmonicCandidate]:
    """Load the declarative candidate list.

    ``dim`` (from the operator in play) resolves dimension for entries
    that do not imply one, e.g. constants.
    """
    doc = _read_json(path)
    entries = doc.get("candidates")
    if not isinstance(entries, list) or not entries:
        raise SpecFileError(f"{path}: 'candidates' must be a non-empty list")
    out = []
    for i, e in enumerate(entries):
        if not isinstance(e, dict) or "type" not in e:
            raise SpecFileError(f"{path}: candidate {i + 1} must be an object with a 'type'")
        kind = e["type"]
        if kind not in _BUILDERS:
            raise SpecFileError(
                f"{path}: candidate {i + 1} has unknown type {kind!r}; "
                f"known types: {sorted(_BUILDERS)}"
            )
        if kind == "constant" and dim is None:
            raise SpecFileError(
                f"{path}: candidate {i + 1} (constant) needs an operator to fix the dimension"
            )
        try:
            cand = _BUILDERS[kind](e, dim or 1)
        except (KeyError, ValueError, TypeError) as exc:
            raise SpecFileError(f"{path}: candidate {i + 1}: {exc}") from exc
        if dim is not None and cand.dim != dim:
            raise SpecFileError(
                f"{path}: candidate {i + 1} has dimension {cand.dim}, operator has {dim}"
            )
        out.append(cand)
    return out


def save_candidates(path, candidates: list[HarmonicCandidate]) -> None:
    entries = []
    for c in candidates:
        if "type" not in c.meta:
            raise SpecFileError(f"candidate {c.name} is not declarative; cannot serialize")
        entries.append(c.meta)
    Path(path).write_text(json.dumps({"candidates": entries}, indent=2) + "\n")

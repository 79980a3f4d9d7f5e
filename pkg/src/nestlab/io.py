"""JSON encodings of matrices and nests.

A matrix is ``{"rows": r, "cols": c, "entries": [[re, im], ...]}`` in
row-major order.  A nest is ``{"dim": n, "dims": [0, ..., n], "basis":
<matrix>}``.  Floats are written with Python's shortest round-trip repr,
so parsing a serialised object gives back the same bits.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Union

import numpy as np

from nestlab.linalg import DEFAULT_TOL, Tolerances
from nestlab.nests import Nest, nest_from_flag


class ParseError(ValueError):
    """Input is not a well-formed MatrixFile / NestFile."""


def matrix_to_dict(a) -> dict:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in a.ravel()],
    }


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def matrix_from_dict(obj: Any) -> np.ndarray:
    if not isinstance(obj, dict):
        raise ParseError("matrix must be a JSON object")
    try:
        rows, cols, entries = obj["rows"], obj["cols"], obj["entries"]
    except KeyError as exc:
        raise ParseError(f"matrix is missing key {exc}") from None
    if not (isinstance(rows, int) and isinstance(cols, int)) or rows < 1 or cols < 1:
        raise ParseError("rows and cols must be positive integers")
    if not isinstance(entries, list) or len(entries) != rows * cols:
        raise ParseError(f"expected {rows * cols} entries")
    out = np.empty(rows * cols, dtype=np.complex128)
    for i, e in enumerate(entries):
        if not (isinstance(e, list) and len(e) == 2 and all(_is_number(x) for x in e)):
            raise ParseError(f"entry {i} is not a [re, im] pair")
        if not all(math.isfinite(x) for x in e):
            raise ParseError(f"entry {i} is not finite")
        out[i] = complex(e[0], e[1])
    return out.reshape(rows, cols)


def nest_to_dict(n: Nest) -> dict:
    return {"dim": n.dim, "dims": list(n.dims), "basis": matrix_to_dict(n.basis)}


def nest_file_from_dict(obj: Any):
    """Validate the NestFile layout and return ``(dims, basis)``."""
    if not isinstance(obj, dict):
        raise ParseError("nest must be a JSON object")
    try:
        dim, dims, basis = obj["dim"], obj["dims"], obj["basis"]
    except KeyError as exc:
        raise ParseError(f"nest is missing key {exc}") from None
    if not isinstance(dim, int) or dim < 1:
        raise ParseError("dim must be a positive integer")
    if not (isinstance(dims, list) and all(isinstance(d, int) and not isinstance(d, bool) for d in dims)):
        raise ParseError("dims must be a list of integers")
    b = matrix_from_dict(basis)
    if b.shape != (dim, dim):
        raise ParseError(f"basis must be {dim}x{dim}, got {b.shape[0]}x{b.shape[1]}")
    return dims, b


def nest_from_dict(obj: Any, tol: Tolerances = DEFAULT_TOL) -> Nest:
    """Parse and build; layout errors raise ParseError, invalid flags BadFlag/RankDeficient."""
    dims, b = nest_file_from_dict(obj)
    return nest_from_flag(dims, b, tol)


def dumps(obj: Any) -> str:
    return json.dumps(obj, allow_nan=False)


def load_json(path: Union[str, Path]) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def save_json(path: Union[str, Path], obj: Any) -> None:
    Path(path).write_text(dumps(obj) + "\n")

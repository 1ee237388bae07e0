"""
JSON Codecs
Complex numbers as [re, im] pairs and matrices as row-major nested arrays.
"""

from typing import Any, List

import numpy as np

from trajthermo.core.exceptions import SnapshotFormatError


def complex_to_json(z: complex) -> List[float]:
    z = complex(z)
    return [z.real, z.imag]


def complex_from_json(value: Any, where: str = "value") -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(float(value), 0.0)
    if (
        isinstance(value, (list, tuple))
        and len(value) == 2
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
    ):
        return complex(float(value[0]), float(value[1]))
    raise SnapshotFormatError("Malformed complex number", [f"{where}: expected [re, im], got {value!r}"])


def matrix_to_json(m: np.ndarray) -> List[List[List[float]]]:
    return [[complex_to_json(z) for z in row] for row in np.asarray(m)]


def matrix_from_json(value: Any, where: str = "matrix") -> np.ndarray:
    """Parse a square row-major matrix of [re, im] pairs (plain reals accepted)."""
    if not isinstance(value, list) or not value or not all(isinstance(row, list) for row in value):
        raise SnapshotFormatError("Malformed matrix", [f"{where}: expected a non-empty list of rows"])
    dim = len(value)
    for i, row in enumerate(value):
        if len(row) != dim:
            raise SnapshotFormatError(
                "Matrix is not square", [f"{where}: row {i} has {len(row)} entries, expected {dim}"]
            )
    return np.array(
        [[complex_from_json(z, f"{where}[{i}][{j}]") for j, z in enumerate(row)] for i, row in enumerate(value)],
        dtype=complex,
    )


def to_jsonable(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays for json.dump."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return matrix_to_json(value) if value.ndim == 2 else [complex_to_json(z) for z in value.ravel()]
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, complex):
        return complex_to_json(value)
    return value

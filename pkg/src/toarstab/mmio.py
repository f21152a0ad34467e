"""Matrix Market reader and writer for the formats the tool ingests.

Supported on read: ``matrix coordinate real|complex general|symmetric|
hermitian`` and ``matrix array real|complex general``.  Symmetric and
hermitian storage is expanded to full storage, 1-based indices are
converted, and duplicate coordinate entries are rejected (they would
silently sum in other readers).  The writer emits 17 significant digits so
complex files round-trip bit-exactly.
"""

from __future__ import annotations

import numpy as np

from .errors import MatrixMarketError

_MAX_DENSE_ENTRIES = 8_000_000

_READ_FORMATS = {"coordinate", "array"}
_READ_FIELDS = {"real", "complex"}
_COORD_SYMMETRIES = {"general", "symmetric", "hermitian"}


def read_matrix_market(path) -> np.ndarray:
    """Parse a Matrix Market file into a dense complex matrix."""
    with open(path, "r", encoding="ascii") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise MatrixMarketError(f"{path}: empty file")

    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket":
        raise MatrixMarketError(f"{path}: malformed header {lines[0]!r}")
    obj, fmt, field, symmetry = (token.lower() for token in header[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"{path}: unsupported object {obj!r}")
    if fmt not in _READ_FORMATS:
        raise MatrixMarketError(f"{path}: unsupported format {fmt!r}")
    if field not in _READ_FIELDS:
        raise MatrixMarketError(f"{path}: unsupported field {field!r}")
    if fmt == "coordinate" and symmetry not in _COORD_SYMMETRIES:
        raise MatrixMarketError(f"{path}: unsupported symmetry {symmetry!r}")
    if fmt == "array" and symmetry != "general":
        raise MatrixMarketError(f"{path}: array format supports only general symmetry")

    body = [line for line in lines[1:] if line.strip() and not line.lstrip().startswith("%")]
    if not body:
        raise MatrixMarketError(f"{path}: missing size line")

    if fmt == "coordinate":
        return _read_coordinate(path, body, field, symmetry)
    return _read_array(path, body, field)


def _parse_size(path, tokens, expected) -> list[int]:
    if len(tokens) != expected:
        raise MatrixMarketError(f"{path}: malformed size line {' '.join(tokens)!r}")
    try:
        sizes = [int(t) for t in tokens]
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: non-integer size entry") from exc
    if any(s < 0 for s in sizes) or sizes[0] < 1 or sizes[1] < 1:
        raise MatrixMarketError(f"{path}: invalid sizes {sizes}")
    if sizes[0] * sizes[1] > _MAX_DENSE_ENTRIES:
        raise MatrixMarketError(f"{path}: {sizes[0]}x{sizes[1]} exceeds the dense size limit")
    return sizes


def _parse_value(path, tokens, field) -> complex:
    try:
        if field == "complex":
            if len(tokens) != 2:
                raise ValueError
            return complex(float(tokens[0]), float(tokens[1]))
        if len(tokens) != 1:
            raise ValueError
        return complex(float(tokens[0]), 0.0)
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: malformed value {' '.join(tokens)!r}") from exc


def _read_coordinate(path, body, field, symmetry) -> np.ndarray:
    rows, cols, nnz = _parse_size(path, body[0].split(), 3)
    entries = body[1:]
    if len(entries) != nnz:
        raise MatrixMarketError(f"{path}: expected {nnz} entries, found {len(entries)}")
    if symmetry in ("symmetric", "hermitian") and rows != cols:
        raise MatrixMarketError(f"{path}: {symmetry} storage requires a square matrix")

    matrix = np.zeros((rows, cols), dtype=np.complex128)
    seen: set[tuple[int, int]] = set()
    for line in entries:
        tokens = line.split()
        if len(tokens) < 3:
            raise MatrixMarketError(f"{path}: malformed entry {line!r}")
        try:
            i, j = int(tokens[0]), int(tokens[1])
        except ValueError as exc:
            raise MatrixMarketError(f"{path}: non-integer index in {line!r}") from exc
        if not (1 <= i <= rows and 1 <= j <= cols):
            raise MatrixMarketError(f"{path}: index ({i}, {j}) out of bounds for {rows}x{cols}")
        if (i, j) in seen:
            raise MatrixMarketError(f"{path}: duplicate entry at ({i}, {j})")
        seen.add((i, j))
        value = _parse_value(path, tokens[2:], field)
        matrix[i - 1, j - 1] = value
        if symmetry != "general" and i != j:
            if (j, i) in seen:
                raise MatrixMarketError(f"{path}: duplicate entry at ({j}, {i})")
            seen.add((j, i))
            matrix[j - 1, i - 1] = np.conj(value) if symmetry == "hermitian" else value
    return matrix


def _read_array(path, body, field) -> np.ndarray:
    rows, cols = _parse_size(path, body[0].split(), 2)
    entries = body[1:]
    if len(entries) != rows * cols:
        raise MatrixMarketError(f"{path}: expected {rows * cols} entries, found {len(entries)}")
    values = [_parse_value(path, line.split(), field) for line in entries]
    # Array storage is column-major.
    return np.array(values, dtype=np.complex128).reshape((cols, rows)).T


def _format_value(value: complex, field: str) -> str:
    if field == "complex":
        return f"{value.real:.17g} {value.imag:.17g}"
    return f"{value.real:.17g}"


def write_matrix_market(path, matrix, fmt: str = "coordinate") -> None:
    """Write a dense matrix in coordinate or array format.

    The field is ``complex`` when any entry has a nonzero imaginary part,
    else ``real``.  Coordinate output stores the nonzero entries only;
    values are printed with 17 significant digits, which round-trips IEEE
    doubles exactly.
    """
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise MatrixMarketError(f"can only write two-dimensional arrays, got shape {m.shape}")
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(f"unsupported write format {fmt!r}")
    field = "complex" if np.any(m.imag != 0.0) else "real"
    rows, cols = m.shape

    out = [f"%%MatrixMarket matrix {fmt} {field} general"]
    if fmt == "coordinate":
        nonzero = [(i, j) for j in range(cols) for i in range(rows) if m[i, j] != 0.0]
        out.append(f"{rows} {cols} {len(nonzero)}")
        for i, j in nonzero:
            out.append(f"{i + 1} {j + 1} {_format_value(m[i, j], field)}")
    else:
        out.append(f"{rows} {cols}")
        for j in range(cols):
            for i in range(rows):
                out.append(_format_value(m[i, j], field))
    with open(path, "w", encoding="ascii") as handle:
        handle.write("\n".join(out) + "\n")

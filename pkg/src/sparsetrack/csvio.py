"""Plain CSV readers/writers; numbers are written with 17 significant digits."""
import csv
from pathlib import Path

import numpy as np

from .errors import SparseTrackError


class FormatError(SparseTrackError, ValueError):
    """A CSV file could not be parsed."""


def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _parse_row(cells, path, lineno):
    try:
        return [float(c) for c in cells]
    except ValueError as exc:
        raise FormatError(f"{path}:{lineno}: {exc}") from None


def read_matrix_csv(path):
    """Read an m x n matrix: one row per line, comma-separated reals."""
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        for lineno, cells in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in cells]
            if not cells or all(c == "" for c in cells):
                continue
            rows.append(_parse_row(cells, path, lineno))
    if not rows:
        raise FormatError(f"{path}: empty matrix file")
    if len({len(r) for r in rows}) != 1:
        raise FormatError(f"{path}: rows have differing lengths")
    return np.array(rows, dtype=np.float64)


def read_vector_csv(path):
    """Read a vector stored one value per line."""
    path = Path(path)
    values = []
    with path.open(newline="") as fh:
        for lineno, cells in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in cells if c.strip() != ""]
            if not cells:
                continue
            if len(cells) != 1:
                raise FormatError(f"{path}:{lineno}: expected one value per line")
            values.extend(_parse_row(cells, path, lineno))
    return np.array(values, dtype=np.float64)


def write_matrix_csv(path, A):
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    with Path(path).open("w", newline="") as fh:
        for row in A:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_vector_csv(path, v):
    with Path(path).open("w", newline="") as fh:
        for value in np.asarray(v, dtype=np.float64).ravel():
            fh.write(fmt(value) + "\n")


def write_table(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_table(path):
    """Read a headered numeric table into ``(header, 2-D array)``."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FormatError(f"{path}: empty table") from None
        rows = [_parse_row(r, path, i) for i, r in enumerate(reader, start=2) if r]
    return header, np.array(rows, dtype=np.float64).reshape(len(rows), len(header))

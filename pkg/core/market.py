"""Matrix Market coordinate-format reader and writer."""

from __future__ import annotations

import io
import logging
import math
from pathlib import Path
from typing import TextIO, Union

import numpy as np
import scipy.sparse as sp

from core.errors import MatrixMarketError
from core.sparse import SparseMatrix

logger = logging.getLogger(__name__)

SUPPORTED_FIELDS = {"real", "integer"}
SUPPORTED_SYMMETRY = {"general", "symmetric", "skew-symmetric"}


def _data_lines(stream: TextIO, start: int):
    """Yield (line_number, stripped_text) for non-comment, non-blank lines."""
    for number, raw in enumerate(stream, start=start):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        yield number, text


def _parse_header(line: str) -> tuple[str, str]:
    tokens = line.strip().split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("malformed header, expected '%%MatrixMarket matrix coordinate <field> <symmetry>'", 1)
    obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object '{obj}'", 1)
    if fmt != "coordinate":
        raise MatrixMarketError(f"unsupported format '{fmt}'", 1)
    if field not in SUPPORTED_FIELDS:
        raise MatrixMarketError(f"unsupported field '{field}'", 1)
    if symmetry not in SUPPORTED_SYMMETRY:
        raise MatrixMarketError(f"unsupported symmetry '{symmetry}'", 1)
    return field, symmetry


def parse_matrix_market(stream: Union[TextIO, str]) -> SparseMatrix:
    """
    Parse a Matrix Market coordinate matrix.

    Symmetric and skew-symmetric storage is expanded to explicit entries,
    duplicate coordinates are summed and indices are converted to 0-based.

    Args:
        stream: Open text stream, or the file contents as a string

    Returns:
        The parsed SparseMatrix

    Raises:
        MatrixMarketError: malformed header or size line, unsupported
            field/format, bad or out-of-range entries; the error names the
            offending line number.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)

    header = stream.readline()
    if not header:
        raise MatrixMarketError("empty input", 1)
    field, symmetry = _parse_header(header)

    lines = _data_lines(stream, start=2)
    try:
        number, size_line = next(lines)
    except StopIteration:
        raise MatrixMarketError("missing size line")
    try:
        n_rows, n_cols, declared = (int(t) for t in size_line.split())
    except ValueError:
        raise MatrixMarketError(f"malformed size line '{size_line}'", number)
    if n_rows < 0 or n_cols < 0 or declared < 0:
        raise MatrixMarketError("negative dimension in size line", number)
    if symmetry != "general" and n_rows != n_cols:
        raise MatrixMarketError(f"{symmetry} matrix must be square, got {n_rows}x{n_cols}", number)

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    count = 0
    for number, text in lines:
        tokens = text.split()
        if len(tokens) != 3:
            raise MatrixMarketError(f"expected 'row col value', got '{text}'", number)
        try:
            i, j = int(tokens[0]), int(tokens[1])
            value = int(tokens[2]) if field == "integer" else float(tokens[2])
        except ValueError:
            raise MatrixMarketError(f"malformed entry '{text}'", number)
        if not (1 <= i <= n_rows and 1 <= j <= n_cols):
            raise MatrixMarketError(f"index ({i}, {j}) outside {n_rows}x{n_cols}", number)
        if not math.isfinite(value):
            raise MatrixMarketError(f"non-finite value '{tokens[2]}'", number)
        count += 1
        if count > declared:
            raise MatrixMarketError(f"more entries than the declared {declared}", number)

        i, j = i - 1, j - 1
        rows.append(i)
        cols.append(j)
        vals.append(float(value))
        if i != j and symmetry == "symmetric":
            rows.append(j)
            cols.append(i)
            vals.append(float(value))
        elif symmetry == "skew-symmetric":
            if i == j:
                raise MatrixMarketError("skew-symmetric storage cannot hold diagonal entries", number)
            rows.append(j)
            cols.append(i)
            vals.append(-float(value))

    if count != declared:
        raise MatrixMarketError(f"declared {declared} entries but found {count}")

    coo = sp.coo_matrix(
        (np.array(vals, dtype=np.float64), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
        shape=(n_rows, n_cols),
    )
    matrix = SparseMatrix.from_scipy(coo)
    logger.debug("parsed %dx%d %s matrix with %d stored entries", n_rows, n_cols, symmetry, matrix.nnz)
    return matrix


def read_matrix_market(path: Union[str, Path]) -> SparseMatrix:
    """Read a ``.mtx`` file from disk."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"matrix file not found: {path}")
    with open(path, "r") as f:
        return parse_matrix_market(f)


def emit_matrix_market(A: SparseMatrix, stream: TextIO | None = None) -> str:
    """
    Write ``A`` as "coordinate real general" with 17 significant digits.

    Args:
        A: Matrix to write
        stream: Optional text stream to write into

    Returns:
        The emitted text
    """
    out = io.StringIO()
    out.write("%%MatrixMarket matrix coordinate real general\n")
    out.write(f"{A.n_rows} {A.n_cols} {A.nnz}\n")
    for i in range(A.n_rows):
        cols, vals = A.row(i)
        for j, v in zip(cols, vals):
            out.write(f"{i + 1} {j + 1} {v:.17g}\n")
    text = out.getvalue()
    if stream is not None:
        stream.write(text)
    return text

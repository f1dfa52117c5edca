"""Matrix Market coordinate-format reader.

Accepts ASCII files per the NIST layout: a banner line
``%%MatrixMarket matrix coordinate <field> <symmetry>``, optional ``%``
comment lines, one size line ``m k nnz``, then nnz entry lines.  Indices
are converted from 1-based to 0-based, pattern entries get value 1, and
symmetric files have their off-diagonal entries mirrored.  Parse problems
raise MatrixMarketError carrying the offending line number.
"""

from __future__ import annotations

import numpy as np

FIELDS = ("real", "integer", "pattern")
SYMMETRIES = ("general", "symmetric")


class MatrixMarketError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def read_matrix_market(path):
    """Parse a .mtx file.

    Returns ``(shape, rows, cols, values, field)`` with rows/cols as int64
    arrays (0-based, symmetric entries already expanded) and values as
    float64 or int64 depending on the field.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()

    banner_no, banner = _first_content_line(lines, 0, allow_comments=False)
    parts = banner.split()
    if len(parts) != 5 or parts[0] != "%%MatrixMarket":
        raise MatrixMarketError(
            "expected banner '%%MatrixMarket matrix coordinate <field> <symmetry>'",
            banner_no,
        )
    _, obj, fmt, field, symmetry = (p.lower() for p in parts)
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}", banner_no)
    if fmt != "coordinate":
        raise MatrixMarketError(f"unsupported format {fmt!r}; only coordinate", banner_no)
    if field not in FIELDS:
        raise MatrixMarketError(f"unsupported field {field!r}; one of {FIELDS}", banner_no)
    if symmetry not in SYMMETRIES:
        raise MatrixMarketError(
            f"unsupported symmetry {symmetry!r}; one of {SYMMETRIES}", banner_no
        )

    size_no, size_line = _first_content_line(lines, banner_no)
    try:
        m, k, nnz = (int(x) for x in size_line.split())
    except ValueError:
        raise MatrixMarketError("size line must be 'rows cols nnz'", size_no) from None
    if m < 0 or k < 0 or nnz < 0:
        raise MatrixMarketError("size values must be non-negative", size_no)

    dtype = np.int64 if field == "integer" else np.float64
    rows, cols, vals = [], [], []
    seen = 0
    lineno = size_no
    for lineno in range(size_no + 1, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if not text or text.startswith("%"):
            continue
        if seen == nnz:
            raise MatrixMarketError(f"more than the declared {nnz} entries", lineno)
        parts = text.split()
        try:
            r = int(parts[0]) - 1
            c = int(parts[1]) - 1
            if field == "pattern":
                if len(parts) != 2:
                    raise ValueError
                v = 1
            else:
                if len(parts) != 3:
                    raise ValueError
                v = int(parts[2]) if field == "integer" else float(parts[2])
        except (ValueError, IndexError):
            raise MatrixMarketError(f"malformed {field} entry {text!r}", lineno) from None
        if not (0 <= r < m and 0 <= c < k):
            raise MatrixMarketError(
                f"entry ({r + 1}, {c + 1}) out of bounds for {m}x{k} matrix", lineno
            )
        rows.append(r)
        cols.append(c)
        vals.append(v)
        if symmetry == "symmetric" and r != c:
            rows.append(c)
            cols.append(r)
            vals.append(v)
        seen += 1
    if seen != nnz:
        raise MatrixMarketError(f"expected {nnz} entries, found {seen}", lineno)

    return (
        (m, k),
        np.asarray(rows, dtype=np.int64),
        np.asarray(cols, dtype=np.int64),
        np.asarray(vals, dtype=dtype),
        field,
    )


def _first_content_line(lines, after: int, allow_comments: bool = True):
    """(1-based line number, stripped text) of the next non-blank line."""
    for lineno in range(after + 1, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if not text:
            continue
        if allow_comments and text.startswith("%") and not text.startswith("%%MatrixMarket"):
            continue
        return lineno, text
    raise MatrixMarketError("unexpected end of file", len(lines) + 1)

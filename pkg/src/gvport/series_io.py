"""Series file parsing and writing.

Accepted input: plain text with one value per line ('#' comments and blank
lines allowed), or CSV with a header row in which case a named column (or
the single/first numeric column) is used.  Values are written back with 17
significant digits, so a write/read round trip is exact.
"""
from __future__ import annotations

import numpy as np

MIN_SERIES_LENGTH = 30


class SeriesParseError(ValueError):
    """Input file failed to parse; the message carries the line number."""


def _parse_float(token: str, lineno: int) -> float:
    try:
        v = float(token)
    except ValueError as err:
        raise SeriesParseError(f"line {lineno}: cannot parse {token!r} as a number") from err
    if not np.isfinite(v):
        raise SeriesParseError(f"line {lineno}: non-finite value {token!r}")
    return v


def parse_series_text(text: str, column: str | None = None,
                      min_length: int = MIN_SERIES_LENGTH) -> np.ndarray:
    lines = text.splitlines()
    rows = []
    for lineno, rawline in enumerate(lines, start=1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        rows.append((lineno, line))
    if not rows:
        raise SeriesParseError("file contains no data lines")

    first = rows[0][1]
    header_tokens = [t.strip() for t in first.split(",")]
    has_header = any(not _is_number(t) for t in header_tokens)

    if has_header or column is not None:
        if not has_header:
            raise SeriesParseError(
                f"line {rows[0][0]}: a column name was given but the file has no header row")
        try:
            col_idx = header_tokens.index(column) if column is not None else _numeric_column(rows)
        except ValueError:
            raise SeriesParseError(
                f"line {rows[0][0]}: column {column!r} not found in header {header_tokens}"
            ) from None
        values = []
        for lineno, line in rows[1:]:
            tokens = [t.strip() for t in line.split(",")]
            if col_idx >= len(tokens):
                raise SeriesParseError(f"line {lineno}: row has only {len(tokens)} columns")
            values.append(_parse_float(tokens[col_idx], lineno))
    else:
        values = []
        for lineno, line in rows:
            tokens = line.split(",") if "," in line else line.split()
            if len(tokens) != 1:
                raise SeriesParseError(
                    f"line {lineno}: expected one value per line (or a CSV header naming columns)")
            values.append(_parse_float(tokens[0], lineno))

    arr = np.asarray(values, dtype=float)
    if arr.size < min_length:
        raise SeriesParseError(f"series has {arr.size} values; at least {min_length} required")
    return arr


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _numeric_column(rows) -> int:
    """Pick the single numeric column under the header, else the first one."""
    lineno, line = rows[1] if len(rows) > 1 else rows[0]
    tokens = [t.strip() for t in line.split(",")]
    numeric = [i for i, t in enumerate(tokens) if _is_number(t)]
    if not numeric:
        raise SeriesParseError(f"line {lineno}: no numeric column found")
    return numeric[0]


def read_series(path: str, column: str | None = None,
                min_length: int = MIN_SERIES_LENGTH) -> np.ndarray:
    with open(path) as fh:
        return parse_series_text(fh.read(), column=column, min_length=min_length)


def write_series(path: str, values, comment: str | None = None) -> None:
    arr = np.asarray(values, dtype=float)
    with open(path, "w") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        for v in arr:
            fh.write(f"{v:.17g}\n")

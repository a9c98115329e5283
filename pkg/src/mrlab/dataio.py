"""CSV and text file loading for the command-line tools.

All readers raise RowParseError with the 1-based file line number on
malformed content, so failures point at the offending line.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyInputError, ParameterError, RowParseError


@dataclass(frozen=True)
class Table:
    """A numeric feature matrix plus one designated label column."""

    features: np.ndarray  # shape (n, p)
    labels: np.ndarray  # float labels, shape (n,)
    raw_labels: list  # original label strings, same order
    feature_names: list
    label_name: str


def read_lines(path) -> list[str]:
    """One document per non-empty line."""
    text = Path(path).read_text(encoding="utf-8")
    return [line for line in text.splitlines() if line.strip()]


def read_csv_rows(path) -> tuple[list[str], list[list[str]]]:
    """Raw CSV as (header, rows); rows keep their string fields."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError(f"{path}: empty file") from None
        rows = list(reader)
    return header, rows


def write_csv_rows(path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_matrix(path) -> tuple[list[str], np.ndarray]:
    """Load an all-numeric CSV with a header as (column names, matrix)."""
    header, rows = read_csv_rows(path)
    names = [h.strip() for h in header]
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")
    matrix = np.empty((len(rows), len(names)))
    for r, row in enumerate(rows):
        line = r + 2
        if len(row) != len(names):
            raise RowParseError(line, f"expected {len(names)} fields, got {len(row)}")
        for j, fieldvalue in enumerate(row):
            try:
                matrix[r, j] = float(fieldvalue)
            except ValueError:
                raise RowParseError(line, f"bad numeric value {fieldvalue!r} in column {names[j]!r}") from None
    if not np.all(np.isfinite(matrix)):
        r = int(np.argwhere(~np.isfinite(matrix))[0][0])
        raise RowParseError(r + 2, "non-finite value")
    return names, matrix


def read_table(path, label: str, *, numeric_labels: bool = True) -> Table:
    """Load a numeric CSV with a header into features + label column.

    Every non-label column becomes a float feature. Label values are
    parsed as floats when numeric_labels is set and kept as raw strings
    either way (classification tasks map strings to classes later).
    """
    header, rows = read_csv_rows(path)
    names = [h.strip() for h in header]
    if label not in names:
        raise ParameterError(f"label column {label!r} not in header {names}")
    label_idx = names.index(label)
    feature_names = [n for i, n in enumerate(names) if i != label_idx]
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")

    features = np.empty((len(rows), len(feature_names)))
    labels = np.zeros(len(rows))
    raw_labels = []
    for r, row in enumerate(rows):
        line = r + 2  # header is line 1
        if len(row) != len(names):
            raise RowParseError(line, f"expected {len(names)} fields, got {len(row)}")
        raw = row[label_idx].strip()
        raw_labels.append(raw)
        j = 0
        for i, field in enumerate(row):
            if i == label_idx:
                continue
            try:
                features[r, j] = float(field)
            except ValueError:
                raise RowParseError(line, f"bad numeric value {field!r} in column {names[i]!r}") from None
            j += 1
        if numeric_labels:
            try:
                labels[r] = float(raw)
            except ValueError:
                raise RowParseError(line, f"bad numeric label {raw!r}") from None
    if not np.all(np.isfinite(features)):
        r = int(np.argwhere(~np.isfinite(features))[0][0])
        raise RowParseError(r + 2, "non-finite feature value")
    return Table(features, labels, raw_labels, feature_names, label)

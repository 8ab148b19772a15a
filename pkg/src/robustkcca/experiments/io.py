"""Delimited-text ingestion and CSV emission."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..synthdata import Dataset

FLOAT_FORMAT = "{:.17g}"
_Y_COLUMN = re.compile(r"^y\d+$")


@dataclass
class TabularResult:
    """Rows of cell identifiers followed by value columns, in emission order."""

    columns: list[str]
    rows: list[tuple] = field(default_factory=list)

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} fields, expected {len(self.columns)}")
        self.rows.append(tuple(row))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def select(self, **match) -> list[dict]:
        out = []
        for r in self.rows:
            record = dict(zip(self.columns, r))
            if all(record[k] == v for k, v in match.items()):
                out.append(record)
        return out


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT.format(float(value))
    return str(value)


def to_csv(result: TabularResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def emit_csv(result: TabularResult, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv(result))
    return path


def dataset_table(ds: Dataset) -> TabularResult:
    """Columns ``x1..xd``, then ``y1..ye`` for paired data, then ``label`` if present."""
    cols = [f"x{i + 1}" for i in range(ds.X.shape[1])]
    parts = [ds.X]
    if ds.Y is not None:
        cols += [f"y{i + 1}" for i in range(ds.Y.shape[1])]
        parts.append(ds.Y)
    values = np.hstack(parts)
    result = TabularResult(cols + (["label"] if ds.labels is not None else []))
    for i in range(ds.n):
        row = list(values[i])
        if ds.labels is not None:
            row.append(ds.labels[i])
        result.rows.append(tuple(row))
    return result


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def ingest_dataset(path, label_column: str | int | None = None, delimiter: str | None = None,
                   y_columns="auto") -> Dataset:
    """Read a comma- or tab-delimited numeric table.

    A first row with any non-numeric feature field is taken as a header.
    ``label_column`` selects a categorical column by name or 0-based index;
    labels are coded by their sorted distinct values (numerically when all
    labels are numbers). ``y_columns="auto"`` splits header columns named
    ``y1, y2, ...`` into the second view; a list of names or indices selects
    them explicitly; ``None`` keeps one view.
    """
    path = Path(path)
    text = path.read_text()
    lines = [(i, line) for i, line in enumerate(text.splitlines(), start=1) if line.strip()]
    if not lines:
        raise ValueError(f"{path}: file is empty")
    if delimiter is None:
        delimiter = "\t" if "\t" in lines[0][1] else ","
    records = [(i, [f.strip() for f in next(csv.reader([line], delimiter=delimiter))]) for i, line in lines]

    width = len(records[0][1])
    for lineno, fields in records:
        if len(fields) != width:
            raise ValueError(f"{path}:{lineno}: expected {width} fields, found {len(fields)}")

    header = None
    skip = None
    if isinstance(label_column, (int, np.integer)) or str(label_column).lstrip("-").isdigit():
        skip = int(label_column) % width
    if not all(_is_number(f) for j, f in enumerate(records[0][1]) if j != skip):
        header = records[0][1]
        records = records[1:]
    if not records:
        raise ValueError(f"{path}: no data rows")

    def resolve(col) -> int:
        if isinstance(col, (int, np.integer)) or (isinstance(col, str) and col.lstrip("-").isdigit()):
            idx = int(col)
            if not -width <= idx < width:
                raise ValueError(f"{path}: column index {idx} out of range for {width} columns")
            return idx % width
        if header is None or col not in header:
            raise ValueError(f"{path}: label column {col!r} not found")
        return header.index(col)

    label_idx = None if label_column is None else resolve(label_column)
    if y_columns == "auto":
        y_idx = [j for j, name in enumerate(header or []) if _Y_COLUMN.match(name)]
    elif y_columns is None:
        y_idx = []
    else:
        y_idx = [resolve(c) for c in y_columns]
    x_idx = [j for j in range(width) if j != label_idx and j not in y_idx]

    values = np.empty((len(records), width))
    labels_raw = []
    for r, (lineno, fields) in enumerate(records):
        for j, f in enumerate(fields):
            if j == label_idx:
                continue
            try:
                values[r, j] = float(f)
            except ValueError:
                name = header[j] if header else f"column {j}"
                raise ValueError(f"{path}:{lineno}: non-numeric value {f!r} in {name}") from None
        if label_idx is not None:
            labels_raw.append(fields[label_idx])
    if not np.all(np.isfinite(values[:, x_idx + y_idx])):
        raise ValueError(f"{path}: non-finite feature values")

    labels = None
    meta = {"path": str(path), "columns": header}
    if label_idx is not None:
        keys = [float(v) for v in labels_raw] if all(_is_number(v) for v in labels_raw) else labels_raw
        names, labels = np.unique(np.asarray(keys), return_inverse=True)
        meta["label_names"] = names.tolist()
    X = values[:, x_idx]
    Y = values[:, y_idx] if y_idx else None
    return Dataset(X, Y, labels, meta)

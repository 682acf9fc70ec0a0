"""Reading delimited input and writing result documents."""

from dataclasses import dataclass, field
import csv
import json
import math
import os
import tempfile

import numpy as np

from .exceptions import InputError

__all__ = ["Dataset", "ingest", "to_jsonable", "dumps", "write_atomic"]


@dataclass(eq=False)
class Dataset:
    values: np.ndarray
    weights: np.ndarray
    source_path: str
    column_names: list
    value_column: str = ""
    weight_column: str = None
    rows_read: int = 0
    rejected: list = field(default_factory=list)

    @property
    def has_weights(self):
        return self.weight_column is not None

    @property
    def n(self):
        return self.values.size

    def report(self):
        return {
            "source_path": self.source_path,
            "value_column": self.value_column,
            "weight_column": self.weight_column,
            "rows_read": self.rows_read,
            "rows_accepted": int(self.values.size),
            "rows_rejected": len(self.rejected),
            "rejected": [{"line": line, "reason": reason} for line, reason in self.rejected],
            "weights_normalized": False,
            "weight_total": float(self.weights.sum()),
        }


def _resolve_column(header, column, role):
    if column in header:
        return header.index(column), column
    if isinstance(column, int) or (isinstance(column, str) and column.isdigit()):
        idx = int(column)
        if 0 <= idx < len(header):
            return idx, header[idx]
    raise InputError(
        f"{role} column {column!r} not found; available columns: {', '.join(header)}"
    )


def ingest(path, value_column, weight_column=None):
    """Read a comma-separated file with a header row.

    Rows whose value is not a positive finite number (or whose weight is
    negative or not finite) are rejected and listed in ``rejected`` as
    ``(line number, reason)``.  Weights are kept exactly as read; when no
    weight column is named every weight is 1.

    Raises
    ------
    InputError
        Missing file or column, or no valid rows.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open input {path!r}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"input {path!r} is empty") from None
        vi, vname = _resolve_column(header, value_column, "value")
        wi, wname = (None, None)
        if weight_column is not None:
            wi, wname = _resolve_column(header, weight_column, "weight")
        values, weights, rejected = [], [], []
        rows = 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            rows += 1
            try:
                v = float(row[vi])
            except (IndexError, ValueError):
                rejected.append((lineno, "value is missing or not a number"))
                continue
            if not (math.isfinite(v) and v > 0):
                rejected.append((lineno, f"value {v!r} is not strictly positive"))
                continue
            w = 1.0
            if wi is not None:
                try:
                    w = float(row[wi])
                except (IndexError, ValueError):
                    rejected.append((lineno, "weight is missing or not a number"))
                    continue
                if not (math.isfinite(w) and w >= 0):
                    rejected.append((lineno, f"weight {w!r} is negative or not finite"))
                    continue
            values.append(v)
            weights.append(w)
    if not values:
        raise InputError(f"no valid rows in {path!r}")
    weights = np.array(weights)
    if not weights.sum() > 0:
        raise InputError("all weights are zero")
    return Dataset(
        values=np.array(values),
        weights=weights,
        source_path=str(path),
        column_names=header,
        value_column=vname,
        weight_column=wname,
        rows_read=rows,
        rejected=rejected,
    )


def _float(v):
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return v


def to_jsonable(obj):
    """Recursively convert numpy values and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    return obj


def dumps(doc):
    """Serialize a result document; floats use the shortest round-trip repr."""
    return json.dumps(to_jsonable(doc), indent=2, allow_nan=False, ensure_ascii=False) + "\n"


def write_atomic(path, text, mode="w"):
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".rigkit-", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, encoding=None if "b" in mode else "utf-8") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

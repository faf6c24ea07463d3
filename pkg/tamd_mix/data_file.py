"""Data CSV reading and writing: header `x1..xd` plus an optional `label` column."""
import csv
import os
from os import PathLike
from pathlib import Path
from typing import Optional

import numpy as np

from .error import ContractViolation

LABEL_COLUMN = "label"


def write_data(file: PathLike | str, data: np.ndarray, labels: Optional[np.ndarray] = None, make_dirs: bool = True):
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if make_dirs:
        os.makedirs(Path(file).parent, exist_ok=True)
    header = [f"x{i + 1}" for i in range(data.shape[1])]
    if labels is not None:
        header.append(LABEL_COLUMN)
    with open(file, "w", newline="") as fileIO:
        writer = csv.writer(fileIO, lineterminator="\n")
        writer.writerow(header)
        for i, row in enumerate(data):
            values = [repr(float(v)) for v in row]
            if labels is not None:
                values.append(str(int(labels[i])))
            writer.writerow(values)


def read_data(file: PathLike | str) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """(n×d data, labels or None); columns other than x1..xd and label are rejected."""
    with open(file, "r", newline="") as fileIO:
        rows = list(csv.reader(fileIO))
    if not rows:
        raise ContractViolation(f"{file} is empty")
    header = [h.strip() for h in rows[0]]
    has_labels = bool(header) and header[-1] == LABEL_COLUMN
    feature_names = header[:-1] if has_labels else header
    if not feature_names or feature_names != [f"x{i + 1}" for i in range(len(feature_names))]:
        raise ContractViolation(f"{file}: expected header x1..xd[,label], got {','.join(header)}")
    body = [row for row in rows[1:] if row]
    if not body:
        raise ContractViolation(f"{file} has no data rows")
    try:
        table = np.array([[float(v) for v in row] for row in body])
    except ValueError as e:
        raise ContractViolation(f"{file}: {e}") from e
    if table.ndim != 2 or table.shape[1] != len(header):
        raise ContractViolation(f"{file}: every row needs {len(header)} values")
    if not np.all(np.isfinite(table)):
        raise ContractViolation(f"{file} contains non-finite values")
    if has_labels:
        return table[:, :-1], table[:, -1].astype(int)
    return table, None

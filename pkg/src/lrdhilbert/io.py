"""CSV and JSON writers.

Floats are written in scientific notation with 17 significant digits, which
round-trips IEEE doubles exactly, so two runs that compute the same numbers
write the same bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

__all__ = [
    "fmt",
    "write_csv",
    "write_json",
    "write_ensemble",
    "write_v_samples",
    "write_matrix_entries",
    "read_csv_rows",
    "sha256_file",
]


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.16e}"
    return str(x)


def write_csv(path, header, rows):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def write_ensemble(path, paths, replications):
    """Rows ``(replication, k, point-index, re, im)`` for ``paths[r, k-1, i]``."""
    paths = np.asarray(paths)
    R, K, m = paths.shape

    def rows():
        for r in range(R):
            for k in range(K):
                for i in range(m):
                    z = paths[r, k, i]
                    yield (int(replications[r]), k + 1, i, float(z.real), float(np.imag(z)))

    return write_csv(path, ["replication", "k", "point_index", "re", "im"], rows())


def write_v_samples(path, samples):
    """Rows ``(r-index, s-index, t, u, re, im)``."""
    return write_csv(
        path,
        ["r_index", "s_index", "t", "u", "re", "im"],
        ((r, s, float(t), float(u), float(np.real(v)), float(np.imag(v))) for r, s, t, u, v in samples),
    )


def write_matrix_entries(path, matrix, t=1.0, u=1.0):
    """A matrix in the same long format as :func:`write_v_samples`."""
    matrix = np.asarray(matrix)
    samples = [(i, j, t, u, matrix[i, j]) for i in range(matrix.shape[0]) for j in range(matrix.shape[1])]
    return write_v_samples(path, samples)


def read_csv_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()

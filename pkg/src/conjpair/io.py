"""
File formats: legacy VTK ASCII, Matrix Market, CSV and diff-stable JSON.

Every float written by this module uses 17 significant digits, so a value
read back is bit-identical and repeated runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import DimensionError, InvalidSpecError
from .mesh import Mesh

VTK_TETRA = 10


def fmt(x) -> str:
    return format(float(x), ".17g")


def _to_json(obj):
    if isinstance(obj, dict):
        return {str(k): _to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_json(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _Float(obj)
    return obj


class _Float(float):
    def __repr__(self):
        if math.isnan(self):
            return "NaN"
        if math.isinf(self):
            return "Infinity" if self > 0 else "-Infinity"
        text = fmt(self)
        # keep floats recognisable as floats after a round trip
        return text if any(c in text for c in ".en") else text + ".0"


def dumps(obj) -> str:
    """JSON text with sorted keys and 17-digit floats."""
    data = _to_json(obj)
    chunks = []
    _write(data, chunks, 0)
    return "".join(chunks) + "\n"


def _write(obj, out, depth):
    pad = "  " * (depth + 1)
    end = "  " * depth
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted(obj.items())
        for k, (key, val) in enumerate(items):
            out.append(pad + json.dumps(key) + ": ")
            _write(val, out, depth + 1)
            out.append(",\n" if k < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list)) for v in obj):
            out.append("[" + ", ".join(_scalar(v) for v in obj) + "]")
            return
        out.append("[\n")
        for k, val in enumerate(obj):
            out.append(pad)
            _write(val, out, depth + 1)
            out.append(",\n" if k < len(obj) - 1 else "\n")
        out.append(end + "]")
    else:
        out.append(_scalar(obj))


def _scalar(v) -> str:
    if isinstance(v, _Float):
        return repr(v)
    return json.dumps(v)


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path):
    return json.loads(Path(path).read_text())


def write_vtk(path, mesh: Mesh, point_data=None, cell_data=None, title="conjpair") -> None:
    """Legacy ASCII unstructured grid with optional nodal and per-element scalars."""
    point_data = point_data or {}
    cell_data = cell_data or {}
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {mesh.n_vertices} double")
    lines.extend(" ".join(fmt(c) for c in p) for p in mesh.vertices)
    lines.append(f"CELLS {mesh.n_tets} {5 * mesh.n_tets}")
    lines.extend("4 " + " ".join(str(int(i)) for i in t) for t in mesh.tets)
    lines.append(f"CELL_TYPES {mesh.n_tets}")
    lines.extend([str(VTK_TETRA)] * mesh.n_tets)

    def block(kind, count, data):
        if not data:
            return
        lines.append(f"{kind} {count}")
        for name, values in data.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (count,):
                raise DimensionError(f"{kind} '{name}' has shape {values.shape}, expected ({count},)")
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(fmt(x) for x in values)

    block("POINT_DATA", mesh.n_vertices, point_data)
    block("CELL_DATA", mesh.n_tets, cell_data)
    Path(path).write_text("\n".join(lines) + "\n")


def read_vtk_scalars(path) -> dict:
    """Scalar arrays from a legacy ASCII file written by :func:`write_vtk`."""
    tokens = Path(path).read_text().split("\n")
    out = {}
    count = None
    k = 0
    while k < len(tokens):
        line = tokens[k].strip()
        if line.startswith(("POINT_DATA", "CELL_DATA")):
            count = int(line.split()[1])
        elif line.startswith("SCALARS") and count is not None:
            name = line.split()[1]
            k += 2  # skip LOOKUP_TABLE
            out[name] = np.array([float(x) for x in tokens[k : k + count]])
            k += count
            continue
        k += 1
    return out


def load_field(path, name: str | None = None) -> np.ndarray:
    """Nodal field from ``.npy``, ``.txt``/``.csv`` (one value per line) or ``.vtk``."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".npy":
        values = np.load(path)
    elif suffix == ".vtk":
        arrays = read_vtk_scalars(path)
        if name is None:
            if len(arrays) != 1:
                raise InvalidSpecError(f"{path} holds {sorted(arrays)}; name the field to load")
            name = next(iter(arrays))
        if name not in arrays:
            raise InvalidSpecError(f"{path} has no field '{name}'")
        values = arrays[name]
    elif suffix in (".txt", ".csv", ".dat"):
        values = np.loadtxt(path, dtype=float, delimiter="," if suffix == ".csv" else None, ndmin=1)
    else:
        raise InvalidSpecError(f"unsupported field file type '{suffix}'")
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise DimensionError(f"{path}: expected a 1D array, got shape {values.shape}")
    return values


def write_matrix_market(path, A, comment: str = "") -> None:
    mat = A if sp.issparse(A) else np.asarray(A)
    scipy.io.mmwrite(str(path), mat, comment=comment, precision=17)


def write_matrix_csv(path, A) -> None:
    A = A.toarray() if sp.issparse(A) else np.asarray(A)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in A:
            writer.writerow([fmt(x) for x in row])


def write_table_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if x is None else fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])

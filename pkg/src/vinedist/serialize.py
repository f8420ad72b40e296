"""Model JSON and data CSV persistence.

Model files carry the structure matrix row-major, the truncation level
and one record per pair-copula, keyed by (tree, edge). Edge index is
the 0-based structure-matrix column. Floats serialize via ``repr``,
which is shortest-round-trip (up to 17 significant digits), so a save/
load cycle is lossless and byte-identical for identical models.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile

import numpy as np

from .bicop import BivariateCopula
from .nonsimplified import NonSimplifiedModel, TauFunction
from .rvine import RVineModel
from .structure import RVineStructure
from .validation import CopulaDataError, check_copula_data


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _ReprFloat(float):
    def __repr__(self):
        return float.__repr__(self)


def dumps_model(model):
    return json.dumps(model.to_dict(), indent=2, sort_keys=True)


def save_model(model, path):
    _atomic_write(path, dumps_model(model) + "\n")


def _slot_of(d, tree, edge):
    row = d - tree
    col = edge
    if not (0 <= col < row <= d - 1):
        raise ValueError(f"invalid (tree={tree}, edge={edge}) for dimension {d}")
    return col, row


def model_from_dict(payload):
    d = int(payload["d"])
    matrix = np.asarray(payload["matrix"], dtype=int).reshape(d, d)
    structure = RVineStructure(matrix)
    if payload.get("nonsimplified"):
        tree1 = {}
        cond = {}
        for rec in payload["pair_copulas"]:
            slot = _slot_of(d, int(rec["tree"]), int(rec["edge"]))
            if "tau_a" in rec:
                nu = rec["parameters"][0] if rec.get("parameters") else None
                cond[slot] = (rec["family"],
                              TauFunction(float(rec["tau_a"]), float(rec["tau_b"]),
                                          int(rec["driver"])), nu)
            else:
                tree1[slot] = BivariateCopula(rec["family"], int(rec["rotation"]),
                                              tuple(rec["parameters"]))
        return NonSimplifiedModel(structure, tree1, cond)
    pcs = {}
    for rec in payload["pair_copulas"]:
        slot = _slot_of(d, int(rec["tree"]), int(rec["edge"]))
        pcs[slot] = BivariateCopula(rec["family"], int(rec["rotation"]),
                                    tuple(rec["parameters"]))
    return RVineModel(structure, pcs, int(payload.get("truncation", d - 1)))


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def save_csv(data, path, header=None):
    data = np.asarray(data, dtype=float)
    if header is None:
        header = [f"u{j + 1}" for j in range(data.shape[1])]
    rows = ["," .join(header)]
    for row in data:
        rows.append(",".join(repr(float(x)) for x in row))
    _atomic_write(path, "\n".join(rows) + "\n")


def load_csv(path, d=None, min_rows=1):
    """Read copula-scale data: header row, one column per variable."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CopulaDataError(f"{path} is empty")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                raise CopulaDataError(f"{path}: line {lineno} has a non-numeric value")
    if not rows:
        raise CopulaDataError(f"{path} has a header but no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1 or widths != {len(header)}:
        raise CopulaDataError(f"{path}: inconsistent column counts")
    return check_copula_data(np.asarray(rows), min_rows=min_rows, d=d, name=path)


def dumps_report(payload):
    """Deterministic JSON for reports (dataclass dicts)."""

    def default(obj):
        if isinstance(obj, (np.floating,)):
            return float(obj)
        if isinstance(obj, (np.integer,)):
            return int(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        raise TypeError(f"cannot serialize {type(obj)}")

    return json.dumps(payload, indent=2, sort_keys=True, default=default)


def save_report(payload, path):
    _atomic_write(path, dumps_report(payload) + "\n")

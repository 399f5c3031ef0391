"""On-disk formats: CSV with a JSON header line, and npz matrix files.

Every file starts with provenance (config hash, seed, library versions) so
that a result can be traced back to the run that produced it.  No
timestamps are written; identical inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

import numpy as np
import scipy

from .errors import SchemaError

FORMAT_VERSION = 1


def versions() -> dict:
    from . import __version__
    return {"billiard_slrt": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def provenance(config_hash: str, seed, **extra) -> dict:
    meta = {"format": FORMAT_VERSION, "config_hash": config_hash, "seed": seed, "versions": versions()}
    meta.update(extra)
    return meta


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, columns: dict, meta: dict) -> Path:
    """Write equal-length ``columns`` as CSV preceded by ``# {json meta}``."""
    names = list(columns)
    if not names:
        raise ValueError("no columns to write")
    cols = [np.asarray(columns[k]).ravel() for k in names]
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ValueError("columns differ in length")
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True, default=_fmt) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*cols):
        w.writerow([_fmt(v) for v in row])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(buf.getvalue())
    os.replace(tmp, path)
    return path


def read_csv(path, required=()) -> tuple[dict, dict]:
    """Inverse of :func:`write_csv`; numeric columns come back as float arrays."""
    text = Path(path).read_text()
    first, _, body = text.partition("\n")
    if not first.startswith("# "):
        raise SchemaError(f"{path}: missing JSON header line")
    try:
        meta = json.loads(first[2:])
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: bad JSON header ({exc})") from None
    if "config_hash" not in meta:
        raise SchemaError(f"{path}: header lacks config_hash")
    rows = list(csv.reader(io.StringIO(body)))
    if not rows:
        raise SchemaError(f"{path}: no column header")
    names, data = rows[0], rows[1:]
    missing = set(required) - set(names)
    if missing:
        raise SchemaError(f"{path}: missing columns {sorted(missing)}")
    if any(len(r) != len(names) for r in data):
        raise SchemaError(f"{path}: ragged rows")
    cols = {}
    for k, name in enumerate(names):
        vals = [r[k] for r in data]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = np.array(vals)
    return meta, cols


def save_matrix(path, F, energies, meta: dict) -> Path:
    """Store a coupling matrix with its energies; ``meta`` must hold window, cutoff and config_hash."""
    for key in ("window", "cutoff", "config_hash"):
        if key not in meta:
            raise ValueError(f"matrix metadata needs {key!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, F=np.asarray(F, dtype=float), energies=np.asarray(energies, dtype=float),
                 header=np.array(json.dumps(meta, sort_keys=True, default=_fmt)))
    return path


def load_matrix(path) -> tuple[np.ndarray, np.ndarray, dict]:
    try:
        with np.load(path, allow_pickle=False) as z:
            F, E, header = z["F"], z["energies"], str(z["header"])
    except (OSError, ValueError, KeyError) as exc:
        raise SchemaError(f"{path}: not a valid matrix file ({exc})") from None
    try:
        meta = json.loads(header)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: bad JSON header ({exc})") from None
    if F.ndim != 2 or F.shape[0] != F.shape[1] or F.shape[0] != len(E):
        raise SchemaError(f"{path}: matrix shape {F.shape} does not match {len(E)} energies")
    if not np.all(np.isfinite(F)) or not np.allclose(F, F.T, atol=1e-10 * max(1.0, np.abs(F).max())):
        raise SchemaError(f"{path}: matrix is not finite and symmetric")
    if np.any(np.diff(E) < 0):
        raise SchemaError(f"{path}: energies are not sorted")
    for key in ("window", "cutoff", "config_hash"):
        if key not in meta:
            raise SchemaError(f"{path}: header lacks {key!r}")
    return F, E, meta


class ArtifactCache:
    """Directory of matrix files keyed by a hash of the producing inputs."""

    def __init__(self, root):
        self.root = Path(root)

    def path(self, key: str) -> Path:
        return self.root / f"matrix_{key}.npz"

    def get(self, key: str):
        p = self.path(key)
        if not p.exists():
            return None
        return load_matrix(p)

    def put(self, key: str, F, energies, meta: dict) -> Path:
        return save_matrix(self.path(key), F, energies, meta)

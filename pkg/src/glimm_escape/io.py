"""On-disk formats.

Snapshot CSV columns: x, rho, m, E, u, P, c, mach, knudsen.  Only (rho, m, E)
are read back; the rest are recomputed at write time.  Floats are written
with 17 significant digits so finite values round-trip exactly.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from . import euler

SNAPSHOT_COLUMNS = ("x", "rho", "m", "E", "u", "P", "c", "mach", "knudsen")
REPORT_KEYS = ("step", "t", "L", "Q", "F", "K", "tv", "min_u", "min_rho", "max_wave_speed",
               "interaction_violations", "boundary_violations")
BOUNDARY_COLUMNS = ("step", "t", "rho_B", "m_B", "E_B", "dt")
FMT = "%.17g"


def snapshot_table(x, U, k):
    U = np.asarray(U, dtype=float)
    x = np.asarray(x, dtype=float)
    kn = euler.knudsen(x, U, k) if k.knudsen_constant > 0.0 else np.zeros_like(x)
    return np.column_stack([x, U, euler.velocity(U), euler.pressure(U, k), euler.sound_speed(U, k),
                            euler.mach(U, k), kn])


def write_snapshot(path, x, U, k, t=None, step=None):
    meta = []
    if t is not None:
        meta.append(f"t={t:.17g}")
    if step is not None:
        meta.append(f"step={step}")
    with open(path, "w") as fh:
        if meta:
            fh.write("# " + " ".join(meta) + "\n")
        np.savetxt(fh, snapshot_table(x, U, k), delimiter=",", fmt=FMT, header=",".join(SNAPSHOT_COLUMNS),
                   comments="")


def read_snapshot(path):
    """(x, U, meta) with meta holding t and step when present."""
    meta = {}
    with open(path) as fh:
        first = fh.readline()
        if first.startswith("#"):
            for item in first[1:].split():
                key, val = item.split("=", 1)
                meta[key] = int(val) if key == "step" else float(val)
            header = fh.readline()
        else:
            header = first
        cols = header.strip().split(",")
        if tuple(cols) != SNAPSHOT_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {cols}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return data[:, 0], data[:, 1:4].copy(), meta


def snapshot_name(step):
    return f"snap_{step:07d}.csv"


def list_snapshots(directory):
    names = sorted(n for n in os.listdir(directory) if n.startswith("snap_") and n.endswith(".csv"))
    return [os.path.join(directory, n) for n in names]


def write_boundary(path, rows):
    with open(path, "w") as fh:
        fh.write(",".join(BOUNDARY_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join(str(int(r[0])) if i == 0 else FMT % r[i] for i in range(len(BOUNDARY_COLUMNS))) + "\n")


def read_boundary(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(BOUNDARY_COLUMNS)}


def _clean(v):
    """JSON-safe value; non-finite floats become null."""
    if isinstance(v, dict):
        return {str(a): _clean(b) for a, b in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(a) for a in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    return v


class _Encoder(json.JSONEncoder):
    def encode(self, o):
        return super().encode(_clean(o))

    def iterencode(self, o, _one_shot=False):
        return super().iterencode(_clean(o), _one_shot)


def dumps(obj, **kw):
    # repr of a Python float is the shortest string that round-trips (<= 17 digits)
    return json.dumps(obj, cls=_Encoder, allow_nan=False, **kw)


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj, indent=1) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_reports(path, reports):
    with open(path, "w") as fh:
        for r in reports:
            missing = set(REPORT_KEYS) - set(r)
            if missing:
                raise ValueError(f"report missing keys {sorted(missing)}")
            fh.write(dumps({key: r[key] for key in REPORT_KEYS}) + "\n")


def read_reports(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def validate_report(obj):
    """True when obj has exactly the report keys with numeric values."""
    if set(obj) != set(REPORT_KEYS):
        return False
    ints = ("step", "interaction_violations", "boundary_violations")
    for key in REPORT_KEYS:
        v = obj[key]
        if key in ints:
            if not isinstance(v, int):
                return False
        elif v is not None and not isinstance(v, (int, float)):
            return False
    return True

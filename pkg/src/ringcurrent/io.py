"""File formats: pulse schedules, tabular series and run manifests.

CSV files have a header row, comma separators, repr-precision doubles and LF
line endings. JSON is UTF-8 with sorted keys so reruns are byte-identical.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import platform
from pathlib import Path

import numpy as np
import scipy

from .errors import DomainError
from .evolve import PulseSchedule

SCHEDULE_FORMAT_VERSION = 1


def schedule_to_dict(schedule: PulseSchedule) -> dict:
    meta = schedule.metadata
    return {
        "format_version": SCHEDULE_FORMAT_VERSION,
        "L": schedule.L,
        "dt": schedule.dt,
        "values": schedule.values.tolist(),
        "metadata": {"seed": meta.get("seed"), "generator": meta.get("generator", "")},
    }


def schedule_from_dict(data: dict) -> PulseSchedule:
    version = data.get("format_version")
    if version != SCHEDULE_FORMAT_VERSION:
        raise DomainError(f"unsupported schedule format_version {version!r}")
    values = np.asarray(data["values"], dtype=float)
    if values.ndim != 2 or values.shape[1] != data["L"]:
        raise DomainError(f"schedule values do not have {data['L']} columns")
    return PulseSchedule(dt=float(data["dt"]), values=values, metadata=dict(data.get("metadata", {})))


def dumps_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def save_schedule(schedule: PulseSchedule, path) -> Path:
    return write_text(path, dumps_json(schedule_to_dict(schedule)))


def load_schedule(path) -> PulseSchedule:
    with open(path, encoding="utf-8") as fh:
        return schedule_from_dict(json.load(fh))


def table_csv(header, rows) -> str:
    """CSV text for ``rows`` (iterables of numbers) under ``header``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def matrix_csv(times, matrix, column_names) -> str:
    """One row per time, one column per name."""
    matrix = np.asarray(matrix, dtype=float)
    return table_csv(["time", *column_names], (np.concatenate([[t], row]) for t, row in zip(times, matrix)))


def matrix_json(times, matrix, column_names) -> str:
    return dumps_json(
        {"columns": list(column_names), "times": [float(t) for t in times], "values": np.asarray(matrix, dtype=float).tolist()}
    )


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def versions() -> dict:
    from . import __version__, kernels

    return {
        "ringcurrent": __version__,
        "kernel_backend": kernels.BACKEND,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def build_manifest(out_dir, files, config: dict, seeds: dict, wall_time: float, failures=None, extra=None) -> dict:
    out_dir = Path(out_dir)
    manifest = {
        "config": config,
        "files": {name: sha256_file(out_dir / name) for name in sorted(files)},
        "versions": versions(),
        "wall_time": float(wall_time),
        "seeds": seeds,
        "failures": list(failures or []),
    }
    if extra:
        manifest.update(extra)
    return manifest


def verify_manifest(out_dir, manifest: dict) -> list:
    """Names of files that are missing or whose digest no longer matches."""
    out_dir = Path(out_dir)
    bad = []
    for name, digest in manifest["files"].items():
        path = out_dir / name
        if not path.exists() or sha256_file(path) != digest:
            bad.append(name)
    return bad

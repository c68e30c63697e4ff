"""Manifest + blob tensor files.

A tensor file is a pair ``<stem>.json`` / ``<stem>.bin``. The JSON manifest
lists every tensor's name, shape, dtype, byte offset and byte length inside
the little-endian blob, plus a free-form ``meta`` mapping. Checkpoints,
estimate buffers and sample files all use this layout.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

FORMAT = "udddm-tensors"
VERSION = 1
_DTYPES = {"<f8": np.dtype("<f8"), "<f4": np.dtype("<f4"), "<f2": np.dtype("<f2"), "<i8": np.dtype("<i8")}


class TensorFileError(ValueError):
    """Raised for malformed or inconsistent tensor files."""


def manifest_path(path) -> Path:
    path = Path(path)
    return path if path.suffix == ".json" else path.with_suffix(".json")


def _le_dtype(arr: np.ndarray) -> np.dtype:
    kind = arr.dtype.kind
    if kind == "f":
        dt = np.dtype(f"<f{arr.dtype.itemsize}")
    elif kind in "iu":
        dt = np.dtype("<i8")
    else:
        raise TensorFileError(f"unsupported dtype {arr.dtype}")
    if dt.str not in _DTYPES:
        raise TensorFileError(f"unsupported dtype {arr.dtype}")
    return dt


def layout(tensors: dict) -> list[dict]:
    entries, offset = [], 0
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        dt = _le_dtype(arr)
        nbytes = int(arr.size * dt.itemsize)
        entries.append(
            {"name": name, "shape": list(arr.shape), "dtype": dt.str, "offset": offset, "nbytes": nbytes}
        )
        offset += nbytes
    return entries


def write_manifest(path, entries: list[dict], meta: dict | None = None) -> Path:
    mpath = manifest_path(path)
    manifest = {
        "format": FORMAT,
        "version": VERSION,
        "blob": mpath.with_suffix(".bin").name,
        "tensors": entries,
        "meta": meta or {},
    }
    tmp = mpath.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(manifest, indent=2) + "\n")
    os.replace(tmp, mpath)
    return mpath


def save_tensors(path, tensors: dict, meta: dict | None = None) -> Path:
    """Write ``tensors`` (name -> array) and ``meta``; returns the manifest path."""
    mpath = manifest_path(path)
    mpath.parent.mkdir(parents=True, exist_ok=True)
    entries = layout(tensors)
    bpath = mpath.with_suffix(".bin")
    tmp = bpath.with_suffix(".bin.tmp")
    with open(tmp, "wb") as fh:
        for entry, arr in zip(entries, tensors.values()):
            fh.write(np.ascontiguousarray(arr, dtype=np.dtype(entry["dtype"])).tobytes())
    os.replace(tmp, bpath)
    return write_manifest(mpath, entries, meta)


def read_manifest(path) -> dict:
    mpath = manifest_path(path)
    try:
        manifest = json.loads(mpath.read_text())
    except FileNotFoundError:
        raise
    except (OSError, json.JSONDecodeError) as exc:
        raise TensorFileError(f"cannot parse manifest {mpath}: {exc}") from exc
    if manifest.get("format") != FORMAT or manifest.get("version") != VERSION:
        raise TensorFileError(f"{mpath} is not a {FORMAT} v{VERSION} manifest")
    return manifest


def load_tensors(path) -> tuple[dict, dict]:
    """Inverse of :func:`save_tensors`; returns ``(tensors, meta)``."""
    mpath = manifest_path(path)
    manifest = read_manifest(mpath)
    blob = (mpath.parent / manifest["blob"]).read_bytes()
    tensors = {}
    for entry in manifest["tensors"]:
        dt = _DTYPES.get(entry["dtype"])
        if dt is None:
            raise TensorFileError(f"unknown dtype {entry['dtype']!r}")
        start, nbytes = entry["offset"], entry["nbytes"]
        shape = tuple(entry["shape"])
        if start + nbytes > len(blob) or nbytes != int(np.prod(shape, dtype=np.int64)) * dt.itemsize:
            raise TensorFileError(f"tensor {entry['name']!r} does not fit the blob")
        arr = np.frombuffer(blob, dtype=dt, count=nbytes // dt.itemsize, offset=start)
        tensors[entry["name"]] = arr.reshape(shape).copy()
    return tensors, manifest["meta"]


def content_id(path) -> str:
    """SHA-256 of a tensor file's blob: a location-independent identifier."""
    mpath = manifest_path(path)
    blob = mpath.parent / read_manifest(mpath)["blob"]
    return hashlib.sha256(blob.read_bytes()).hexdigest()

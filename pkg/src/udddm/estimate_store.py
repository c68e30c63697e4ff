"""Per-sample running estimates ``x0^(n)`` kept across training epochs.

Two backings are available. ``"memory"`` keeps plain numpy arrays;
``"disk"`` memory-maps the blob of a tensor file (tensors ``estimates`` and
``visit_count``) so the buffer survives a reopen.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from udddm import tensorio
from udddm._validation import check_int

EPOCH_BYTES = 8


@dataclass(frozen=True)
class Footprint:
    """Byte counts: estimate payload, bookkeeping (visit counts + epoch), total."""

    estimates: int
    bookkeeping: int

    @property
    def total(self) -> int:
        return self.estimates + self.bookkeeping

    def __int__(self):
        return self.total


def footprint_for(n_data: int, data_dim: int, bytes_per_scalar: int = 8) -> Footprint:
    """``n_data * data_dim * bytes_per_scalar`` payload plus ``8 * n_data + 8`` bookkeeping."""
    n_data = check_int(n_data, "n_data", minimum=0)
    data_dim = check_int(data_dim, "data_dim", minimum=1)
    return Footprint(n_data * data_dim * int(bytes_per_scalar), 8 * n_data + EPOCH_BYTES)


class EstimateBuffer:
    """Estimates, visit counts and the global epoch counter."""

    def __init__(self, estimates: np.ndarray, visit_count: np.ndarray, epoch: int = 0,
                 path: Path | None = None):
        self.estimates = estimates
        self.visit_count = visit_count
        self.epoch = int(epoch)
        self.path = path

    @property
    def backing(self) -> str:
        return "memory" if self.path is None else "disk"

    @property
    def n_data(self) -> int:
        return int(self.estimates.shape[0])

    @property
    def data_dim(self) -> int:
        return int(self.estimates.shape[1])

    def _check_indices(self, indices) -> np.ndarray:
        idx = np.asarray(indices)
        if idx.dtype.kind not in "iu":
            raise IndexError("indices must be integers")
        idx = idx.astype(np.int64).ravel()
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_data):
            raise IndexError(f"indices outside 0..{self.n_data - 1}")
        return idx

    def read(self, indices) -> np.ndarray:
        idx = self._check_indices(indices)
        return np.asarray(self.estimates[idx], dtype=np.float64)

    def write(self, indices, new_estimates) -> None:
        """Replace the estimates at ``indices`` and bump their visit counts."""
        idx = self._check_indices(indices)
        if np.unique(idx).size != idx.size:
            raise ValueError("duplicate indices in a single write")
        new = np.asarray(new_estimates, dtype=np.float64)
        if new.shape != (idx.size, self.data_dim):
            raise ValueError(f"expected estimates of shape {(idx.size, self.data_dim)}, got {new.shape}")
        self.estimates[idx] = new
        self.visit_count[idx] += 1

    def flush(self) -> None:
        if self.path is not None:
            self.estimates.flush()
            self.visit_count.flush()
            _write_disk_manifest(self.path, self.estimates, self.visit_count, self.epoch)

    def snapshot(self) -> dict:
        return {
            "estimates": np.array(self.estimates, dtype=self.estimates.dtype),
            "visit_count": np.array(self.visit_count, dtype=np.int64),
            "epoch": self.epoch,
        }

    def restore(self, snap: dict) -> None:
        self.estimates[...] = snap["estimates"]
        self.visit_count[...] = snap["visit_count"]
        self.epoch = int(snap["epoch"])

    def save(self, path) -> Path:
        return tensorio.save_tensors(
            path,
            {"estimates": self.estimates, "visit_count": self.visit_count},
            {"epoch": self.epoch},
        )

    @classmethod
    def load(cls, path) -> "EstimateBuffer":
        tensors, meta = tensorio.load_tensors(path)
        return cls(tensors["estimates"], tensors["visit_count"].astype(np.int64), meta.get("epoch", 0))

    @classmethod
    def open(cls, path) -> "EstimateBuffer":
        """Reopen a disk-backed buffer in place (writes go straight to the blob)."""
        mpath = tensorio.manifest_path(path)
        manifest = tensorio.read_manifest(mpath)
        entries = {e["name"]: e for e in manifest["tensors"]}
        bpath = mpath.parent / manifest["blob"]
        est_e, cnt_e = entries["estimates"], entries["visit_count"]
        est = np.memmap(bpath, dtype=est_e["dtype"], mode="r+", offset=est_e["offset"],
                        shape=tuple(est_e["shape"]))
        cnt = np.memmap(bpath, dtype="<i8", mode="r+", offset=cnt_e["offset"],
                        shape=tuple(cnt_e["shape"]))
        return cls(est, cnt, manifest["meta"].get("epoch", 0), path=mpath)


def _write_disk_manifest(path, estimates, visit_count, epoch):
    entries = tensorio.layout({"estimates": estimates, "visit_count": visit_count})
    tensorio.write_manifest(path, entries, {"epoch": int(epoch), "backing": "disk"})


def init_buffer(n_data: int, data_dim: int, seed: int, backing: str = "memory",
                path=None, dtype=np.float64) -> EstimateBuffer:
    """Fill a fresh buffer with independent standard-normal draws.

    ``backing="disk"`` requires ``path`` (manifest path or stem).
    """
    n_data = check_int(n_data, "n_data", minimum=1)
    data_dim = check_int(data_dim, "data_dim", minimum=1)
    draws = np.random.default_rng(seed).standard_normal((n_data, data_dim))
    if backing == "memory":
        return EstimateBuffer(draws.astype(dtype), np.zeros(n_data, dtype=np.int64))
    if backing != "disk":
        raise ValueError(f"unknown backing {backing!r}")
    if path is None:
        raise ValueError("disk backing needs a path")
    mpath = tensorio.save_tensors(
        path,
        {"estimates": draws.astype(dtype), "visit_count": np.zeros(n_data, dtype=np.int64)},
        {"epoch": 0, "backing": "disk"},
    )
    return EstimateBuffer.open(mpath)


def memory_footprint(buffer: EstimateBuffer) -> Footprint:
    return footprint_for(buffer.n_data, buffer.data_dim, buffer.estimates.dtype.itemsize)

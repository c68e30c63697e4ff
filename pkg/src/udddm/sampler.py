"""One-step and multistep generation by fixed-point iteration at ``t = T``.

``x_T`` is held fixed for all iterations and ``t`` never changes; only the
estimate is refined: ``x0^(n+1) = f_theta(x0^(n), x_T, T)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from udddm import tensorio
from udddm._validation import check_int
from udddm.network import Network, params_finite


@dataclass
class SampleRun:
    steps: int
    count: int
    seed: int
    outputs: np.ndarray
    trajectory: np.ndarray | None = None
    x_T: np.ndarray | None = None


def initial_noise(count: int, dim: int, seed: int, sigma_max: float = 1.0):
    """Per-sample ``(x0^(0), x_T)``; sample ``i`` depends only on ``(seed, i)``.

    The two draws use separate streams and only ``x_T`` is scaled.
    """
    x0 = np.empty((count, dim))
    xT = np.empty((count, dim))
    for i in range(count):
        x0[i] = np.random.default_rng([seed, 0, i]).standard_normal(dim)
        xT[i] = np.random.default_rng([seed, 1, i]).standard_normal(dim)
    return x0, sigma_max * xT


def iterate(network: Network, params, schedule, x0_init, x_T, steps: int,
            record_trajectory: bool = False, call_hook=None):
    """Run ``steps`` fixed-point updates; returns ``(final, trajectory or None)``."""
    T = schedule.T
    est = np.array(x0_init, dtype=np.float64)
    traj = [est.copy()] if record_trajectory else None
    t = np.full(est.shape[0], T)
    for n in range(steps):
        if call_hook is not None:
            call_hook(n, est, x_T, t)
        est = network.f_theta(params, est, x_T, t, schedule)
        if record_trajectory:
            traj.append(est.copy())
    return est, (np.stack(traj) if record_trajectory else None)


def sample(network: Network, params, schedule, steps: int = 1, count: int = 1, seed: int = 0,
           record_trajectory: bool = False, call_hook=None) -> SampleRun:
    """Draw ``count`` samples with ``steps`` fixed-point iterations.

    For VE schedules ``x_T`` is scaled by ``sigma_max``.
    """
    steps = check_int(steps, "steps", minimum=1)
    count = check_int(count, "count", minimum=0)
    if not params_finite(params):
        raise FloatingPointError("parameters contain NaN or Inf")
    dim = network.config.data_dim
    scale = schedule.sigma_max if schedule.kind == "ve" else 1.0
    x0, xT = initial_noise(count, dim, seed, scale)
    if count == 0:
        traj = np.empty((steps + 1, 0, dim)) if record_trajectory else None
        return SampleRun(steps, 0, seed, np.empty((0, dim)), traj, xT)
    out, traj = iterate(network, params, schedule, x0, xT, steps, record_trajectory, call_hook)
    return SampleRun(steps, count, seed, out, traj, xT)


def write_samples(path, run: SampleRun, checkpoint_id: str | None = None, weights: str = "ema",
                  csv_path=None):
    """Save ``run.outputs`` as tensor ``samples`` with the run metadata; optional CSV export."""
    meta = {"kind": "samples", "steps": run.steps, "count": run.count, "seed": run.seed,
            "weights": weights, "checkpoint": checkpoint_id}
    mpath = tensorio.save_tensors(path, {"samples": run.outputs}, meta)
    if csv_path is not None:
        header = ",".join(f"x{i}" for i in range(run.outputs.shape[1]))
        np.savetxt(csv_path, run.outputs, delimiter=",", header=header, comments="", fmt="%.17g")
    return mpath


def fixed_point_residual(trajectory) -> np.ndarray:
    """``||x0^(n+1) - x0^(n)||`` per iteration (rows) and sample (columns)."""
    if trajectory is None:
        raise ValueError("no trajectory recorded; sample with record_trajectory=True")
    traj = np.asarray(trajectory, dtype=np.float64)
    if traj.ndim == 2:
        traj = traj[:, None, :]
    if traj.shape[0] < 2:
        raise ValueError("trajectory needs at least two iterates")
    return np.linalg.norm(np.diff(traj, axis=0), axis=-1)

"""Training loop: adaptive loss, Adam, EMA weights and per-epoch telemetry.

One epoch is one seeded shuffled pass over the dataset. The epoch index
``n`` sets the loss mix (guide weight ``1/(n+1)``) for every step of that
epoch. Each step draws ``t`` uniformly from ``1..T`` and ``eps ~ N(0, I)``
per sample, predicts ``f_theta(x0_est, x_t, t)`` from the pre-update
weights, takes one Adam step on the batch-mean loss, updates the EMA
shadow weights and finally writes the prediction back into the estimate
buffer.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from udddm import tensorio
from udddm.estimate_store import EstimateBuffer, init_buffer
from udddm.evalkit import DatasetSpec, generate_dataset
from udddm.losses import C_VE, C_VP, adaptive_weights, batch_adaptive_loss
from udddm.network import Network, NetworkConfig, params_finite
from udddm.schedules import forward_noise, make_schedule

logger = logging.getLogger(__name__)

METRICS_HEADER = "epoch,w_guide,L_guide,L_iter,L_uddd,wall_time"


class NonFiniteError(FloatingPointError):
    """A loss or gradient became NaN/Inf during a training step."""


@dataclass
class ScheduleConfig:
    kind: str = "vp"
    T: int = 100
    beta_start: float = 1.5e-3
    beta_end: float = 2.0e-2
    sigma_min: float = 0.01
    sigma_max: float = 50.0
    rho: float = 7.0
    kappa: str = "sigma_min"
    sigma_data: float = 0.5

    def build(self):
        params = asdict(self)
        kind, T = params.pop("kind"), params.pop("T")
        return make_schedule(kind, T, **params)


@dataclass
class TrainConfig:
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    epochs: int = 200
    batch_size: int = 256
    learning_rate: float = 2e-4
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    ema_decay: float = 0.9999
    ema_warmup: bool = True
    seed: int = 0
    c: float | None = None
    grad_clip: float | None = None
    snapshot_epochs: tuple = ()

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if not 0.0 < self.ema_decay < 1.0:
            raise ValueError("ema_decay must lie in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")

    @property
    def pseudo_huber_c(self) -> float:
        if self.c is not None:
            return float(self.c)
        return C_VP if self.schedule.kind == "vp" else C_VE


@dataclass
class EpochRecord:
    epoch: int
    w_guide: float
    L_guide: float
    L_iter: float
    L_uddd: float
    wall_time: float

    def row(self) -> str:
        return (f"{self.epoch},{self.w_guide:.17g},{self.L_guide:.17g},"
                f"{self.L_iter:.17g},{self.L_uddd:.17g},{self.wall_time:.3f}")


@dataclass
class TrainState:
    params: dict
    adam_m: dict
    adam_v: dict
    ema_params: dict
    epoch: int = 0
    step: int = 0
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    history: list = field(default_factory=list)


def zeros_like(params: dict) -> dict:
    return {k: np.zeros_like(v) for k, v in params.items()}


def copy_params(params: dict) -> dict:
    return {k: v.copy() for k, v in params.items()}


def ema_update(ema_params: dict, params: dict, decay: float) -> dict:
    """``decay * ema + (1 - decay) * params`` for every tensor (in place and returned)."""
    if not 0.0 < decay < 1.0:
        raise ValueError(f"decay must lie in (0, 1), got {decay}")
    if list(ema_params) != list(params):
        raise ValueError("ema and params have different tensors")
    for k, v in params.items():
        if ema_params[k].shape != v.shape:
            raise ValueError(f"shape mismatch for {k}")
        ema_params[k] *= decay
        ema_params[k] += (1.0 - decay) * v
    return ema_params


def ema_decay_at(step: int, decay: float, warmup: bool) -> float:
    """Effective EMA decay for the ``step``-th update (1-based).

    With warmup the decay is capped at ``(1 + step) / (10 + step)`` so the
    shadow weights are not dominated by the initialisation in short runs.
    """
    return min(decay, (1.0 + step) / (10.0 + step)) if warmup else decay


def adam_update(params, grads, m, v, step: int, lr: float, betas=(0.9, 0.999), eps=1e-8):
    """Bias-corrected Adam step; updates ``params``, ``m`` and ``v`` in place."""
    b1, b2 = betas
    corr1 = 1.0 - b1**step
    corr2 = 1.0 - b2**step
    for k, g in grads.items():
        m[k] *= b1
        m[k] += (1.0 - b1) * g
        v[k] *= b2
        v[k] += (1.0 - b2) * g * g
        m_hat = m[k] / corr1
        v_hat = v[k] / corr2
        params[k] -= lr * m_hat / (np.sqrt(v_hat) + eps)


def init_state(config: TrainConfig) -> TrainState:
    net = Network(config.network)
    params = net.init_params()
    return TrainState(
        params=params,
        adam_m=zeros_like(params),
        adam_v=zeros_like(params),
        ema_params=copy_params(params),
        rng=np.random.default_rng([config.seed, 1]),
    )


@dataclass
class StepResult:
    L_guide: float
    L_iter: float
    L_uddd: float


def train_step(state: TrainState, buffer: EstimateBuffer, indices, x0, config: TrainConfig,
               network: Network, schedule, rng=None) -> StepResult:
    """One optimisation step on the batch ``(indices, x0)``; mutates state and buffer."""
    rng = state.rng if rng is None else rng
    x0 = np.asarray(x0, dtype=np.float64)
    m = x0.shape[0]
    t = rng.integers(1, schedule.T + 1, size=m)
    eps = rng.standard_normal(x0.shape)
    x_t = forward_noise(schedule, t, x0, eps)
    x0_est = buffer.read(indices)

    pred, cache = network.f_theta_with_cache(state.params, x0_est, x_t, t, schedule)
    loss = batch_adaptive_loss(pred, x0, x0_est, buffer.epoch, config.pseudo_huber_c)
    if not np.isfinite(loss.total):
        raise NonFiniteError(f"non-finite loss at step {state.step} (epoch {state.epoch})")
    grads = network.backward_from_cache(state.params, cache, loss.grad_pred)
    if not params_finite(grads):
        raise NonFiniteError(f"non-finite gradient at step {state.step} (epoch {state.epoch})")
    if config.grad_clip is not None:
        norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        if norm > config.grad_clip:
            grads = {k: g * (config.grad_clip / norm) for k, g in grads.items()}

    state.step += 1
    if config.learning_rate > 0:
        adam_update(state.params, grads, state.adam_m, state.adam_v, state.step,
                    config.learning_rate, config.adam_betas, config.adam_eps)
    decay = ema_decay_at(state.step, config.ema_decay, config.ema_warmup)
    ema_update(state.ema_params, state.params, decay)
    buffer.write(indices, pred)
    return StepResult(loss.guide, loss.iterate, loss.total)


def run_epoch(state, buffer, data, config, network, schedule) -> EpochRecord:
    start = time.perf_counter()
    n = buffer.epoch
    order = state.rng.permutation(data.shape[0])
    sums = np.zeros(3)
    count = 0
    for lo in range(0, order.size, config.batch_size):
        idx = order[lo : lo + config.batch_size]
        res = train_step(state, buffer, idx, data[idx], config, network, schedule)
        # sample-weighted so the epoch mean is the mean over the dataset
        sums += idx.size * np.array([res.L_guide, res.L_iter, res.L_uddd])
        count += idx.size
    lg, li, lu = sums / count
    w = adaptive_weights(n)
    record = EpochRecord(n, w.w_guide, lg, li, lu, time.perf_counter() - start)
    buffer.epoch += 1
    state.epoch = buffer.epoch
    state.history.append(record)
    return record


@dataclass
class TrainResult:
    state: TrainState
    buffer: EstimateBuffer
    data: np.ndarray
    snapshots: dict = field(default_factory=dict)

    @property
    def history(self) -> list:
        return self.state.history


def snapshot(state: TrainState, buffer: EstimateBuffer) -> dict:
    return {
        "epoch": state.epoch,
        "params": copy_params(state.params),
        "ema_params": copy_params(state.ema_params),
        "estimates": buffer.snapshot()["estimates"],
    }


def train(config: TrainConfig, out_dir=None, checkpoint_every: int | None = None,
          buffer_backing: str = "memory", state: TrainState | None = None,
          buffer: EstimateBuffer | None = None, epochs: int | None = None,
          data: np.ndarray | None = None) -> TrainResult:
    """Run ``config.epochs`` epochs (or ``epochs`` more when resuming).

    The training set is ``data`` when given, else drawn from ``config.dataset``.
    With ``out_dir`` set, writes ``metrics.csv``, periodic checkpoints
    (``checkpoint_every`` epochs), one ``snapshots/epochNNNNN`` checkpoint and
    estimate pair per snapshot epoch, and a final ``checkpoint``/``estimates`` pair.
    """
    network = Network(config.network)
    schedule = config.schedule.build()
    data = generate_dataset(config.dataset) if data is None else np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != config.network.data_dim:
        raise ValueError(f"data of shape {data.shape} does not match network data_dim")
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    if state is None:
        state = init_state(config)
    if buffer is None:
        path = out_dir / "estimates_live" if buffer_backing == "disk" and out_dir else None
        buffer = init_buffer(data.shape[0], data.shape[1], seed=[config.seed, 2],
                             backing=buffer_backing, path=path)
    result = TrainResult(state, buffer, data)
    metrics = None
    if out_dir is not None:
        metrics = open(out_dir / "metrics.csv", "w" if state.epoch == 0 else "a")
        if state.epoch == 0:
            metrics.write(METRICS_HEADER + "\n")
    try:
        total = config.epochs if epochs is None else state.epoch + epochs
        while state.epoch < total:
            record = run_epoch(state, buffer, data, config, network, schedule)
            logger.info("epoch %d  L_guide=%.5f  L_iter=%.5f  L=%.5f", record.epoch,
                        record.L_guide, record.L_iter, record.L_uddd)
            if metrics is not None:
                metrics.write(record.row() + "\n")
                metrics.flush()
            if state.epoch in config.snapshot_epochs:
                result.snapshots[state.epoch] = snapshot(state, buffer)
                if out_dir is not None:
                    save_snapshot(out_dir / "snapshots", state, buffer, config)
            if out_dir is not None and checkpoint_every and state.epoch % checkpoint_every == 0:
                save_checkpoint(out_dir / f"checkpoint_epoch{state.epoch:05d}", state, config)
    finally:
        if metrics is not None:
            metrics.close()
    if out_dir is not None:
        buffer.flush()
        save_checkpoint(out_dir / "checkpoint", state, config, buffer_ref="estimates.json")
        buffer.save(out_dir / "estimates")
    return result


# -- checkpoints ------------------------------------------------------------

def save_snapshot(directory, state: TrainState, buffer: EstimateBuffer, config: TrainConfig):
    directory = Path(directory)
    stem = f"epoch{state.epoch:05d}"
    buffer.save(directory / f"{stem}_estimates")
    save_checkpoint(directory / stem, state, config, buffer_ref=f"{stem}_estimates.json")


def load_snapshots(directory) -> dict:
    """Read every ``snapshots/epochNNNNN`` pair back into the in-memory snapshot layout."""
    directory = Path(directory)
    snaps = {}
    for mpath in sorted(directory.glob("epoch[0-9][0-9][0-9][0-9][0-9].json")):
        state, _ = load_checkpoint(mpath)
        buf = EstimateBuffer.load(directory / f"{mpath.stem}_estimates")
        snaps[state.epoch] = {"epoch": state.epoch, "params": state.params,
                              "ema_params": state.ema_params, "estimates": buf.estimates}
    return snaps


def _rng_to_meta(rng: np.random.Generator) -> dict:
    st = rng.bit_generator.state
    return {"bit_generator": st["bit_generator"], "state": {k: str(v) for k, v in st["state"].items()},
            "has_uint32": st["has_uint32"], "uinteger": st["uinteger"]}


def _rng_from_meta(meta: dict) -> np.random.Generator:
    bg = getattr(np.random, meta["bit_generator"])()
    bg.state = {"bit_generator": meta["bit_generator"],
                "state": {k: int(v) for k, v in meta["state"].items()},
                "has_uint32": meta["has_uint32"], "uinteger": meta["uinteger"]}
    return np.random.Generator(bg)


def save_checkpoint(path, state: TrainState, config: TrainConfig, buffer_ref: str | None = None):
    from udddm.config import train_config_to_dict

    tensors = {}
    for group, d in (("params", state.params), ("adam_m", state.adam_m),
                     ("adam_v", state.adam_v), ("ema", state.ema_params)):
        for k, v in d.items():
            tensors[f"{group}/{k}"] = v
    meta = {
        "kind": "checkpoint",
        "epoch": state.epoch,
        "step": state.step,
        "rng": _rng_to_meta(state.rng),
        "config": train_config_to_dict(config),
        "estimates": buffer_ref,
        "history": [[r.epoch, r.w_guide, r.L_guide, r.L_iter, r.L_uddd] for r in state.history],
    }
    return tensorio.save_tensors(path, tensors, meta)


def load_checkpoint(path):
    """Returns ``(state, config)``; the estimate buffer is referenced in ``meta``."""
    from udddm.config import train_config_from_dict

    tensors, meta = tensorio.load_tensors(path)
    if meta.get("kind") != "checkpoint":
        raise tensorio.TensorFileError(f"{path} is not a checkpoint")
    config = train_config_from_dict(meta["config"])
    groups = {"params": {}, "adam_m": {}, "adam_v": {}, "ema": {}}
    for name, arr in tensors.items():
        group, key = name.split("/", 1)
        groups[group][key] = arr
    history = [EpochRecord(int(h[0]), *h[1:], wall_time=0.0) for h in meta["history"]]
    state = TrainState(groups["params"], groups["adam_m"], groups["adam_v"], groups["ema"],
                       epoch=meta["epoch"], step=meta["step"], rng=_rng_from_meta(meta["rng"]),
                       history=history)
    Network(config.network).check_params(state.params)
    return state, config

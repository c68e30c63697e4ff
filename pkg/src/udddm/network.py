"""Fully-connected regressor ``F_theta(x0_est, x_t, t)`` with hand-written backprop.

The network sees ``[x0_est, c_in(t) * x_t, emb(t)]`` concatenated at the
input, runs a stack of smooth hidden layers and ends in a zero-initialised
linear head, so an untrained model gives ``F = 0`` and ``f_theta = a * x_t``.

Parameters are plain ``dict[str, ndarray]`` in insertion order
(``W0, b0, W1, b1, ...``), all float64. Weight matrices are stored
``(fan_in, fan_out)`` and applied as ``h @ W + b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from udddm._validation import as_matrix, check_int, check_steps


def _silu(z):
    s = expit(z)
    return z * s, s * (1.0 + z * (1.0 - s))


def _tanh(z):
    h = np.tanh(z)
    return h, 1.0 - h * h


def _softplus(z):
    return np.logaddexp(0.0, z), expit(z)


# name -> function returning (value, derivative)
ACTIVATIONS = {"silu": _silu, "tanh": _tanh, "softplus": _softplus}


@dataclass(frozen=True)
class NetworkConfig:
    data_dim: int = 2
    hidden_dims: tuple = (128, 128, 128)
    time_embed_dim: int = 32
    activation: str = "silu"
    seed: int = 0
    # divide x_t by its marginal std sqrt(scale^2 * sigma_data^2 + std^2)
    input_scaling: bool = True
    sigma_data: float = 1.0

    def __post_init__(self):
        check_int(self.data_dim, "data_dim", minimum=1)
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if any(h < 1 for h in self.hidden_dims):
            raise ValueError("hidden dims must be >= 1")
        check_int(self.time_embed_dim, "time_embed_dim", minimum=2)
        if self.time_embed_dim % 2:
            raise ValueError("time_embed_dim must be even")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def layer_sizes(self) -> list[int]:
        return [2 * self.data_dim + self.time_embed_dim, *self.hidden_dims, self.data_dim]

    @property
    def n_params(self) -> int:
        s = self.layer_sizes
        return sum(s[i] * s[i + 1] + s[i + 1] for i in range(len(s) - 1))


def time_embedding(t, T: int, dim: int) -> np.ndarray:
    """Sinusoidal embedding of ``t / T``; returns shape ``(len(t), dim)``.

    Frequencies are spaced geometrically from 1 to 1000 radians per unit of
    ``t / T``, so the lowest one is monotone over the whole schedule.
    """
    if dim % 2:
        raise ValueError("embedding dim must be even")
    t = check_steps(np.atleast_1d(t), T)
    half = dim // 2
    freqs = 1000.0 ** (np.arange(half) / max(half - 1, 1))
    phase = (t.astype(np.float64) / T)[:, None] * freqs[None, :]
    return np.concatenate([np.sin(phase), np.cos(phase)], axis=1)


@dataclass
class _Cache:
    inputs: list = field(default_factory=list)
    dact: list = field(default_factory=list)


class Network:
    """Evaluation and exact gradients for one :class:`NetworkConfig`."""

    def __init__(self, config: NetworkConfig):
        self.config = config
        self._act = ACTIVATIONS[config.activation]

    @property
    def n_layers(self) -> int:
        return len(self.config.layer_sizes) - 1

    def param_names(self) -> list[str]:
        names = []
        for i in range(self.n_layers):
            names += [f"W{i}", f"b{i}"]
        return names

    def param_shapes(self) -> dict[str, tuple]:
        s = self.config.layer_sizes
        shapes = {}
        for i in range(self.n_layers):
            shapes[f"W{i}"] = (s[i], s[i + 1])
            shapes[f"b{i}"] = (s[i + 1],)
        return shapes

    def init_params(self, seed: int | None = None, zero_head: bool = True) -> dict:
        """Fan-in scaled normal weights, zero biases, zero output layer by default."""
        rng = np.random.default_rng(self.config.seed if seed is None else seed)
        params = {}
        for name, shape in self.param_shapes().items():
            if name.startswith("W"):
                params[name] = rng.standard_normal(shape) / np.sqrt(shape[0])
            else:
                params[name] = np.zeros(shape)
        if zero_head:
            last = self.n_layers - 1
            params[f"W{last}"] = np.zeros_like(params[f"W{last}"])
        return params

    def check_params(self, params: dict) -> None:
        shapes = self.param_shapes()
        if list(params) != list(shapes):
            raise ValueError(f"parameter names {list(params)} do not match {list(shapes)}")
        for name, shape in shapes.items():
            if params[name].shape != shape:
                raise ValueError(f"{name} has shape {params[name].shape}, expected {shape}")

    def _inputs(self, x0_est, x_t, t, schedule):
        D = self.config.data_dim
        x0_est = as_matrix(x0_est, "x0_est", D)
        x_t = as_matrix(x_t, "x_t", D)
        if x0_est.shape != x_t.shape:
            raise ValueError(f"x0_est {x0_est.shape} and x_t {x_t.shape} differ in shape")
        t = check_steps(np.broadcast_to(np.asarray(t), (x_t.shape[0],)), schedule.T)
        if self.config.input_scaling:
            scale = schedule.signal_scale(t)
            std = schedule.noise_std(t)
            c_in = 1.0 / np.sqrt(scale**2 * self.config.sigma_data**2 + std**2)
            x_in = x_t * c_in[:, None]
        else:
            x_in = x_t
        emb = time_embedding(t, schedule.T, self.config.time_embed_dim)
        return np.concatenate([x0_est, x_in, emb], axis=1), x_t, t

    def _run(self, params, h):
        cache = _Cache()
        last = self.n_layers - 1
        for i in range(self.n_layers):
            cache.inputs.append(h)
            z = h @ params[f"W{i}"] + params[f"b{i}"]
            if i == last:
                return z, cache
            h, d = self._act(z)
            cache.dact.append(d)

    def forward(self, params, x0_est, x_t, t, schedule) -> np.ndarray:
        """Network output ``F`` for a batch (rows) or a single vector."""
        h, _, _ = self._inputs(x0_est, x_t, t, schedule)
        out, _ = self._run(params, h)
        return out

    def f_theta(self, params, x0_est, x_t, t, schedule) -> np.ndarray:
        """Solution-map estimate ``a(sigma_t) * x_t + b(sigma_t) * F``."""
        h, x_t, t = self._inputs(x0_est, x_t, t, schedule)
        out, _ = self._run(params, h)
        a, b = schedule.coefficients(t)
        return a[:, None] * x_t + b[:, None] * out

    def f_theta_with_cache(self, params, x0_est, x_t, t, schedule):
        h, x_t, t = self._inputs(x0_est, x_t, t, schedule)
        out, cache = self._run(params, h)
        a, b = schedule.coefficients(t)
        return a[:, None] * x_t + b[:, None] * out, (cache, b)

    def backward_from_cache(self, params, state, upstream_grad) -> dict:
        cache, b = state
        upstream_grad = np.asarray(upstream_grad, dtype=np.float64)
        delta = b[:, None] * upstream_grad.reshape(b.shape[0], -1)
        grads = {}
        for i in reversed(range(self.n_layers)):
            grads[f"W{i}"] = cache.inputs[i].T @ delta
            grads[f"b{i}"] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ params[f"W{i}"].T) * cache.dact[i - 1]
        return {name: grads[name] for name in self.param_names()}

    def backward(self, params, x0_est, x_t, t, schedule, upstream_grad) -> dict:
        """Gradient of ``sum(upstream_grad * f_theta)`` with respect to every parameter.

        Inputs are treated as constants; rows of a batch are summed.
        """
        _, state = self.f_theta_with_cache(params, x0_est, x_t, t, schedule)
        upstream_grad = as_matrix(upstream_grad, "upstream_grad", self.config.data_dim)
        if upstream_grad.shape[0] != state[1].shape[0]:
            raise ValueError("upstream_grad rows do not match the batch")
        return self.backward_from_cache(params, state, upstream_grad)


def params_finite(params: dict) -> bool:
    return all(np.all(np.isfinite(v)) for v in params.values())

"""scikit-learn style front end.

``UDDDMGenerator`` wraps training and fixed-point sampling behind the
usual estimator API so it can sit inside pipelines or a grid search::

    gen = UDDDMGenerator(epochs=50, random_state=0).fit(X)
    samples = gen.sample(1000, n_steps=2)
    gen.score(X_heldout)          # negative sliced Wasserstein distance
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from udddm.evalkit import DatasetSpec, sliced_wasserstein
from udddm.network import Network, NetworkConfig
from udddm.sampler import initial_noise, iterate, sample
from udddm.trainer import ScheduleConfig, TrainConfig, load_checkpoint, train


class UDDDMGenerator(BaseEstimator):
    """Unified directly-denoising diffusion generator.

    Parameters mirror :class:`udddm.trainer.TrainConfig`; ``schedule`` is
    one of ``"vp"``, ``"ve_geometric"`` or ``"ve_karras"``. Fitted attributes
    end in an underscore (``state_``, ``history_``, ``network_``...).
    """

    def __init__(self, schedule="vp", T=100, beta_start=1.5e-3, beta_end=2.0e-2,
                 sigma_min=0.01, sigma_max=50.0, rho=7.0, hidden_dims=(128, 128, 128),
                 time_embed_dim=32, activation="silu", epochs=200, batch_size=256,
                 learning_rate=2e-4, ema_decay=0.9999, c=None, n_steps=1, random_state=0):
        self.schedule = schedule
        self.T = T
        self.beta_start = beta_start
        self.beta_end = beta_end
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max
        self.rho = rho
        self.hidden_dims = hidden_dims
        self.time_embed_dim = time_embed_dim
        self.activation = activation
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.ema_decay = ema_decay
        self.c = c
        self.n_steps = n_steps
        self.random_state = random_state

    def _config(self, n_samples, n_features) -> TrainConfig:
        seed = 0 if self.random_state is None else int(self.random_state)
        return TrainConfig(
            schedule=ScheduleConfig(kind=self.schedule, T=self.T, beta_start=self.beta_start,
                                    beta_end=self.beta_end, sigma_min=self.sigma_min,
                                    sigma_max=self.sigma_max, rho=self.rho),
            network=NetworkConfig(data_dim=n_features, hidden_dims=tuple(self.hidden_dims),
                                  time_embed_dim=self.time_embed_dim,
                                  activation=self.activation, seed=seed),
            dataset=DatasetSpec(kind="gmm" if n_features != 2 else "eight_gaussians",
                                n_data=n_samples, dim=n_features, seed=seed,
                                params={"weights": [1.0], "means": [[0.0] * n_features],
                                        "stds": [1.0]}),
            epochs=self.epochs, batch_size=self.batch_size, learning_rate=self.learning_rate,
            ema_decay=self.ema_decay, seed=seed, c=self.c,
        )

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        self.config_ = self._config(*X.shape)
        result = train(self.config_, data=X)
        self._set_fitted(result.state, self.config_)
        self.buffer_ = result.buffer
        return self

    def _set_fitted(self, state, config):
        self.config_ = config
        self.state_ = state
        self.network_ = Network(config.network)
        self.schedule_ = config.schedule.build()
        self.history_ = state.history
        self.n_features_in_ = config.network.data_dim

    @classmethod
    def from_checkpoint(cls, path) -> "UDDDMGenerator":
        state, config = load_checkpoint(path)
        s, net = config.schedule, config.network
        gen = cls(schedule=s.kind, T=s.T, beta_start=s.beta_start, beta_end=s.beta_end,
                  sigma_min=s.sigma_min, sigma_max=s.sigma_max, rho=s.rho,
                  hidden_dims=net.hidden_dims, time_embed_dim=net.time_embed_dim,
                  activation=net.activation, epochs=config.epochs, batch_size=config.batch_size,
                  learning_rate=config.learning_rate, ema_decay=config.ema_decay, c=config.c,
                  random_state=config.seed)
        gen._set_fitted(state, config)
        return gen

    def sample(self, n_samples=1, n_steps=None, random_state=None) -> np.ndarray:
        """Generate ``n_samples`` points with EMA weights."""
        check_is_fitted(self, "state_")
        steps = self.n_steps if n_steps is None else n_steps
        seed = (self.random_state or 0) + 1 if random_state is None else random_state
        run = sample(self.network_, self.state_.ema_params, self.schedule_, steps, n_samples, seed)
        return run.outputs

    def transform(self, X, n_steps=None, random_state=None) -> np.ndarray:
        """Map prior draws ``x_T`` (rows of ``X``) to samples by fixed-point iteration.

        Rows of ``X`` are used as given (not rescaled); starting estimates
        ``x0^(0)`` come from ``random_state``.
        """
        check_is_fitted(self, "state_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        steps = self.n_steps if n_steps is None else n_steps
        seed = (self.random_state or 0) + 1 if random_state is None else random_state
        x0, _ = initial_noise(X.shape[0], X.shape[1], seed)
        out, _ = iterate(self.network_, self.state_.ema_params, self.schedule_, x0, X, steps)
        return out

    def score(self, X, y=None) -> float:
        """Negative sliced Wasserstein distance between fresh samples and ``X``."""
        X = check_array(X, dtype=np.float64)
        return -sliced_wasserstein(self.sample(X.shape[0]), X, 128, seed=0)

"""Discrete VP and VE noise schedules and the unified solution-map coefficients.

Step indices run over ``1..T``. Arrays are stored 0-based, so the value for
step ``t`` lives at position ``t - 1``.

Both schedules also expose a continuous-time extension over ``tau in [0, T]``
used by the probability-flow integrator in :mod:`udddm.oracle`. The extension
reproduces the discrete values exactly at every integer step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from udddm._validation import (
    check_int,
    check_open_unit,
    check_positive,
    check_step,
    check_steps,
)

KAPPA_CHOICES = ("sigma_min", "data_linear", "data_quadratic")


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class UnifiedCoefficients:
    """Coefficients of ``f = a * x_t + b * F`` at one step."""

    a: float
    b: float
    sigma_t: float


@dataclass(frozen=True, eq=False)
class VpSchedule:
    """Variance-preserving schedule with per-step variances ``beta``."""

    beta: np.ndarray
    alpha_bar: np.ndarray = field(init=False)
    _log_ab: CubicSpline = field(init=False, repr=False)
    kind = "vp"

    def __post_init__(self):
        beta = _frozen(self.beta)
        if beta.ndim != 1 or beta.size < 1:
            raise ValueError("beta must be a non-empty 1-D array")
        if np.any(beta <= 0.0) or np.any(beta >= 1.0):
            raise ValueError("every beta_t must lie in (0, 1)")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha_bar", _frozen(np.cumprod(1.0 - beta)))
        knots = np.concatenate([[0.0], np.cumsum(np.log1p(-beta))])
        object.__setattr__(self, "_log_ab", CubicSpline(np.arange(beta.size + 1.0), knots))

    @property
    def T(self) -> int:
        return int(self.beta.size)

    @property
    def sigma_max(self) -> float:
        # prior scale used when drawing x_T at sampling time
        return 1.0

    def noise_std(self, t) -> np.ndarray:
        """Standard deviation of the noise term of ``x_t`` given ``x_0``."""
        return np.sqrt(1.0 - self.alpha_bar[check_steps(t, self.T) - 1])

    def signal_scale(self, t) -> np.ndarray:
        return np.sqrt(self.alpha_bar[check_steps(t, self.T) - 1])

    def coefficients(self, t):
        """Vectorised ``(a, b)`` for integer steps ``t``."""
        t = check_steps(t, self.T)
        return np.ones(t.shape), -np.ones(t.shape)

    # continuous-time extension: a C2 cubic spline of log(alpha_bar) through
    # the knots (0, 0), (t, log alpha_bar_t); beta(tau) is its exact negative
    # derivative, so the drift is smooth enough for RK4 to keep its order
    def log_alpha_bar_at(self, tau) -> np.ndarray:
        tau = np.clip(np.asarray(tau, dtype=np.float64), 0.0, self.T)
        return self._log_ab(tau)

    def beta_at(self, tau) -> np.ndarray:
        """Continuous-time rate ``-d log(alpha_bar)/d tau``."""
        tau = np.clip(np.asarray(tau, dtype=np.float64), 0.0, self.T)
        return -self._log_ab(tau, 1)

    def beta_linear_at(self, tau) -> np.ndarray:
        """Linear interpolation of the discrete ``beta_t`` (diagnostics only)."""
        tau = np.asarray(tau, dtype=np.float64)
        return np.interp(tau, np.arange(1, self.T + 1, dtype=np.float64), self.beta)


@dataclass(frozen=True, eq=False)
class VeSchedule:
    """Variance-exploding schedule of increasing noise levels ``sigma``."""

    sigma: np.ndarray
    sigma_min: float
    sigma_max: float
    spacing: str = "geometric"
    rho: float | None = None
    kappa: str = "sigma_min"
    sigma_data: float = 0.5
    kind = "ve"

    def __post_init__(self):
        sigma = _frozen(self.sigma)
        if sigma.ndim != 1 or sigma.size < 1:
            raise ValueError("sigma must be a non-empty 1-D array")
        if sigma.size > 1 and np.any(np.diff(sigma) <= 0.0):
            raise ValueError("sigma must be strictly increasing")
        if not 0.0 < self.sigma_min < self.sigma_max:
            raise ValueError("need 0 < sigma_min < sigma_max")
        if self.spacing not in ("geometric", "karras"):
            raise ValueError(f"unknown spacing {self.spacing!r}")
        if self.kappa not in KAPPA_CHOICES:
            raise ValueError(f"kappa must be one of {KAPPA_CHOICES}, got {self.kappa!r}")
        check_positive(self.sigma_data, "sigma_data")
        object.__setattr__(self, "sigma", sigma)

    @property
    def T(self) -> int:
        return int(self.sigma.size)

    def noise_std(self, t) -> np.ndarray:
        return self.sigma[check_steps(t, self.T) - 1]

    def signal_scale(self, t) -> np.ndarray:
        return np.ones(np.shape(t))

    def kappa_of(self, sigma_t) -> np.ndarray:
        sigma_t = np.asarray(sigma_t, dtype=np.float64)
        if self.kappa == "sigma_min":
            return self.sigma_min / sigma_t
        sd = self.sigma_data
        if self.kappa == "data_linear":
            return sd / (sigma_t + sd)
        return sd**2 / (sigma_t**2 + sd**2)

    def coefficients(self, t):
        k = self.kappa_of(self.noise_std(t))
        return k, 1.0 - k

    def sigma_at(self, tau) -> np.ndarray:
        """Noise level at continuous time ``tau`` using the schedule's own formula."""
        tau = np.asarray(tau, dtype=np.float64)
        if self.spacing == "geometric":
            return self.sigma_min * (self.sigma_max / self.sigma_min) ** (tau / self.T)
        inv = 1.0 / self.rho
        lo, hi = self.sigma_min**inv, self.sigma_max**inv
        return (lo + (tau - 1.0) / (self.T - 1) * (hi - lo)) ** self.rho

    def dsigma2_at(self, tau) -> np.ndarray:
        """``d(sigma^2)/d tau`` of the continuous extension."""
        sig = self.sigma_at(tau)
        if self.spacing == "geometric":
            return 2.0 * sig**2 * np.log(self.sigma_max / self.sigma_min) / self.T
        inv = 1.0 / self.rho
        lo, hi = self.sigma_min**inv, self.sigma_max**inv
        base = sig**inv
        dsig = self.rho * base ** (self.rho - 1.0) * (hi - lo) / (self.T - 1)
        return 2.0 * sig * dsig


def make_vp_linear(T: int, beta_start: float, beta_end: float) -> VpSchedule:
    """Linear variance schedule pinned to ``beta_start`` at t=1 and ``beta_end`` at t=T."""
    T = check_int(T, "T", minimum=1)
    beta_start = check_open_unit(beta_start, "beta_start")
    beta_end = check_open_unit(beta_end, "beta_end")
    if beta_start > beta_end:
        raise ValueError("beta_start must not exceed beta_end")
    if T == 1:
        return VpSchedule(np.array([beta_start]))
    frac = np.arange(T, dtype=np.float64) / (T - 1)
    beta = beta_start + frac * (beta_end - beta_start)
    beta[-1] = beta_end
    return VpSchedule(beta)


def make_ve_geometric(T: int, sigma_min: float, sigma_max: float, **kwargs) -> VeSchedule:
    """``sigma_t = sigma_min * (sigma_max / sigma_min) ** (t / T)`` for t in 1..T.

    Note that ``sigma_1`` is one geometric step above ``sigma_min``.
    """
    T = check_int(T, "T", minimum=1)
    sigma_min = check_positive(sigma_min, "sigma_min")
    sigma_max = check_positive(sigma_max, "sigma_max")
    if sigma_min >= sigma_max:
        raise ValueError("need sigma_min < sigma_max")
    t = np.arange(1, T + 1, dtype=np.float64)
    sigma = sigma_min * (sigma_max / sigma_min) ** (t / T)
    sigma[-1] = sigma_max
    return VeSchedule(sigma, sigma_min, sigma_max, spacing="geometric", **kwargs)


def make_ve_karras(
    T: int, sigma_min: float, sigma_max: float, rho: float = 7.0, **kwargs
) -> VeSchedule:
    """Power-law spacing from ``sigma_min`` at t=1 to ``sigma_max`` at t=T."""
    T = check_int(T, "T", minimum=2)
    sigma_min = check_positive(sigma_min, "sigma_min")
    sigma_max = check_positive(sigma_max, "sigma_max")
    rho = check_positive(rho, "rho")
    if sigma_min >= sigma_max:
        raise ValueError("need sigma_min < sigma_max")
    inv = 1.0 / rho
    lo, hi = sigma_min**inv, sigma_max**inv
    frac = np.arange(T, dtype=np.float64) / (T - 1)
    sigma = (lo + frac * (hi - lo)) ** rho
    sigma[0], sigma[-1] = sigma_min, sigma_max
    return VeSchedule(sigma, sigma_min, sigma_max, spacing="karras", rho=rho, **kwargs)


def unified_coeffs(schedule, t: int) -> UnifiedCoefficients:
    t = check_step(t, schedule.T)
    a, b = schedule.coefficients(np.array([t]))
    return UnifiedCoefficients(float(a[0]), float(b[0]), float(schedule.noise_std(np.array([t]))[0]))


def forward_noise(schedule, t, x0, eps) -> np.ndarray:
    """Noised sample ``x_t`` from clean ``x0`` and standard-normal ``eps``.

    ``t`` may be a scalar step for a single vector or an array of steps, one
    per row of a batch.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ValueError(f"dimension mismatch: x0 {x0.shape} vs eps {eps.shape}")
    t_arr = check_steps(np.asarray(t), schedule.T)
    scale = schedule.signal_scale(t_arr)
    std = schedule.noise_std(t_arr)
    if t_arr.ndim == 1 and x0.ndim == 2:
        scale, std = scale[:, None], std[:, None]
    return scale * x0 + std * eps


def make_schedule(kind: str, T: int, **params):
    """Build a schedule from a config-style description (``vp``, ``ve_geometric``, ``ve_karras``)."""
    if kind == "vp":
        return make_vp_linear(T, params.get("beta_start", 1.5e-3), params.get("beta_end", 2.0e-2))
    ve_extra = {k: params[k] for k in ("kappa", "sigma_data") if k in params}
    if kind == "ve_geometric":
        return make_ve_geometric(
            T, params.get("sigma_min", 0.01), params.get("sigma_max", 50.0), **ve_extra
        )
    if kind == "ve_karras":
        return make_ve_karras(
            T,
            params.get("sigma_min", 0.01),
            params.get("sigma_max", 50.0),
            params.get("rho", 7.0),
            **ve_extra,
        )
    raise ValueError(f"unknown schedule kind {kind!r}")


def dump_schedule(schedule) -> str:
    """Plain-text table, one ``t sigma_t alpha_bar_t a b`` row per step.

    For VP rows ``sigma_t`` is the marginal noise std ``sqrt(1 - alpha_bar_t)``;
    for VE rows ``alpha_bar_t`` is reported as 1 (no signal scaling).
    """
    t = np.arange(1, schedule.T + 1)
    a, b = schedule.coefficients(t)
    sigma = schedule.noise_std(t)
    abar = schedule.alpha_bar if schedule.kind == "vp" else np.ones(schedule.T)
    lines = ["# t sigma_t alpha_bar_t a b"]
    for row in zip(t, sigma, abar, a, b):
        lines.append(f"{row[0]:d} {row[1]:.17g} {row[2]:.17g} {row[3]:.17g} {row[4]:.17g}")
    return "\n".join(lines) + "\n"

"""Closed-form ground truth for Gaussian and Gaussian-mixture data.

For data ``x0 ~ sum_k w_k N(mu_k, s_k^2 I)`` every forward marginal is again
a mixture, ``N(scale * mu_k, (scale^2 s_k^2 + std^2) I)``, where
``(scale, std)`` is ``(1, sigma)`` for VE and ``(sqrt(abar), sqrt(1 - abar))``
for VP. That gives exact scores at every noise level, which drive the
probability-flow ODE integrator below.

Probability-flow drift, in schedule time ``tau`` (``drift_form="standard"``)::

    VE:  dx/dtau = -1/2 * d(sigma^2)/dtau * score(x, tau)
    VP:  dx/dtau = -1/2 * beta(tau) * (x + score(x, tau))

``drift_form="printed"`` drops the 1/2 on the VE term and flips the sign of
the VP score term; it exists for side-by-side diagnostics only.

Closed-form solution map for a single Gaussian. With ``v(tau) =
scale^2 s^2 + std^2`` the VE drift is linear, ``dx/dtau = (x - mu) *
v'/(2 v)``, so ``d log|x - mu| = d log sqrt(v)`` and separating variables
gives ``x_end = mu + (x - mu) * sqrt(v_end / v_start)``. The VP case works
the same way on the standardised coordinate ``(x - scale * mu) / sqrt(v)``,
which the flow keeps constant::

    x_end = scale_end * mu + (x - scale_start * mu) * sqrt(v_end / v_start)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from udddm._validation import as_matrix, check_int, check_positive, check_step

INTEGRATORS = ("rk4", "heun", "euler")


@dataclass(frozen=True, eq=False)
class AnalyticDensity:
    """Isotropic Gaussian or isotropic-component Gaussian mixture."""

    kind: str
    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        mu = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        s = np.asarray(self.stds, dtype=np.float64).ravel()
        if self.kind not in ("gaussian", "gmm"):
            raise ValueError(f"unknown density kind {self.kind!r}")
        if not (w.size == mu.shape[0] == s.size):
            raise ValueError("weights, means and stds disagree on component count")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        if np.any(s <= 0):
            raise ValueError("component stds must be positive")
        if w.size > 16:
            raise ValueError("at most 16 mixture components are supported")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "stds", s)

    @classmethod
    def gaussian(cls, mean, std: float) -> "AnalyticDensity":
        std = check_positive(std, "std")
        return cls("gaussian", np.ones(1), np.atleast_2d(mean), np.array([std]))

    @classmethod
    def gmm(cls, weights, means, stds) -> "AnalyticDensity":
        return cls("gmm", weights, means, stds)

    @property
    def dim(self) -> int:
        return int(self.means.shape[1])

    def sample(self, n: int, rng) -> np.ndarray:
        rng = np.random.default_rng(rng)
        comp = rng.choice(self.weights.size, size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        return self.means[comp] + self.stds[comp][:, None] * z

    def moments(self):
        """Mean vector and covariance matrix of the clean data."""
        w, mu, s = self.weights, self.means, self.stds
        mean = w @ mu
        second = np.einsum("k,ki,kj->ij", w, mu, mu) + np.sum(w * s**2) * np.eye(self.dim)
        return mean, second - np.outer(mean, mean)

    def cov_entry_variance(self) -> np.ndarray:
        """``Var((X_i - m_i)(X_j - m_j))`` for every entry, exact per component."""
        mean, S = self.moments()
        m = self.means - mean
        s2 = self.stds[:, None] ** 2
        second = m**2 + s2
        cross = np.einsum("k,ki,kj->ij", self.weights, second, second)
        fourth = self.weights @ (m**4 + 6 * m**2 * s2 + 3 * s2**2)
        np.fill_diagonal(cross, fourth)
        return cross - S**2

    def _marginal(self, scale, std):
        scale = np.asarray(scale, dtype=np.float64)
        std = np.asarray(std, dtype=np.float64)
        var = scale[..., None] ** 2 * self.stds**2 + std[..., None] ** 2
        return scale, var

    def log_prob(self, x, scale=1.0, std=0.0) -> np.ndarray:
        """Log density of the marginal with signal ``scale`` and added noise ``std``."""
        x = as_matrix(x, "x", self.dim)
        scale, var = self._marginal(np.broadcast_to(scale, x.shape[:1]),
                                    np.broadcast_to(std, x.shape[:1]))
        diff = x[:, None, :] - scale[:, None, None] * self.means[None]
        sq = np.sum(diff**2, axis=-1)
        log_n = -0.5 * sq / var - 0.5 * self.dim * np.log(2 * np.pi * var)
        return logsumexp(log_n + np.log(self.weights), axis=1)

    def score(self, x, scale=1.0, std=0.0) -> np.ndarray:
        """Exact ``grad_x log p`` of the same marginal, log-sum-exp stabilised."""
        x = as_matrix(x, "x", self.dim)
        scale, var = self._marginal(np.broadcast_to(scale, x.shape[:1]),
                                    np.broadcast_to(std, x.shape[:1]))
        diff = x[:, None, :] - scale[:, None, None] * self.means[None]
        if self.weights.size == 1:
            return -diff[:, 0, :] / var
        sq = np.sum(diff**2, axis=-1)
        log_n = -0.5 * sq / var - 0.5 * self.dim * np.log(var) + np.log(self.weights)
        resp = np.exp(log_n - logsumexp(log_n, axis=1, keepdims=True))
        return -np.einsum("nk,nkd->nd", resp / var, diff)


# -- schedule plumbing (continuous time) --------------------------------------

def marginal_coeffs(schedule, tau):
    """``(scale, std)`` of the forward marginal at continuous time ``tau``."""
    tau = np.asarray(tau, dtype=np.float64)
    if schedule.kind == "ve":
        return np.ones_like(tau), schedule.sigma_at(tau)
    log_ab = schedule.log_alpha_bar_at(tau)
    return np.exp(0.5 * log_ab), np.sqrt(-np.expm1(log_ab))


def marginal_score(density: AnalyticDensity, x, t: int, schedule) -> np.ndarray:
    """Exact score of the step-``t`` marginal (uses the discrete schedule values)."""
    t = check_step(t, schedule.T)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != density.dim:
        raise ValueError(f"x has dimension {x.shape[-1]}, density has {density.dim}")
    tt = np.array([t])
    scale = float(schedule.signal_scale(tt)[0])
    std = float(schedule.noise_std(tt)[0])
    out = density.score(x, scale, std)
    return out[0] if x.ndim == 1 else out


def pf_drift(density, schedule, drift_form: str = "standard", score_scale: float = 1.0):
    """Return ``drift(x, tau)`` for the probability-flow ODE in schedule time.

    ``score_scale`` multiplies the score and is a fault-injection hook.
    """
    if drift_form not in ("standard", "printed"):
        raise ValueError(f"unknown drift_form {drift_form!r}")

    def drift(x, tau):
        scale, std = marginal_coeffs(schedule, tau)
        score = score_scale * density.score(x, scale, std)
        if schedule.kind == "ve":
            g2 = schedule.dsigma2_at(tau)
            return (-0.5 if drift_form == "standard" else -1.0) * g2 * score
        beta = schedule.beta_at(tau)
        sign = 1.0 if drift_form == "standard" else -1.0
        return -0.5 * beta * (x + sign * score)

    return drift


@dataclass
class OdeSolution:
    endpoint: np.ndarray
    steps: int
    integrator: str
    times: np.ndarray | None = None
    path: np.ndarray | None = None


def _step(drift, x, tau, h, integrator):
    if integrator == "euler":
        return x + h * drift(x, tau)
    if integrator == "heun":
        k1 = drift(x, tau)
        k2 = drift(x + h * k1, tau + h)
        return x + 0.5 * h * (k1 + k2)
    k1 = drift(x, tau)
    k2 = drift(x + 0.5 * h * k1, tau + 0.5 * h)
    k3 = drift(x + 0.5 * h * k2, tau + 0.5 * h)
    k4 = drift(x + h * k3, tau + h)
    return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(drift, x_start, t_start: float, t_end: float, steps: int,
              integrator: str = "rk4", record_path: bool = False) -> OdeSolution:
    """Fixed-step integration of ``dx/dtau = drift(x, tau)`` from ``t_start`` to ``t_end``."""
    if integrator not in INTEGRATORS:
        raise ValueError(f"integrator must be one of {INTEGRATORS}")
    steps = check_int(steps, "steps", minimum=1)
    x = np.array(x_start, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    times = np.linspace(t_start, t_end, steps + 1)
    path = [x.copy()] if record_path else None
    if t_start != t_end:
        for i in range(steps):
            x = _step(drift, x, times[i], times[i + 1] - times[i], integrator)
            if not np.all(np.isfinite(x)):
                raise FloatingPointError(f"non-finite state at tau={times[i + 1]}")
            if record_path:
                path.append(x.copy())
    endpoint = x[0] if single else x
    if record_path:
        path = np.stack(path)
        path = path[:, 0] if single else path
    return OdeSolution(endpoint, steps, integrator, times if record_path else None, path)


def integrate_pf_ode(density, schedule, x_start, t_start, t_end, steps: int = 1000,
                     integrator: str = "rk4", drift_form: str = "standard",
                     score_scale: float = 1.0, record_path: bool = False) -> OdeSolution:
    """Integrate the probability-flow ODE from ``t_start`` down to ``t_end`` (both in ``[1, T]``)."""
    if not 1.0 <= t_end <= t_start <= schedule.T:
        raise ValueError(f"need 1 <= t_end <= t_start <= T, got {t_start} -> {t_end}")
    drift = pf_drift(density, schedule, drift_form, score_scale)
    return integrate(drift, x_start, float(t_start), float(t_end), steps, integrator, record_path)


def gaussian_map_factor(density, schedule, t_start, t_end) -> float:
    """Contraction factor ``sqrt(v_end / v_start)`` of the closed-form Gaussian map."""
    s2 = density.stds[0] ** 2
    sc0, sd0 = marginal_coeffs(schedule, t_start)
    sc1, sd1 = marginal_coeffs(schedule, t_end)
    return float(np.sqrt((sc1**2 * s2 + sd1**2) / (sc0**2 * s2 + sd0**2)))


def true_solution_map(density, schedule, x_t, t, t_end: float = 1.0, fallback: bool = False,
                      steps: int = 1000) -> np.ndarray:
    """Exact probability-flow map from step ``t`` to ``t_end``.

    Closed form for a single Gaussian; mixtures need ``fallback=True`` and
    are integrated with RK4. ``t`` may be an array (one step per row of ``x_t``).
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if density.kind == "gaussian":
        mu = density.means[0]
        s2 = density.stds[0] ** 2
        sc0, sd0 = marginal_coeffs(schedule, t_arr)
        sc1, sd1 = marginal_coeffs(schedule, np.float64(t_end))
        factor = np.sqrt((sc1**2 * s2 + sd1**2) / (sc0**2 * s2 + sd0**2))
        if x_t.ndim == 1:
            return sc1 * mu + (x_t - sc0[0] * mu) * factor[0]
        return sc1 * mu + (x_t - sc0[:, None] * mu) * factor[:, None]
    if not fallback:
        raise ValueError("no closed form for mixtures; pass fallback=True to integrate")
    if t_arr.size == 1:
        return integrate_pf_ode(density, schedule, x_t, float(t_arr[0]), t_end, steps).endpoint
    out = np.empty_like(x_t)
    for tv in np.unique(t_arr):
        rows = t_arr == tv
        out[rows] = integrate_pf_ode(density, schedule, x_t[rows], float(tv), t_end, steps).endpoint
    return out


# -- verification reports ------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    value: float
    bound: float
    detail: str = ""

    def line(self) -> str:
        return f"CHECK {self.name} {'PASS' if self.passed else 'FAIL'} value={self.value:.6g} bound={self.bound:.6g}"


@dataclass
class Report:
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, value, bound, detail="") -> Check:
        check = Check(name, bool(passed), float(value), float(bound), detail)
        self.checks.append(check)
        return check

    def extend(self, other: "Report") -> "Report":
        self.checks.extend(other.checks)
        self.data.update(other.data)
        return self

    def text(self) -> str:
        lines = []
        for c in self.checks:
            lines.append(c.line())
            if c.detail:
                lines.append(f"  # {c.detail}")
        return "\n".join(lines) + "\n"


def prior_draws(schedule, n: int, dim: int, rng, t=None) -> np.ndarray:
    """Draws at the noise level of step ``t`` (default ``T``) for a unit-scale signal."""
    t = schedule.T if t is None else t
    std = float(schedule.noise_std(np.array([t]))[0])
    scale = float(schedule.signal_scale(np.array([t]))[0])
    return np.sqrt(scale**2 + std**2) * rng.standard_normal((n, dim))


def estimate_lipschitz(drift, points, taus, rng, pairs: int = 10_000, radius: float = 1e-3,
                       inflate: float = 1.5) -> float:
    """Inflated max of ``||drift(x) - drift(y)|| / ||x - y||`` over sampled nearby pairs.

    ``points`` are states from the visited region and ``taus`` their times;
    partners are offset by ``radius`` times a random unit direction scaled
    to the local state magnitude.
    """
    idx = rng.integers(0, points.shape[0], size=pairs)
    x = points[idx]
    tau = taus[idx]
    d = rng.standard_normal(x.shape)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    y = x + radius * (1.0 + np.linalg.norm(x, axis=1, keepdims=True)) * d
    ratios = []
    for tv in np.unique(tau):
        rows = tau == tv
        fx, fy = drift(x[rows], tv), drift(y[rows], tv)
        ratios.append(np.linalg.norm(fx - fy, axis=1) / np.linalg.norm(x[rows] - y[rows], axis=1))
    return inflate * float(np.max(np.concatenate(ratios)))


def visited_lipschitz(density, schedule, t_start, t_end, rng, n_paths: int = 64,
                      grid: int = 100, pairs: int = 10_000, drift_form="standard") -> float:
    """Lipschitz estimate of the reference drift over paths from the step-``t_start`` prior."""
    drift = pf_drift(density, schedule, drift_form)
    x0 = density.sample(n_paths, rng)
    sc, sd = marginal_coeffs(schedule, float(t_start))
    xs = sc * x0 + sd * rng.standard_normal(x0.shape)
    sol = integrate(drift, xs, float(t_start), float(t_end), grid, "rk4", record_path=True)
    pts = sol.path.reshape(-1, density.dim)
    taus = np.repeat(sol.times, n_paths)
    return estimate_lipschitz(drift, pts, taus, rng, pairs)


def verify_uniqueness(density, schedule, trials: int = 100, eps: float = 1e-3, seed: int = 0,
                      t_start=None, t_end: float = 1.0, steps: int = 200,
                      score_scale: float = 1.0, margin: float = 1.01) -> Report:
    """Numerical check of uniqueness and the Gronwall separation envelope.

    1. Identical initial conditions integrated with RK4 and Heun at growing
       step counts: the disagreement must shrink towards zero.
    2. Initial conditions ``eps`` apart, integrated in both time directions
       over ``[t_end, t_start]``: separation must stay below
       ``eps * exp(L * span) * margin``, with ``L`` estimated from the
       reference drift. ``score_scale != 1`` corrupts only the integrated
       drift, which is how fault injection shows up as a FAIL.
    """
    rng = np.random.default_rng(seed)
    t_start = float(schedule.T if t_start is None else t_start)
    span = t_start - t_end
    report = Report()
    drift = pf_drift(density, schedule, score_scale=score_scale)
    x_top = prior_draws(schedule, trials, density.dim, rng, int(round(t_start)))

    disagreement = []
    for n_steps in (steps // 4, steps // 2, steps, 2 * steps):
        a = integrate(drift, x_top, t_start, t_end, n_steps, "rk4").endpoint
        b = integrate(drift, x_top, t_start, t_end, 4 * n_steps, "heun").endpoint
        disagreement.append(float(np.max(np.linalg.norm(a - b, axis=1))))
    shrinking = all(d1 <= d0 for d0, d1 in zip(disagreement, disagreement[1:]))
    report.add("uniqueness_same_ic", shrinking and disagreement[-1] < 1e-4 * max(1.0, span),
               disagreement[-1], 1e-4 * max(1.0, span),
               detail="rk4 vs heun endpoint gap at steps " + ",".join(f"{d:.3g}" for d in disagreement))

    L_hat = visited_lipschitz(density, schedule, t_start, t_end, rng)
    envelope = np.exp(L_hat * span)
    d = rng.standard_normal(x_top.shape)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    x_bottom = integrate(drift, x_top, t_start, t_end, steps, "rk4").endpoint
    worst = 0.0
    ratios = {}
    for name, start, t0, t1 in (("backward", x_top, t_start, t_end), ("forward", x_bottom, t_end, t_start)):
        xa = integrate(drift, start, t0, t1, steps).endpoint
        xb = integrate(drift, start + eps * d, t0, t1, steps).endpoint
        sep = np.linalg.norm(xa - xb, axis=1)
        ratios[name] = sep / eps if eps > 0 else sep
        if eps > 0:
            worst = max(worst, float(np.max(sep / (eps * envelope))))
    report.data.update(L_hat=L_hat, span=span, ratios=ratios, disagreement=disagreement)
    report.add("gronwall_envelope", worst <= margin, worst, margin,
               detail=f"max separation / (eps*exp(L*span)), L={L_hat:.4g}, span={span:g}")
    if density.kind == "gaussian":
        factor = gaussian_map_factor(density, schedule, t_start, t_end)
        r = ratios["backward"]
        err = float(np.max(np.abs(r - factor))) / factor if eps > 0 else 0.0
        report.add("gaussian_contraction", err < 1e-6 or score_scale != 1.0, err, 1e-6,
                   detail=f"closed-form factor {factor:.6g}")
    return report


def verify_ode(density, schedule, count: int = 100, seed: int = 0, steps: int = 1000,
               coarse: int = 25, tol: float = 1e-5, order_range=(8.0, 32.0)) -> Report:
    """RK4 probability-flow endpoints against the closed-form Gaussian map.

    Checks the endpoint error at ``steps`` and the error ratio when going
    from ``coarse`` to ``2 * coarse`` steps (about 16 for a 4th-order method).
    """
    if density.kind != "gaussian":
        raise ValueError("verify_ode needs a single-Gaussian density")
    rng = np.random.default_rng(seed)
    T = schedule.T
    x = prior_draws(schedule, count, density.dim, rng)
    exact = true_solution_map(density, schedule, x, T)

    def err(n):
        return float(np.max(np.abs(integrate_pf_ode(density, schedule, x, T, 1, n).endpoint - exact)))

    report = Report()
    fine = err(steps)
    report.add("ode_endpoint", fine <= tol, fine, tol, detail=f"rk4 {steps} steps vs closed form")
    e1, e2 = err(coarse), err(2 * coarse)
    factor = e1 / e2 if e2 > 0 else np.inf
    report.add("ode_order_low", factor >= order_range[0], factor, order_range[0],
               detail=f"error ratio {coarse}->{2 * coarse} steps: {e1:.3g} / {e2:.3g}")
    report.add("ode_order_high", factor <= order_range[1], factor, order_range[1])
    report.data.update(endpoint_error=fine, order_factor=factor)
    return report


def verify_bilipschitz(map_fn, pairs_x, pairs_y, lipschitz: float | None = None,
                       span: float | None = None, name: str = "bilipschitz") -> Report:
    """Pair-distance ratios ``r = ||f(x) - f(y)|| / ||x - y||`` for a map ``f``.

    With ``lipschitz`` and ``span`` the check asserts
    ``exp(-L * span) <= r <= exp(L * span)``; without them it checks
    injectivity only (``min r > 0``). Near-coincident pairs
    (``||x - y|| < 1e-12``) are dropped.
    """
    x = np.atleast_2d(np.asarray(pairs_x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(pairs_y, dtype=np.float64))
    dist = np.linalg.norm(x - y, axis=1)
    keep = dist >= 1e-12
    x, y, dist = x[keep], y[keep], dist[keep]
    r = np.linalg.norm(map_fn(x) - map_fn(y), axis=1) / dist
    report = Report(data={"ratios": r, "min": float(r.min()), "max": float(r.max())})
    report.add(f"{name}_injective", r.min() > 0.0, r.min(), 0.0)
    if lipschitz is not None:
        lo, hi = np.exp(-lipschitz * span), np.exp(lipschitz * span)
        report.add(f"{name}_lower", r.min() >= lo, r.min(), lo)
        report.add(f"{name}_upper", r.max() <= hi, r.max(), hi)
    return report


def verify_gaussian_bilipschitz(density, schedule, t: int, pairs: int = 1000, seed: int = 0,
                                t_end: float = 1.0) -> Report:
    """Bi-Lipschitz check of the closed-form Gaussian map; ``r`` must be constant."""
    rng = np.random.default_rng(seed)
    x = prior_draws(schedule, pairs, density.dim, rng, t)
    y = prior_draws(schedule, pairs, density.dim, rng, t)
    L_hat = visited_lipschitz(density, schedule, t, t_end, rng)
    report = verify_bilipschitz(lambda z: true_solution_map(density, schedule, z, t, t_end), x, y,
                                L_hat, t - t_end, name="gaussian_bilipschitz")
    r = report.data["ratios"]
    spread = float((r.max() - r.min()) / r.mean())
    report.add("gaussian_ratio_constant", spread <= 1e-10, spread, 1e-10)
    report.data["variance"] = float(np.var(r))
    return report


def convergence_errors(f_map, x0, x_t, t, x0_est, target=None) -> dict:
    """Error distributions of ``f_map(x0_est, x_t, t)`` against ``x0`` and the oracle target."""
    pred = f_map(x0_est, x_t, t)
    out = {"to_data": np.linalg.norm(pred - x0, axis=1)}
    if target is not None:
        out["to_oracle"] = np.linalg.norm(pred - target, axis=1)
    return out


def verify_convergence(snapshots: dict, f_map_for, density, schedule, probes,
                       ratio: float = 0.5) -> Report:
    """Per-snapshot error quantiles of the trained map on probe triples.

    ``snapshots`` maps epoch -> snapshot dict (needs ``estimates``);
    ``f_map_for(snap)`` returns a callable ``(x0_est, x_t, t) -> prediction``.
    ``probes`` is ``(indices, x0, t, x_t)``; each probe's ``x0_est`` is the
    buffer estimate for its training index at that snapshot. Passes when the
    final median error to the data is below ``ratio`` times the first
    snapshot's, and medians never increase.
    """
    if not snapshots:
        raise ValueError("no snapshots to verify")
    idx, x0, t, x_t = probes
    target = true_solution_map(density, schedule, x_t, t, fallback=True, steps=200) if density else None
    rows = {}
    for epoch in sorted(snapshots):
        snap = snapshots[epoch]
        errs = convergence_errors(f_map_for(snap), x0, x_t, t, snap["estimates"][idx], target)
        rows[epoch] = {k: np.quantile(v, [0.1, 0.5, 0.9]) for k, v in errs.items()}
    epochs = sorted(rows)
    medians = [rows[e]["to_data"][1] for e in epochs]
    report = Report(data={"quantiles": rows, "medians": medians, "epochs": epochs})
    report.add("convergence_final_vs_first", medians[-1] < ratio * medians[0], medians[-1],
               ratio * medians[0], detail="medians " + ",".join(f"{m:.4g}" for m in medians))
    decreasing = all(b <= a for a, b in zip(medians, medians[1:]))
    report.add("convergence_monotone", decreasing, float(np.max(np.diff(medians))) if len(medians) > 1 else 0.0, 0.0)
    return report

import numpy as np
import pytest

from udddm.evalkit import moment_report
from udddm.network import Network, NetworkConfig
from udddm.oracle import (
    AnalyticDensity,
    estimate_lipschitz,
    gaussian_map_factor,
    integrate,
    integrate_pf_ode,
    marginal_coeffs,
    marginal_score,
    pf_drift,
    true_solution_map,
    verify_bilipschitz,
    verify_convergence,
    verify_gaussian_bilipschitz,
    verify_ode,
    verify_uniqueness,
)
from udddm.schedules import VeSchedule, forward_noise

GAUSS = AnalyticDensity.gaussian([0.3, -0.2], 0.5)


def test_density_validation():
    with pytest.raises(ValueError):
        AnalyticDensity.gmm([0.5, 0.6], [[0.0], [1.0]], [1.0, 1.0])
    with pytest.raises(ValueError):
        AnalyticDensity.gmm([1.0], [[0.0]], [0.0])
    with pytest.raises(ValueError):
        AnalyticDensity.gmm(np.full(17, 1 / 17), np.zeros((17, 1)), np.ones(17))
    with pytest.raises(ValueError):
        AnalyticDensity.gmm([0.5, 0.5], [[0.0]], [1.0, 1.0])


def test_ve_gaussian_score_examples():
    sched = VeSchedule(np.array([0.5, 1.0]), 0.5, 1.0)
    d = AnalyticDensity.gaussian([0.0, 0.0], 1.0)
    np.testing.assert_array_equal(marginal_score(d, np.array([2.0, 0.0]), 2, sched), [-1.0, 0.0])
    np.testing.assert_array_equal(marginal_score(GAUSS, GAUSS.means[0], 2, sched), [0.0, 0.0])
    with pytest.raises(ValueError):
        marginal_score(d, np.zeros(3), 1, sched)


def test_vp_gaussian_score_formula(vp):
    x = np.array([0.7, 0.1])
    ab = vp.alpha_bar[39]
    expected = -(x - np.sqrt(ab) * GAUSS.means[0]) / (ab * 0.25 + 1 - ab)
    np.testing.assert_allclose(marginal_score(GAUSS, x, 40, vp), expected, rtol=1e-14)


def log_density_1d_gmm(x, w, mu, s, scale, std):
    var = scale**2 * np.asarray(s) ** 2 + std**2
    return np.log(sum(wk * np.exp(-0.5 * (x - scale * mk) ** 2 / vk) / np.sqrt(2 * np.pi * vk)
                      for wk, mk, vk in zip(w, mu, var)))


def test_gmm_score_matches_finite_difference(vp, ve):
    w, mu, s = [0.3, 0.7], [-1.0, 1.5], [0.4, 0.8]
    d = AnalyticDensity.gmm(w, [[m] for m in mu], s)
    h = 1e-5
    for sched in (vp, ve):
        for t in (1, 30, 100):
            sc = float(sched.signal_scale(np.array([t]))[0])
            sd = float(sched.noise_std(np.array([t]))[0])
            for x in (-2.0, 0.1, 0.9, 3.0):
                fd = (log_density_1d_gmm(x + h, w, mu, s, sc, sd)
                      - log_density_1d_gmm(x - h, w, mu, s, sc, sd)) / (2 * h)
                got = marginal_score(d, np.array([x]), t, sched)[0]
                assert got == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_gmm_reduces_to_single_gaussian(vp, rng):
    twin = AnalyticDensity.gmm([0.3, 0.7], [[0.3, -0.2], [0.3, -0.2]], [0.5, 0.5])
    x = rng.standard_normal((50, 2))
    for t in (1, 50, 100):
        np.testing.assert_allclose(marginal_score(twin, x, t, vp), marginal_score(GAUSS, x, t, vp),
                                   rtol=0, atol=1e-14)


def test_gmm_score_is_stable_far_out(vp):
    d = AnalyticDensity.gmm([0.5, 0.5], [[-2.0], [2.0]], [0.02, 0.02])
    out = d.score(np.array([[1e3], [-40.0]]))
    assert np.all(np.isfinite(out))


def test_empty_interval_and_path_invariants(vp):
    x = np.array([[0.4, 0.2]])
    sol = integrate_pf_ode(GAUSS, vp, x, 30, 30, 10)
    np.testing.assert_array_equal(sol.endpoint, x)
    sol = integrate_pf_ode(GAUSS, vp, x, 60, 2, 40, record_path=True)
    assert np.all(np.diff(sol.times) < 0)
    np.testing.assert_array_equal(sol.path[-1], sol.endpoint)
    with pytest.raises(ValueError):
        integrate_pf_ode(GAUSS, vp, x, 2, 60)
    with pytest.raises(ValueError):
        integrate(lambda z, t: z, x, 1.0, 0.0, 5, "midpoint")


@pytest.mark.parametrize("name", ["vp", "ve", "karras"])
def test_rk4_matches_closed_form(name, request):
    sched = request.getfixturevalue(name)
    rep = verify_ode(GAUSS, sched, count=50)
    assert rep.passed, rep.text()
    assert rep.data["endpoint_error"] <= 1e-5
    assert 8 <= rep.data["order_factor"] <= 32


def test_integrators_agree_at_small_steps(ve):
    x = 50.0 * np.random.default_rng(3).standard_normal((20, 2))
    a = integrate_pf_ode(GAUSS, ve, x, 100, 1, 1000, "rk4").endpoint
    b = integrate_pf_ode(GAUSS, ve, x, 100, 1, 100_000, "heun").endpoint
    assert np.max(np.abs(a - b)) <= 1e-8


def test_closed_form_map_examples(vp):
    x = np.random.default_rng(0).standard_normal((5, 2))
    np.testing.assert_allclose(true_solution_map(GAUSS, vp, x, 1), x, rtol=0, atol=1e-15)
    sched = VeSchedule(np.array([1e-9, 7.0]), 1e-9, 7.0)
    d = AnalyticDensity.gaussian([0.0, 0.0], 1.0)
    out = true_solution_map(d, sched, x, 2, t_end=0.0)
    np.testing.assert_allclose(np.linalg.norm(out, axis=1) / np.linalg.norm(x, axis=1), 1 / np.sqrt(50),
                               rtol=1e-14)
    gmm = AnalyticDensity.gmm([0.5, 0.5], [[0.0, 1.0], [0.0, -1.0]], [0.3, 0.3])
    with pytest.raises(ValueError):
        true_solution_map(gmm, vp, x, 10)
    assert true_solution_map(gmm, vp, x, 10, fallback=True, steps=50).shape == x.shape


def test_pushforward_moments(vp, ve):
    for sched in (vp, ve):
        rng = np.random.default_rng(11)
        sc, sd = marginal_coeffs(sched, float(sched.T))
        xT = sc * GAUSS.means[0] + np.sqrt(sc**2 * 0.25 + sd**2) * rng.standard_normal((10_000, 2))
        out = integrate_pf_ode(GAUSS, sched, xT, sched.T, 1, 200).endpoint
        rep = moment_report(out, GAUSS, threshold=3.0)
        assert not rep.flagged, rep.max_abs_z


def test_printed_drift_breaks_pushforward(ve):
    rng = np.random.default_rng(11)
    xT = np.sqrt(0.25 + 50.0**2) * rng.standard_normal((10_000, 2)) + GAUSS.means[0]
    out = integrate_pf_ode(GAUSS, ve, xT, 100, 1, 200, drift_form="printed").endpoint
    assert moment_report(out, GAUSS).flagged
    with pytest.raises(ValueError):
        pf_drift(GAUSS, ve, drift_form="other")


def test_lipschitz_estimate_on_linear_drift(rng):
    A = np.diag([2.0, -0.5])
    L = estimate_lipschitz(lambda x, t: x @ A.T, rng.standard_normal((100, 2)), np.zeros(100), rng, 2000)
    assert L <= 1.5 * 2.0 + 1e-9 and L >= 1.5 * 1.9


def test_uniqueness_report_passes_and_contraction_is_exact(ve):
    rep = verify_uniqueness(GAUSS, ve, trials=30, steps=200)
    assert rep.passed, rep.text()
    factor = gaussian_map_factor(GAUSS, ve, 100, 1)
    np.testing.assert_allclose(rep.data["ratios"]["backward"], factor, rtol=1e-6)


def test_uniqueness_zero_eps(vp):
    rep = verify_uniqueness(GAUSS, vp, trials=10, eps=0.0, steps=100)
    assert np.all(rep.data["ratios"]["backward"] == 0)


def test_fault_injection_fails_envelope(vp):
    rep = verify_uniqueness(GAUSS, vp, trials=30, steps=200, score_scale=2.0)
    checks = {c.name: c for c in rep.checks}
    assert not checks["gronwall_envelope"].passed
    assert "CHECK gronwall_envelope FAIL" in rep.text()


def test_gaussian_bilipschitz_constant_ratio(vp, ve):
    for sched in (vp, ve):
        rep = verify_gaussian_bilipschitz(GAUSS, sched, sched.T, pairs=500)
        assert rep.passed, rep.text()
        assert rep.data["variance"] <= 1e-20


def test_verify_bilipschitz_drops_degenerate_pairs():
    x = np.array([[0.0, 0.0], [1.0, 1.0]])
    rep = verify_bilipschitz(lambda z: 2 * z, x, np.array([[0.0, 0.0], [2.0, 1.0]]), 1.0, 1.0)
    assert rep.data["ratios"].size == 1 and rep.data["min"] == 2.0
    assert rep.passed
    rep = verify_bilipschitz(lambda z: np.zeros_like(z), x, x + 1)
    assert not rep.passed


def _probes(sched, rng, n=200):
    x0 = GAUSS.sample(n, rng)
    t = rng.integers(1, sched.T + 1, size=n)
    return np.arange(n), x0, t, forward_noise(sched, t, x0, rng.standard_normal(x0.shape))


def test_convergence_untrained_model_error_is_x_t_minus_x0(vp, rng):
    net = Network(NetworkConfig(hidden_dims=(4,), time_embed_dim=4))
    params = net.init_params()
    probes = _probes(vp, rng)
    snaps = {1: {"estimates": rng.standard_normal((200, 2)), "params": params}}
    rep = verify_convergence(snaps, lambda s: (lambda e, x, t: net.f_theta(s["params"], e, x, t, vp)),
                             GAUSS, vp, probes)
    expected = np.quantile(np.linalg.norm(probes[3] - probes[1], axis=1), [0.1, 0.5, 0.9])
    np.testing.assert_allclose(rep.data["quantiles"][1]["to_data"], expected, rtol=1e-14)


def test_convergence_with_oracle_model(vp, rng):
    probes = _probes(vp, rng)
    snaps = {1: {"estimates": np.zeros((200, 2))}, 5: {"estimates": np.zeros((200, 2))}}
    oracle = lambda s: (lambda e, x, t: true_solution_map(GAUSS, vp, x, t))  # noqa: E731
    rep = verify_convergence(snaps, oracle, GAUSS, vp, probes)
    assert np.max(rep.data["quantiles"][5]["to_oracle"]) < 1e-12
    closed_residual = np.median(np.linalg.norm(true_solution_map(GAUSS, vp, probes[3], probes[2]) - probes[1],
                                               axis=1))
    assert rep.data["medians"][-1] == pytest.approx(closed_residual, rel=1e-12)
    with pytest.raises(ValueError):
        verify_convergence({}, oracle, GAUSS, vp, probes)


def test_convergence_detects_improvement(vp, rng):
    probes = _probes(vp, rng)
    x0 = probes[1]
    snaps = {e: {"estimates": x0 + noise * rng.standard_normal(x0.shape)}
             for e, noise in ((1, 1.0), (2, 0.5), (3, 0.1))}
    rep = verify_convergence(snaps, lambda s: (lambda e, x, t: e), None, vp, probes)
    assert rep.passed
    reversed_snaps = {1: snaps[3], 2: snaps[2], 3: snaps[1]}
    assert not verify_convergence(reversed_snaps, lambda s: (lambda e, x, t: e), None, vp, probes).passed

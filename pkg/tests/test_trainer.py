import numpy as np
import pytest

from conftest import tiny_config
from udddm.estimate_store import init_buffer
from udddm.evalkit import generate_dataset
from udddm.losses import pseudo_huber
from udddm.network import Network
from udddm.trainer import (
    METRICS_HEADER,
    NonFiniteError,
    TrainConfig,
    adam_update,
    copy_params,
    ema_decay_at,
    ema_update,
    init_state,
    load_checkpoint,
    save_checkpoint,
    train,
    train_step,
)


def assert_params_equal(a, b):
    assert list(a) == list(b)
    for k in a:
        np.testing.assert_array_equal(a[k], b[k])


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-1.0)
    with pytest.raises(ValueError):
        TrainConfig(ema_decay=1.0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)


def test_default_c_follows_schedule():
    assert tiny_config("vp").pseudo_huber_c == 0.00014
    assert tiny_config("ve_geometric").pseudo_huber_c == 0.00015
    assert tiny_config("vp", c=0.5).pseudo_huber_c == 0.5


def test_ema_update_cases():
    ema = {"w": np.zeros(3)}
    ema_update(ema, {"w": np.full(3, 2.0)}, 0.5)
    np.testing.assert_array_equal(ema["w"], np.ones(3))
    same = {"w": np.array([1.0, 2.0])}
    ema_update(same, {"w": np.array([1.0, 2.0])}, 0.9)
    np.testing.assert_array_equal(same["w"], [1.0, 2.0])
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            ema_update({"w": np.zeros(1)}, {"w": np.zeros(1)}, bad)
    with pytest.raises(ValueError):
        ema_update({"w": np.zeros(1)}, {"w": np.zeros(2)}, 0.5)


def test_ema_warmup_schedule():
    assert ema_decay_at(1, 0.9999, True) == pytest.approx(2 / 11)
    assert ema_decay_at(10**6, 0.9999, True) == 0.9999
    assert ema_decay_at(1, 0.9999, False) == 0.9999


def textbook_adam(theta, grad_fn, steps, lr, b1=0.9, b2=0.999, eps=1e-8):
    m = [0.0] * len(theta)
    v = [0.0] * len(theta)
    theta = list(theta)
    for k in range(1, steps + 1):
        g = grad_fn(theta)
        for i in range(len(theta)):
            m[i] = b1 * m[i] + (1 - b1) * g[i]
            v[i] = b2 * v[i] + (1 - b2) * g[i] ** 2
            mh = m[i] / (1 - b1**k)
            vh = v[i] / (1 - b2**k)
            theta[i] = theta[i] - lr * mh / (vh**0.5 + eps)
    return theta


def test_adam_matches_textbook():
    target = np.array([1.0, -2.0, 0.5])

    def grad(th):
        th = np.asarray(th)
        return list(2 * (th - target) + np.sin(3 * th))

    start = [0.3, 0.1, -0.7]
    ref = textbook_adam(start, grad, 100, 0.05)
    p, m, v = {"x": np.array(start)}, {"x": np.zeros(3)}, {"x": np.zeros(3)}
    for k in range(1, 101):
        adam_update(p, {"x": np.array(grad(p["x"]))}, m, v, k, 0.05)
    np.testing.assert_allclose(p["x"], ref, rtol=0, atol=1e-12)


def _one_step_setup(config):
    net = Network(config.network)
    sched = config.schedule.build()
    data = generate_dataset(config.dataset)
    state = init_state(config)
    buf = init_buffer(data.shape[0], 2, seed=[config.seed, 2])
    return net, sched, data, state, buf


def test_zero_learning_rate_keeps_params_but_updates_buffer():
    config = tiny_config(learning_rate=0.0)
    net, sched, data, state, buf = _one_step_setup(config)
    before = copy_params(state.params)
    est_before = buf.read(np.arange(8)).copy()
    train_step(state, buf, np.arange(8), data[:8], config, net, sched)
    assert_params_equal(state.params, before)
    assert not np.array_equal(buf.read(np.arange(8)), est_before)
    assert np.all(buf.visit_count[:8] == 1) and np.all(buf.visit_count[8:] == 0)


def test_epoch_zero_loss_is_guide_only():
    config = tiny_config()
    net, sched, data, state, buf = _one_step_setup(config)
    # rebuild the step's random draws from a copy of the generator
    rng_copy = np.random.default_rng()
    rng_copy.bit_generator.state = state.rng.bit_generator.state
    idx = np.arange(16)
    params0 = copy_params(state.params)
    est0 = buf.read(idx)
    res = train_step(state, buf, idx, data[idx], config, net, sched)
    t = rng_copy.integers(1, sched.T + 1, size=16)
    eps = rng_copy.standard_normal((16, 2))
    from udddm.schedules import forward_noise

    pred = net.f_theta(params0, est0, forward_noise(sched, t, data[idx], eps), t, sched)
    assert res.L_uddd == np.mean(pseudo_huber(pred, data[idx], config.pseudo_huber_c))
    np.testing.assert_array_equal(buf.read(idx), pred)


def test_non_finite_aborts():
    config = tiny_config()
    net, sched, data, state, buf = _one_step_setup(config)
    bad = data[:4].copy()
    bad[0, 0] = np.nan
    with pytest.raises(NonFiniteError):
        train_step(state, buf, np.arange(4), bad, config, net, sched)


def test_epochs_zero_returns_initial_state():
    config = tiny_config(epochs=0)
    res = train(config)
    assert_params_equal(res.state.params, init_state(config).params)
    assert res.state.epoch == 0 and res.history == []


def test_determinism_three_epochs():
    a = train(tiny_config(epochs=3))
    b = train(tiny_config(epochs=3))
    assert_params_equal(a.state.params, b.state.params)
    assert_params_equal(a.state.ema_params, b.state.ema_params)
    assert_params_equal(a.state.adam_v, b.state.adam_v)
    np.testing.assert_array_equal(a.buffer.estimates, b.buffer.estimates)
    assert a.state.rng.bit_generator.state == b.state.rng.bit_generator.state


def test_telemetry_identity_and_weights():
    res = train(tiny_config(epochs=5))
    for n, rec in enumerate(res.history):
        assert rec.epoch == n
        assert rec.w_guide == 1.0 / (n + 1)
        mix = rec.w_guide * rec.L_guide + (1 - rec.w_guide) * rec.L_iter
        assert abs(rec.L_uddd - mix) <= 1e-12
    assert res.buffer.visit_count.min() >= res.state.epoch


def test_ema_equals_weighted_trajectory_average():
    config = tiny_config(epochs=1, n_data=96, ema_decay=0.8, ema_warmup=False)
    net, sched, data, state, buf = _one_step_setup(config)
    traj = [copy_params(state.params)]
    for lo in range(0, 96, 16):
        idx = np.arange(lo, lo + 16)
        train_step(state, buf, idx, data[idx], config, net, sched)
        traj.append(copy_params(state.params))
    k, d = len(traj) - 1, 0.8
    for name in state.params:
        closed = d**k * traj[0][name] + sum((1 - d) * d ** (k - j) * traj[j][name] for j in range(1, k + 1))
        np.testing.assert_allclose(state.ema_params[name], closed, rtol=0, atol=1e-10)


def test_resume_from_midrun_checkpoint_is_bit_exact(tmp_path):
    full = train(tiny_config(epochs=4))
    first = train(tiny_config(epochs=2), out_dir=tmp_path / "run")
    state, config = load_checkpoint(tmp_path / "run" / "checkpoint")
    from udddm.estimate_store import EstimateBuffer

    buf = EstimateBuffer.load(tmp_path / "run" / "estimates")
    resumed = train(config, state=state, buffer=buf, epochs=2)
    assert first.state.epoch == 2 and resumed.state.epoch == 4
    assert_params_equal(full.state.params, resumed.state.params)
    assert_params_equal(full.state.ema_params, resumed.state.ema_params)
    np.testing.assert_array_equal(full.buffer.estimates, resumed.buffer.estimates)


def test_checkpoint_round_trip(tmp_path):
    res = train(tiny_config(epochs=2))
    save_checkpoint(tmp_path / "ck", res.state, tiny_config(epochs=2))
    state, config = load_checkpoint(tmp_path / "ck.json")
    assert config == tiny_config(epochs=2)
    for group in ("params", "adam_m", "adam_v", "ema_params"):
        assert_params_equal(getattr(state, group), getattr(res.state, group))
    assert state.step == res.state.step and state.epoch == 2
    assert state.rng.bit_generator.state == res.state.rng.bit_generator.state
    assert [r.L_iter for r in state.history] == [r.L_iter for r in res.history]


def test_output_directory_layout(tmp_path):
    config = tiny_config(epochs=3, snapshot_epochs=(1, 3))
    res = train(config, out_dir=tmp_path, checkpoint_every=2)
    names = {p.name for p in tmp_path.iterdir()}
    assert {"metrics.csv", "checkpoint.json", "checkpoint.bin", "estimates.json", "estimates.bin",
            "checkpoint_epoch00002.json", "snapshots"} <= names
    rows = (tmp_path / "metrics.csv").read_text().splitlines()
    assert rows[0] == METRICS_HEADER and len(rows) == 4
    assert float(rows[2].split(",")[1]) == 0.5
    assert sorted(res.snapshots) == [1, 3]
    from udddm.trainer import load_snapshots

    snaps = load_snapshots(tmp_path / "snapshots")
    assert sorted(snaps) == [1, 3]
    np.testing.assert_array_equal(snaps[3]["estimates"], res.buffer.estimates)
    assert_params_equal(snaps[3]["ema_params"], res.state.ema_params)


def test_disk_backed_training_matches_memory(tmp_path):
    mem = train(tiny_config(epochs=2))
    disk = train(tiny_config(epochs=2), out_dir=tmp_path, buffer_backing="disk")
    assert disk.buffer.backing == "disk"
    np.testing.assert_array_equal(mem.buffer.estimates, np.asarray(disk.buffer.estimates))
    assert_params_equal(mem.state.params, disk.state.params)


def test_grad_clip_changes_trajectory_but_stays_finite():
    a = train(tiny_config(epochs=1))
    b = train(tiny_config(epochs=1, grad_clip=1e-3))
    assert not np.array_equal(a.state.params["W0"], b.state.params["W0"])
    assert all(np.all(np.isfinite(v)) for v in b.state.params.values())

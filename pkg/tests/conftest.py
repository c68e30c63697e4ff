import numpy as np
import pytest

from udddm.evalkit import DatasetSpec
from udddm.network import NetworkConfig
from udddm.schedules import make_ve_geometric, make_ve_karras, make_vp_linear
from udddm.trainer import ScheduleConfig, TrainConfig

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
        terminalreporter.write_line(line)


@pytest.fixture
def report_criterion():
    def record(number, passed, detail):
        line = f"CRITERION {number} {'PASS' if passed else 'FAIL'} {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


@pytest.fixture
def vp():
    return make_vp_linear(100, 1.5e-3, 2.0e-2)


@pytest.fixture
def ve():
    return make_ve_geometric(100, 0.01, 50.0)


@pytest.fixture
def karras():
    return make_ve_karras(100, 0.01, 50.0, 7.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tiny_config(kind="vp", epochs=2, n_data=64, seed=0, **kw) -> TrainConfig:
    return TrainConfig(
        schedule=ScheduleConfig(kind=kind, T=20),
        network=NetworkConfig(hidden_dims=(8, 8), time_embed_dim=4, seed=seed),
        dataset=DatasetSpec(n_data=n_data, seed=seed),
        epochs=epochs, batch_size=16, seed=seed, **kw,
    )

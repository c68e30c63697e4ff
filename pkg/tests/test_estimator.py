import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from udddm.estimator import UDDDMGenerator
from udddm.evalkit import DatasetSpec, generate_dataset
from udddm.trainer import save_checkpoint

SMALL = dict(T=20, hidden_dims=(8, 8), time_embed_dim=4, epochs=2, batch_size=16)


@pytest.fixture(scope="module")
def X():
    return generate_dataset(DatasetSpec(n_data=64))


def test_params_and_clone():
    gen = UDDDMGenerator(**SMALL, learning_rate=1e-3)
    params = gen.get_params()
    assert params["learning_rate"] == 1e-3 and params["T"] == 20
    twin = clone(gen)
    assert twin.get_params() == params
    gen.set_params(epochs=5)
    assert gen.epochs == 5


def test_unfitted_raises():
    with pytest.raises(NotFittedError):
        UDDDMGenerator(**SMALL).sample(3)


def test_fit_sample_transform(X):
    gen = UDDDMGenerator(**SMALL, random_state=3).fit(X)
    assert gen.n_features_in_ == 2 and len(gen.history_) == 2
    s = gen.sample(10, n_steps=2)
    assert s.shape == (10, 2) and np.all(np.isfinite(s))
    np.testing.assert_array_equal(s, gen.sample(10, n_steps=2))
    xT = np.random.default_rng(0).standard_normal((5, 2))
    assert gen.transform(xT).shape == (5, 2)
    with pytest.raises(ValueError):
        gen.transform(np.zeros((2, 3)))
    assert gen.score(X) <= 0


def test_fit_is_deterministic(X):
    a = UDDDMGenerator(**SMALL).fit(X)
    b = UDDDMGenerator(**SMALL).fit(X)
    for k in a.state_.params:
        np.testing.assert_array_equal(a.state_.params[k], b.state_.params[k])


def test_from_checkpoint(X, tmp_path):
    gen = UDDDMGenerator(**SMALL).fit(X)
    save_checkpoint(tmp_path / "ck", gen.state_, gen.config_)
    back = UDDDMGenerator.from_checkpoint(tmp_path / "ck.json")
    assert back.get_params() == gen.get_params()
    np.testing.assert_array_equal(back.sample(4), gen.sample(4))

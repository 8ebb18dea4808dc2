import numpy as np
import pytest

from attrxfer import (TrainConfig, generate_shapes_dataset, resolve_model,
                      split_by_id_hash, train)


@pytest.fixture(scope="session")
def micro_splits():
    """Small corpus shared by tests that need a real train/test split."""
    full = generate_shapes_dataset(360, 3, 32, seed=11)
    return split_by_id_hash(full, 0.8)


@pytest.fixture(scope="session")
def micro_train(micro_splits):
    return micro_splits[0]


@pytest.fixture(scope="session")
def micro_test(micro_splits):
    return micro_splits[1]


@pytest.fixture(scope="session")
def small_model(micro_train):
    """cnn_small briefly trained on the micro corpus; good enough for
    attribution plumbing, not for accuracy claims."""
    model = resolve_model("cnn_small", None, 3, seed=3)
    train(model, micro_train, TrainConfig(epochs=4, seed=5))
    return model


@pytest.fixture()
def rng():
    return np.random.default_rng(0)

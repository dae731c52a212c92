import numpy as np
import pytest

from t2f.engine import precision


@pytest.fixture
def float64():
    """Run the test body with the engine in 64-bit mode."""
    with precision(64):
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    from t2f.models import ModelConfig
    return ModelConfig(image_size=16, text_dim=16, noise_dim=8, reduce_dim=8, base_channels=4)

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cavity_rbm.config import config_from_dict  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_cfg():
    """Default desk-scale config with light experiment sections for fast tests."""
    return config_from_dict({
        "seed": 7,
        "plots": False,
        "psd_variance": {"units": [0, 1, 4, 16, 64, 256, 512], "n_seeds": 6},
        "three_scenarios": {"n_frames": 60, "switch_period": 15},
        "ber_table": {"n_bits": 256, "ofdm_symbols": 8},
    })

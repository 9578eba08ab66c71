import numpy as np
import pytest

from memlearn import device
from memlearn.network import Layer, NetworkDims, NetworkState


def uniform_network(n_in, n_bulk, n_out, r=100.0, beta=0.9, vth=0.075, r_min=50.0, r_max=5000.0):
    """BMS network where every device shares one parameter set and resistance."""
    def layer(shape):
        params = device.BmsParams(np.full(shape, beta), np.full(shape, vth),
                                  np.full(shape, r_min), np.full(shape, r_max))
        return Layer(params, np.ones(shape, np.int8), np.full(shape, float(r)))

    return NetworkState(NetworkDims(n_in, n_bulk, n_out), device.BMS,
                        layer((n_in, n_bulk)), layer((n_bulk, n_out)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import numpy as np
import pytest

from qcpu.gate_array import QcpuConfig


@pytest.fixture
def cfg23():
    return QcpuConfig(2, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)

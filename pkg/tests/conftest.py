import numpy as np
import pytest

from qosrank.matrix import QoSMatrix


def random_sparse_matrix(rng, num_users, num_services, density):
    """Random matrix with each user guaranteed at least one observation."""
    values = rng.uniform(0.0, 1.0, (num_users, num_services))
    mask = rng.uniform(0.0, 1.0, (num_users, num_services)) < density
    for u in range(num_users):
        if not mask[u].any():
            mask[u, rng.integers(num_services)] = True
    return QoSMatrix(np.where(mask, values, np.nan))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)

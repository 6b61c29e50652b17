import warnings

import numpy as np
import pytest

from sbrec import ldpc


@pytest.fixture(scope="session")
def small_inner_code():
    """Lifted rate-1/50 code at N = 500 (small enough for fast decoding)."""
    proto = ldpc.default_inner_protograph()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ldpc.GirthWarning)
        return ldpc.lift_for_blocklength(proto, 500, seed=7)


@pytest.fixture(scope="session")
def toy_code(small_inner_code):
    """Code with k = 10, small enough for exhaustive ML decoding."""
    assert small_inner_code.k <= 10
    return small_inner_code


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

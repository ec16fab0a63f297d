import numpy as np
import pytest

from waverate.wavelets import build_table


@pytest.fixture(scope="session")
def haar_table():
    return build_table(1)


@pytest.fixture(scope="session")
def db4_table():
    return build_table(4)


@pytest.fixture(scope="session")
def gauss_sample():
    rng = np.random.Generator(np.random.Philox(key=20250810))
    return rng.standard_normal(2**13)

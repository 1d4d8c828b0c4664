import os
import tempfile

# keep cached pmfs of this test session away from the user cache
os.environ.setdefault("PRIMECOUPLING_CACHE", tempfile.mkdtemp(prefix="primecoupling-test-"))

import pytest  # noqa: E402

from primecoupling.number_theory import build_tables, get_tables  # noqa: E402
from primecoupling.samplers import RandomSource  # noqa: E402

SEEDS = (7, 1009, 524287)


@pytest.fixture(scope="session")
def tables():
    return get_tables(10**6)


@pytest.fixture(scope="session")
def small_tables():
    # built directly: get_tables would hand back a larger cached table
    return build_tables(10**4)


@pytest.fixture
def gen():
    return RandomSource(7).generator()

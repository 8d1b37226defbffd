import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stopsearch.environments import BktDomain
from stopsearch.evaluation import gather_full


@pytest.fixture(scope="session")
def bkt_domain():
    return BktDomain()


@pytest.fixture(scope="session")
def bkt_oracle_pool(bkt_domain):
    """Large shared pool for true-value estimation of tutoring policies."""
    return gather_full(bkt_domain, 50_000, 424242)

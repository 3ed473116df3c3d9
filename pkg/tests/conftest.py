import pytest

from src.services.features_service import FeatureConfig
from tests.helpers import DATA_DIR, synthetic_corpus


@pytest.fixture
def small_cfg():
    return FeatureConfig(window=1, use_affixes=False, use_shape=True)


@pytest.fixture
def tiny_cfg():
    # bias + w0 + low0 only: keeps finite-difference instances small
    return FeatureConfig(window=0, use_affixes=False, use_shape=False)


@pytest.fixture(scope="session")
def synthetic():
    return synthetic_corpus()


@pytest.fixture
def data_dir():
    return DATA_DIR

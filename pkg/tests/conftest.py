import numpy as np
import pytest

from printerid import synth
from printerid.config import PipelineConfig

SMALL_LAYOUT = synth.PageLayout(canvas=(1400, 1200), margin=100)


@pytest.fixture(scope="session")
def small_page():
    """One 80-letter page from the first default profile, with ground truth."""
    profile = synth.default_profiles()[0]
    rng = np.random.default_rng([7, profile.rng_seed, 0])
    return synth.gen_page(profile, 80, SMALL_LAYOUT, rng)


@pytest.fixture(scope="session")
def default_config():
    return PipelineConfig()

import numpy as np
import pytest

from datacollective.sharing import WeightProfile, default_catalog


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def uniform_profile(catalog):
    return WeightProfile.uniform(catalog)


def random_profile(catalog, rng, participant_id="p"):
    """Random 5-point answers normalized to a valid profile."""
    crit = rng.integers(1, 6, size=catalog.k).astype(float)
    elems = tuple(rng.integers(1, 6, size=q).astype(float) for q in catalog.sizes)
    return WeightProfile(
        participant_id,
        crit / crit.sum(),
        tuple(e / e.sum() for e in elems),
    )


def make_selection(values, z=5):
    from datacollective.sharing import SelectionVector

    return SelectionVector(np.asarray(values), z)

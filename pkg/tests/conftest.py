import numpy as np
import pytest

import extbounds as xb


@pytest.fixture(scope="session")
def n3_harmonic():
    return xb.builtin("N3_harmonic")


@pytest.fixture(scope="session")
def n3_decay():
    return xb.builtin("N3_decay")


@pytest.fixture(scope="session")
def n3_anisotropic():
    return xb.builtin("N3_anisotropic")


@pytest.fixture(scope="session")
def n2_log():
    return xb.builtin("N2_log")


@pytest.fixture(scope="session")
def catalog(n3_harmonic, n3_decay, n3_anisotropic, n2_log):
    return {
        "N3_harmonic": n3_harmonic,
        "N3_decay": n3_decay,
        "N3_anisotropic": n3_anisotropic,
        "N2_log": n2_log,
    }


@pytest.fixture(scope="session")
def bundles(catalog):
    return {
        name: xb.constants_bundle(mp.problem) for name, mp in catalog.items()
    }


def random_points_in_annulus(domain, count, seed):
    """Sample points uniformly-ish in the open annulus, any direction."""
    rng = np.random.default_rng(seed)
    radii = rng.uniform(domain.a * 1.02, domain.R * 0.98, size=count)
    dirs = rng.normal(size=(count, domain.dimension))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    return radii[:, None] * dirs

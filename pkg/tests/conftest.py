import numpy as np
import pytest

from decolab.model import (
    DetectorOverlaps,
    EnvironmentSpec,
    ExperimentConfig,
    QuantonSpec,
    ScreenGeometry,
    SlitArray,
    SourceAmplitudes,
    default_screen,
    load_preset,
)


@pytest.fixture
def neon():
    return load_preset("neon")


@pytest.fixture
def c60():
    return load_preset("c60")


def random_fraunhofer_config(rng: np.random.Generator, n=None) -> ExperimentConfig:
    """Zero-phase config well inside the far-field regime with random slit
    count, amplitudes, geometry and decoherence strength."""
    n = int(rng.integers(2, 7)) if n is None else n
    mags = rng.uniform(0.2, 1.0, n)
    mags /= np.sqrt(np.sum(mags**2))
    lam = 10 ** rng.uniform(-11, -8)
    L = 10 ** rng.uniform(-2, 0.3)
    ell = np.sqrt(lam * L) * 10 ** rng.uniform(-1.5, -0.5)
    eps = ell * rng.uniform(0.05, 0.3)
    # keep pi eps^2 / (lambda L) below the warning threshold
    eps = min(eps, 0.5 * np.sqrt(0.01 * lam * L / np.pi))
    mass = 10 ** rng.uniform(-27, -23)
    cfg = ExperimentConfig(
        QuantonSpec(mass, lam),
        SlitArray(n, ell, eps),
        SourceAmplitudes(mags, np.zeros(n)),
        DetectorOverlaps.parallel(n),
        EnvironmentSpec(0.0, 0.0),
        default_screen(n, ell, eps, lam, L, points=201),
    )
    return cfg.with_kappa(rng.uniform(0.0, 3.0))

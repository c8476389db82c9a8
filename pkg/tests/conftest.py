"""Shared fixtures: random matrix helpers and the verified codebook."""

import numpy as np
import pytest

from covact import ExperimentConfig, HermitianMatrix, HpdMatrix
from covact.experiments import verified_codebook


def random_hermitian(rng, dim, scale=1.0) -> HermitianMatrix:
    raw = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return HermitianMatrix(scale * (raw + raw.conj().T) / 2)


def random_hpd(rng, dim, jitter=0.1) -> HpdMatrix:
    raw = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return HpdMatrix(raw @ raw.conj().T / dim + jitter * np.eye(dim))


@pytest.fixture(scope="session")
def default_config() -> ExperimentConfig:
    return ExperimentConfig()


@pytest.fixture(scope="session")
def verified(default_config):
    """The exact-verified Gaussian codebook used by the simulation study."""
    return verified_codebook(default_config)

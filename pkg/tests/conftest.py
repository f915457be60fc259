"""
PyTest configuration and shared fixtures for the clusterwise regression suite
"""

import os
from pathlib import Path

import numpy as np
import pytest

from src.data.generator import generate_problem
from src.models.clr_models import Dataset
from src.models.problem_models import EMConfig, ProblemSpec


@pytest.fixture(scope="session")
def project_root():
    """Project root directory fixture"""
    return Path(__file__).parent.parent


@pytest.fixture
def rng():
    """Seeded generator so tests are deterministic"""
    return np.random.default_rng(12345)


@pytest.fixture
def crossing_lines():
    """
    Noise-free 1-D instance: y = 1 + 2x and y = −1 − x, 200 rows each.

    Returns (Dataset, true beta).
    """
    generator = np.random.default_rng(7)
    beta = np.array([[1.0, 2.0], [-1.0, -1.0]])
    x = generator.uniform(-3.0, 3.0, size=400)
    labels = np.repeat([0, 1], 200)
    y = beta[labels, 0] + beta[labels, 1] * x
    return Dataset(X=x.reshape(-1, 1), y=y, labels=labels), beta


@pytest.fixture
def crossing_planes():
    """
    Noise-free 2-D instance with two planes crossing through the data.

    y = 0.5 + x1 + x2 and y = −0.5 + x1 − x2, 300 rows each.
    """
    generator = np.random.default_rng(11)
    beta = np.array([[0.5, 1.0, 1.0], [-0.5, 1.0, -1.0]])
    X = generator.standard_normal((600, 2))
    labels = np.repeat([0, 1], 300)
    y = np.sum(np.column_stack([np.ones(600), X]) * beta[labels], axis=1)
    return Dataset(X=X, y=y, labels=labels), beta


@pytest.fixture
def small_problem():
    """Generated K=2, p=3 problem with mild noise"""
    spec = ProblemSpec(K=2, p=3, cluster_sizes=[150, 150], dp=0.2, eta=0.1, seed=3)
    return generate_problem(spec)


@pytest.fixture
def em_config():
    """Two-cluster engine configuration with a short loop"""
    return EMConfig(K=2, max_loop=200, seed=1)


@pytest.fixture
def acceptance_seeds():
    """Replicate count override for benchmark-scale checks"""

    def seeds(default: int) -> int:
        override = os.getenv("CLR_ACCEPTANCE_SEEDS")
        return min(default, int(override)) if override else default

    return seeds

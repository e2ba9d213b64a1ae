import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make _oracles importable

from intervalmpc.bounds import UncertainSystem, compute_bounds
from intervalmpc.config import load_config

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"


@pytest.fixture(scope="session")
def di_config():
    """Bundled double-integrator configuration."""
    return load_config(CONFIGS / "double_integrator.yaml")


@pytest.fixture(scope="session")
def di_mpc(di_config):
    """Ready-to-solve controller configuration for the double integrator."""
    bounds = compute_bounds(di_config.sys, di_config.k_gain, di_config.n_max)
    return di_config.mpc_config(bounds)


@pytest.fixture(scope="session")
def leslie_config():
    return load_config(CONFIGS / "leslie.yaml")


@pytest.fixture(scope="session")
def conservatism_config():
    return load_config(CONFIGS / "conservatism.yaml")


def random_uncertain_system(rng, n=None, m=None, scale=0.05):
    """A random system with a stabilizing-ish nominal part and small radii."""
    n = int(rng.integers(2, 5)) if n is None else n
    m = int(rng.integers(1, 3)) if m is None else m
    a_hat = rng.normal(size=(n, n))
    a_hat *= 0.8 / max(np.abs(np.linalg.eigvals(a_hat)).max(), 1e-9)
    b_hat = rng.normal(size=(n, m))
    delta_a = scale * rng.uniform(0.0, 1.0, (n, n))
    delta_b = scale * rng.uniform(0.0, 1.0, (n, m))
    return UncertainSystem(a_hat, b_hat, delta_a, delta_b)

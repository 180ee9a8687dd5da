"""
Shared fixtures: tiny datasets, model specs and a finite-difference helper.
"""

import os
import sys

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.data.synthetic import synthesize_benchmark
from src.models.forecaster import MQForecaster
from src.models.specs import DecoderSpec, EncoderSpec, ModelSpec


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def numeric_gradient(fn, array: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central differences of scalar ``fn()`` with respect to ``array`` (perturbed in place)."""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        upper = fn()
        flat[i] = original - step
        lower = fn()
        flat[i] = original
        out[i] = (upper - lower) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric)) / scale)


@pytest.fixture
def benchmark():
    """Four short seasonal series with a static group column."""
    return synthesize_benchmark(seed=3, n_series=4, length=24, period=6)


@pytest.fixture
def dataset(benchmark):
    return benchmark.dataset()


@pytest.fixture
def make_model(dataset):
    """Factory for tiny models (H=4, K=3, Q=3) on the fixture dataset."""
    def _make(encoder="lstm", head="quantile", decoder="full", seed=0, **encoder_args):
        settings = {"hidden": 4, "depth": 3, "layers": 2}
        settings.update(encoder_args)
        spec = ModelSpec(
            horizon=3,
            quantiles=[0.1, 0.5, 0.9],
            head=head,
            encoder=EncoderSpec(kind=encoder, **settings),
            decoder=DecoderSpec(kind=decoder),
        )
        return MQForecaster.for_dataset(dataset, spec, seed=seed)
    return _make

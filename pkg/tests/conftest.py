import numpy as np
import pytest

from lobkit.benchmark import build_benchmark_files
from lobkit.synthetic import SyntheticConfig, generate_synthetic


@pytest.fixture(scope="session")
def small_day():
    """One deterministic 20k-event synthetic day with vendor snapshots."""
    return generate_synthetic(seed=7, n_events=20_000)


@pytest.fixture(scope="session")
def benchmark_dir(tmp_path_factory):
    """The bundled benchmark fixture, built once per test session."""
    out = tmp_path_factory.mktemp("bench")
    build_benchmark_files(out)
    return out


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)

import pytest

from multiq import synthetic


@pytest.fixture(scope="session")
def synthetic_root(tmp_path_factory):
    """Full three-class dataset: 40 tiles per class, 32x32 px, seed 42."""
    root = tmp_path_factory.mktemp("dataset_full")
    synthetic.write_dataset(root, tiles_per_class=40, size=32, seed=42)
    return root


@pytest.fixture(scope="session")
def small_root(tmp_path_factory):
    """Quick three-class dataset: 4 tiles per class, 32x32 px, seed 7."""
    root = tmp_path_factory.mktemp("dataset_small")
    synthetic.write_dataset(root, tiles_per_class=4, size=32, seed=7)
    return root

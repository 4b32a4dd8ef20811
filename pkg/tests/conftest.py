import numpy as np
import pytest

from ghsom.data import Dataset, load_iris
from ghsom.growth import GhsomParams, train_hierarchy


@pytest.fixture(scope="session")
def iris():
    return load_iris()


def make_dataset(seed, n=60, dim=3, clusters=3, labeled=False, name=None):
    """A synthetic clustered dataset living in [0,1]^dim, built directly."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.15, 0.85, size=(clusters, dim))
    raw = np.empty((n, dim))
    labels = [] if labeled else None
    for i in range(n):
        k = i % clusters
        raw[i] = np.clip(centers[k] + rng.normal(0, 0.06, dim), 0.0, 1.0)
        if labels is not None:
            labels.append(f"c{k}")
    lo = raw.min(axis=0)
    span = raw.max(axis=0) - lo
    span[span == 0] = 1.0
    return Dataset(
        name=name or f"blob{seed}",
        feature_names=[f"f{j}" for j in range(dim)],
        features=(raw - lo) / span,
        labels=labels,
        norm_kind="minmax",
        norm_a=lo,
        norm_b=span,
        raw_features=raw,
    )


@pytest.fixture(scope="session")
def blobs():
    return make_dataset(11, n=60, dim=3, labeled=True)


@pytest.fixture(scope="session")
def trained(iris):
    """One traditional and one interactive hierarchy on Iris, shared."""
    plain = GhsomParams()
    steered = GhsomParams()
    steered.interactive.enabled = True
    return {
        "traditional": train_hierarchy(iris, plain, seed=1),
        "interactive": train_hierarchy(iris, steered, seed=1),
    }

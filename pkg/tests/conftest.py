import numpy as np
import pytest

from hsv4d import Volume4D


def seeded_volume(dims, seed, low=0.0, high=1.0) -> Volume4D:
    rng = np.random.default_rng(seed)
    return Volume4D(rng.uniform(low, high, size=dims).astype(np.float32))


def ball_frame(n, radius, edge=0.5, center=None) -> np.ndarray:
    grid = np.mgrid[0:n, 0:n, 0:n].astype(np.float64)
    if center is None:
        center = ((n - 1) / 2.0,) * 3
    r = np.sqrt(sum((g - c) ** 2 for g, c in zip(grid, center)))
    return 1.0 / (1.0 + np.exp((r - radius) / edge))


@pytest.fixture
def random_pair():
    def make(dims=(2, 4, 4, 4), seed=0):
        return seeded_volume(dims, seed), seeded_volume(dims, seed + 1000)

    return make


@pytest.fixture
def ball_volume():
    def make(n=16, radius=5.0, frames=1):
        frame = ball_frame(n, radius)
        return Volume4D(np.stack([frame] * frames))

    return make

"""Shared fixtures: small phantoms and instrumented stream sources."""

import numpy as np
import pytest

from voxsample import ArraySource, generate_phantom

THREE_MATERIALS = ((0.1, 0.05, 0.7), (0.5, 0.05, 0.2), (0.9, 0.05, 0.1))


class CountingSequence:
    """Wraps a 1-D array, counting every element inspection through __getitem__."""

    def __init__(self, values):
        self._values = np.asarray(values, dtype=np.float64)
        self.inspections = 0

    def __len__(self):
        return len(self._values)

    def __getitem__(self, i):
        self.inspections += 1
        return self._values[i]


class CountingSource:
    """ArraySource wrapper that counts full passes over the volume."""

    def __init__(self, values, dims=None):
        self._inner = ArraySource(values, dims=dims)
        self.passes = 0

    @property
    def dims(self):
        return self._inner.dims

    @property
    def voxel_count(self):
        return self._inner.voxel_count

    def chunks(self, chunk_len):
        self.passes += 1
        return self._inner.chunks(chunk_len)


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)


@pytest.fixture
def two_material_phantom(tmp_path):
    """Noiseless 16^3 phantom: values 0.2 and 0.8, perfectly separable."""
    return generate_phantom(
        (16, 16, 16),
        [(0.2, 0.0, 0.5), (0.8, 0.0, 0.5)],
        seed=21,
        out_path=tmp_path / "two.raw",
    )


@pytest.fixture
def noisy_phantom(tmp_path):
    return generate_phantom(
        (16, 16, 16),
        THREE_MATERIALS,
        seed=33,
        out_path=tmp_path / "noisy.raw",
    )

"""Baseline image sampling for mask optimization.

Baselines are drawn from a preprocessed pool of dataset images. The pool is
built once (resizing is the expensive part) and shared by the per-image
samplers, each of which excludes the image being attributed and owns its
own RNG stream so results do not depend on scheduling order.
"""

from __future__ import annotations

import numpy as np

from ..data import Dataset
from ..preprocess import InputSpec, preprocess


class BaselinePool:
    """Dataset images preprocessed (no normalization) to one input spec."""

    def __init__(self, dataset: Dataset, input_spec: InputSpec):
        if len(dataset) == 0:
            raise ValueError("baseline pool needs at least one image")
        imgs = [preprocess(ex.image, input_spec, normalize=False)
                for ex in dataset.examples]
        self.images = np.stack(imgs).astype(np.float32)
        self.ids = tuple(ex.id for ex in dataset.examples)
        self._index = {id_: i for i, id_ in enumerate(self.ids)}
        self.input_spec = input_spec

    def __len__(self):
        return len(self.ids)

    def index_of(self, image_id: str):
        return self._index.get(image_id)


class BaselineSampler:
    """Uniform draws from a pool, never yielding the excluded image."""

    def __init__(self, pool: BaselinePool, seed: int, exclude_id=None):
        self.pool = pool
        self.exclude_index = None
        if exclude_id is not None:
            self.exclude_index = pool.index_of(exclude_id)
        n_valid = len(pool) - (0 if self.exclude_index is None else 1)
        if n_valid < 1:
            raise ValueError("no baseline candidates remain after excluding "
                             f"{exclude_id!r}")
        self._n_valid = n_valid
        self._rng = np.random.default_rng(seed)

    def draw(self, k: int) -> np.ndarray:
        """Return k baselines, shape (k, C, H, W), sampled with replacement."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        idx = self._rng.integers(0, self._n_valid, size=k)
        if self.exclude_index is not None:
            # Skip over the excluded slot instead of rejection sampling.
            idx = np.where(idx >= self.exclude_index, idx + 1, idx)
        return self.pool.images[idx]

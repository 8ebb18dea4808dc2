"""Mass-matched random masks, the control condition for transfer runs."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ..seeding import child_seed
from .maps import AttributionMap, config_digest


def random_mask_like(reference: AttributionMap, seed) -> np.ndarray:
    """Uniform noise rescaled so its mean equals the reference's exactly.

    Draw i.i.d. U[0, 1), multiply by mean(ref)/mean(draw), clip to [0, 1].
    Clipping can only occur when the target mean exceeds the draw's, i.e.
    the mask carries at least the reference mass; for the masses seen in
    practice (well below 0.5) the scale is < 1.2 and clipping never fires,
    so the match is exact up to float32 rounding.
    """
    rng = np.random.default_rng(seed)
    noise = rng.random(reference.data.shape, dtype=np.float64)
    target = float(reference.data.mean())
    if target == 0.0:
        return np.zeros_like(reference.data, dtype=np.float32)
    scaled = noise * (target / noise.mean())
    return np.clip(scaled, 0.0, 1.0).astype(np.float32)


class RandomMask(BaseEstimator):
    """Derives a random mask per reference map with a per-image seed.

    ``match_hash`` records which attribution config the masses were matched
    to; it enters the digest so controls for different reference runs never
    collide in a cache.
    """

    method = "RANDOM"

    def __init__(self, seed=0, match_hash=None):
        self.seed = seed
        self.match_hash = match_hash

    def config_digest(self) -> str:
        return config_digest(self.method, self.get_params())

    def attribute_like(self, reference: AttributionMap) -> AttributionMap:
        if self.match_hash is not None and \
                reference.config_hash != self.match_hash:
            raise ValueError(
                f"reference map {reference.image_id} has config hash "
                f"{reference.config_hash}, expected {self.match_hash}")
        data = random_mask_like(
            reference, child_seed(self.seed, "random", reference.image_id))
        return AttributionMap(data=data, image_id=reference.image_id,
                              source_model_id=reference.source_model_id,
                              method=self.method,
                              config_hash=self.config_digest())

import numpy as np
import pytest

from attrxfer import InputSpec, generate_shapes_dataset
from attrxfer.attribution.samplers import BaselinePool, BaselineSampler


@pytest.fixture(scope="module")
def pool():
    ds = generate_shapes_dataset(20, 3, 32, seed=4)
    return ds, BaselinePool(ds, InputSpec(3, 32, 32))


def test_pool_preprocesses_once(pool):
    ds, p = pool
    assert p.images.shape == (20, 3, 32, 32)
    assert p.images.dtype == np.float32
    assert p.index_of(ds.examples[3].id) == 3
    assert p.index_of("nope") is None


def test_sampler_never_draws_excluded_image(pool):
    ds, p = pool
    excluded = ds.examples[7]
    sampler = BaselineSampler(p, seed=0, exclude_id=excluded.id)
    draws = sampler.draw(500)
    assert draws.shape == (500, 3, 32, 32)
    # compare against the excluded image across all draws
    assert not (draws == excluded.image[None]).all(axis=(1, 2, 3)).any()
    # every non-excluded pool member is reachable
    hit = set()
    for row in draws:
        for i, img in enumerate(p.images):
            if (row == img).all():
                hit.add(i)
                break
    assert 7 not in hit
    assert len(hit) == 19


def test_sampler_deterministic_per_seed(pool):
    _, p = pool
    a = BaselineSampler(p, seed=5, exclude_id=None).draw(10)
    b = BaselineSampler(p, seed=5, exclude_id=None).draw(10)
    assert (a == b).all()
    c = BaselineSampler(p, seed=6, exclude_id=None).draw(10)
    assert not (a == c).all()


def test_sampler_rejects_empty_candidate_set():
    ds = generate_shapes_dataset(2, 2, 32, seed=4)
    solo = ds.with_split(ds.examples[:1], "test")
    p = BaselinePool(solo, InputSpec(3, 32, 32))
    with pytest.raises(ValueError, match="exclud"):
        BaselineSampler(p, seed=0, exclude_id=solo.examples[0].id)


def test_sampler_rejects_bad_k(pool):
    _, p = pool
    with pytest.raises(ValueError):
        BaselineSampler(p, seed=0).draw(0)

import numpy as np
import pytest

from attrxfer.validation import (check_batch, check_consistent_length,
                                 check_image, check_labels, check_mask,
                                 check_open_unit_interval,
                                 check_positive_int,
                                 check_probability_vector)


def test_check_image_accepts_valid():
    img = np.random.default_rng(0).random((3, 8, 8), dtype=np.float32)
    out = check_image(img)
    assert out.dtype == np.float32


@pytest.mark.parametrize("bad", [
    np.zeros((8, 8)),                       # missing channel axis
    np.zeros((2, 8, 8)),                    # 2 channels
    np.full((3, 8, 8), 1.5),                # out of range
    np.full((3, 8, 8), np.nan),             # non-finite
])
def test_check_image_rejects(bad):
    with pytest.raises(ValueError):
        check_image(bad)


def test_check_batch_shape_and_finiteness():
    check_batch(np.zeros((2, 3, 4, 4)))
    with pytest.raises(ValueError):
        check_batch(np.zeros((3, 4, 4)))
    with pytest.raises(ValueError):
        check_batch(np.full((1, 3, 4, 4), np.inf))


def test_check_mask_range_and_shape():
    check_mask(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        check_mask(np.zeros((3, 4, 4)))
    with pytest.raises(ValueError):
        check_mask(np.full((4, 4), -0.1))
    with pytest.raises(ValueError):
        check_mask(np.zeros((4, 4)), shape=(5, 5))


def test_check_probability_vector():
    check_probability_vector(np.array([0.2, 0.3, 0.5]))
    with pytest.raises(ValueError):
        check_probability_vector(np.array([0.2, 0.2, 0.2]))
    with pytest.raises(ValueError):
        check_probability_vector(np.array([-0.1, 0.6, 0.5]))


def test_check_labels_bounds():
    out = check_labels([0, 1, 2], num_classes=3)
    assert out.dtype.kind == "i"
    with pytest.raises(ValueError):
        check_labels([0, 3], num_classes=3)
    with pytest.raises(ValueError):
        check_labels([-1, 0])


def test_check_consistent_length():
    check_consistent_length([1, 2], [3, 4])
    with pytest.raises(ValueError):
        check_consistent_length([1], [2, 3])


def test_check_positive_int():
    assert check_positive_int(3, "x") == 3
    with pytest.raises(ValueError):
        check_positive_int(0, "x")
    with pytest.raises(ValueError):
        check_positive_int(2.5, "x")
    with pytest.raises(ValueError):
        check_positive_int(True, "x")


def test_check_open_unit_interval():
    assert check_open_unit_interval(0.5, "x") == 0.5
    with pytest.raises(ValueError):
        check_open_unit_interval(0.0, "x")
    assert check_open_unit_interval(1.0, "x", closed=True) == 1.0
    with pytest.raises(ValueError):
        check_open_unit_interval(1.2, "x", closed=True)

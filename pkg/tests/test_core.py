import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from basinlab.core import (
    DomainError,
    ShapeError,
    derive_rng,
    gaussian_matrix,
    glorot_std,
    is_power_of_two,
    make_rng,
    matmul,
)
from conftest import naive_matmul


def test_matmul_identity(rng):
    m = rng.standard_normal((3, 4))
    assert np.array_equal(matmul(np.eye(3), m), m)


def test_matmul_hand_example():
    out = matmul([[1, 1], [1, -1]], [[1], [1]])
    assert out.tolist() == [[2.0], [0.0]]


def test_matmul_matches_triple_loop(rng):
    a = rng.standard_normal((5, 4))
    b = rng.standard_normal((4, 3))
    assert np.max(np.abs(matmul(a, b) - naive_matmul(a, b))) < 1e-12


def test_matmul_shape_error():
    with pytest.raises(ShapeError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6))
def test_matmul_associative(seed, p, q, r, s):
    g = make_rng(seed)
    a, b, c = g.standard_normal((p, q)), g.standard_normal((q, r)), g.standard_normal((r, s))
    left = matmul(matmul(a, b), c)
    right = matmul(a, matmul(b, c))
    scale = max(np.max(np.abs(left)), 1e-300)
    assert np.max(np.abs(left - right)) / scale < 1e-10


def test_gaussian_zero_std_is_zero(rng):
    z = gaussian_matrix(rng, 4, 5, 0.0)
    assert z.shape == (4, 5)
    assert np.all(z == 0) and not np.any(np.signbit(z))


def test_gaussian_reproducible():
    a = gaussian_matrix(make_rng(9), 6, 7, 0.3)
    b = gaussian_matrix(make_rng(9), 6, 7, 0.3)
    assert np.array_equal(a, b)


def test_gaussian_moments():
    z = gaussian_matrix(make_rng(1), 1000, 1000, 1.0)
    assert abs(z.mean()) < 0.01
    assert abs(z.std() - 1.0) < 0.01


def test_gaussian_negative_std():
    with pytest.raises(DomainError):
        gaussian_matrix(make_rng(0), 2, 2, -1.0)


def test_pcg64_stream_is_pinned():
    # frozen draws: the generator algorithm is part of the reproducibility contract
    assert make_rng(12345).standard_normal(3).tolist() == [
        -1.4238250364546312, 1.2637284581291104, -0.8706617379590857]
    assert derive_rng(3, 7).standard_normal(2).tolist() == [
        -1.0833562250827422, -1.2029064925007689]


def test_derived_streams_differ():
    a = derive_rng(5, 1).standard_normal(4)
    b = derive_rng(5, 2).standard_normal(4)
    assert not np.array_equal(a, b)


@pytest.mark.parametrize("fan_in,fan_out,expected", [(1, 1, 1.0), (2, 2, np.sqrt(0.5)), (100, 28, 0.125)])
def test_glorot_std(fan_in, fan_out, expected):
    assert glorot_std(fan_in, fan_out) == pytest.approx(expected, rel=1e-15)


def test_glorot_std_rejects_zero():
    with pytest.raises(DomainError):
        glorot_std(0, 3)


def test_seed_range():
    with pytest.raises(DomainError):
        make_rng(-1)
    make_rng(2**64 - 1)


def test_is_power_of_two():
    assert [k for k in range(20) if is_power_of_two(k)] == [1, 2, 4, 8, 16]

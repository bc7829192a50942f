"""Sphere geometry primitives: norms, sampling, orthogonal complements."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fermisphere.geometry import (
    is_negligible,
    is_on_sphere,
    make_rng,
    norm,
    orthonormal_complement_basis,
    renormalize,
    sample_orthogonal_direction,
    sample_uniform_sphere,
    sphere_residual,
    split_rng,
)


def test_norm_examples():
    assert norm(np.array([3.0, 4.0])) == 5.0
    assert norm(np.array([2.0, 0.0, 0.0])) == 2.0
    batch = np.array([[1.0, 0.0], [0.0, -2.0]])
    assert np.allclose(norm(batch), [1.0, 2.0])


def test_sphere_residual_and_membership():
    p = np.array([0.6, 0.8, 0.0])
    assert sphere_residual(p, 1.0) == 0.0
    assert is_on_sphere(p, 1.0)
    # residual is measured on |w|^2, so a 1% radial error shows up as
    # roughly 2% of R^2
    q = 1.01 * p
    assert abs(sphere_residual(q, 1.0) - 0.0201) < 1e-12
    assert not is_on_sphere(q, 1.0)
    assert is_on_sphere(np.array([0.0, 2.5]), 2.5)


def test_is_negligible():
    assert is_negligible(np.zeros(3))
    assert is_negligible(np.array([1e-13, 0.0, 0.0]))
    assert not is_negligible(np.array([1e-6, 0.0, 0.0]))


def test_renormalize():
    p = np.array([[0.3, 0.4, 0.0], [1.0, 1.0, 1.0]])
    out = renormalize(p, 2.0)
    assert np.allclose(norm(out), 2.0, rtol=0, atol=1e-14)
    with pytest.raises(ValueError):
        renormalize(np.zeros(3), 1.0)


def test_make_rng_deterministic():
    a = make_rng(123).standard_normal(5)
    b = make_rng(123).standard_normal(5)
    assert np.array_equal(a, b)
    c = make_rng(124).standard_normal(5)
    assert not np.array_equal(a, c)


def test_split_rng_independent_streams():
    streams = split_rng(make_rng(9), 3)
    draws = [r.standard_normal(4) for r in streams]
    again = [r.standard_normal(4) for r in split_rng(make_rng(9), 3)]
    for x, y in zip(draws, again):
        assert np.array_equal(x, y)
    assert not np.array_equal(draws[0], draws[1])


class TestUniformSphere:
    def test_shapes_and_radius(self):
        rng = make_rng(0)
        one = sample_uniform_sphere(3, 2.0, rng)
        assert one.shape == (3,)
        assert abs(norm(one) - 2.0) < 1e-12
        many = sample_uniform_sphere(4, 0.5, rng, size=1000)
        assert many.shape == (1000, 4)
        assert np.max(np.abs(norm(many) - 0.5)) < 1e-12

    def test_rejects_bad_arguments(self):
        rng = make_rng(0)
        with pytest.raises(ValueError):
            sample_uniform_sphere(1, 1.0, rng)
        with pytest.raises(ValueError):
            sample_uniform_sphere(3, 0.0, rng)
        with pytest.raises(ValueError):
            sample_uniform_sphere(3, -1.0, rng)

    def test_mean_is_zero_at_clt_scale(self):
        # Coordinates of a uniform point on the 2-sphere are uniform on
        # [-1, 1]: per-coordinate deviation of the mean over n samples is
        # about (1/sqrt(3))/sqrt(n); 4e-3 is roughly 7 sigma for n = 1e6.
        n = 1_000_000
        pts = sample_uniform_sphere(3, 1.0, make_rng(42), size=n)
        assert np.max(np.abs(pts.mean(axis=0))) < 4e-3

    def test_coordinate_distribution_d3(self):
        # Archimedes: first coordinate uniform on [-R, R]; second moment
        # R^2/3.
        pts = sample_uniform_sphere(3, 2.0, make_rng(5), size=200_000)
        second = np.mean(pts[:, 0] ** 2)
        assert abs(second - 4.0 / 3.0) < 0.02

    def test_determinism(self):
        a = sample_uniform_sphere(3, 1.0, make_rng(77), size=10)
        b = sample_uniform_sphere(3, 1.0, make_rng(77), size=10)
        assert np.array_equal(a, b)


class TestComplementBasis:
    def test_axis_vector(self):
        basis = orthonormal_complement_basis(np.array([0.0, 0.0, 1.0]))
        assert basis.shape == (2, 3)
        assert np.max(np.abs(basis @ np.array([0.0, 0.0, 1.0]))) <= 1e-12
        assert np.allclose(basis @ basis.T, np.eye(2), atol=1e-12)

    def test_two_dimensional(self):
        basis = orthonormal_complement_basis(np.array([1.0, 0.0]))
        assert basis.shape == (1, 2)
        assert abs(basis[0] @ np.array([1.0, 0.0])) <= 1e-12
        assert abs(norm(basis[0]) - 1.0) <= 1e-12

    def test_degenerate_returns_full_basis(self):
        basis = orthonormal_complement_basis(np.zeros(3))
        assert np.array_equal(basis, np.eye(3))
        tiny = orthonormal_complement_basis(np.full(3, 1e-14))
        assert np.array_equal(tiny, np.eye(3))

    def test_oblique_vector(self):
        m = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
        basis = orthonormal_complement_basis(m)
        assert np.max(np.abs(basis @ m)) <= 1e-12
        assert np.allclose(basis @ basis.T, np.eye(2), atol=1e-12)

    @given(arrays(np.float64, st.integers(2, 6),
                  elements=st.floats(-10.0, 10.0)))
    def test_random_vectors(self, m):
        d = m.shape[0]
        basis = orthonormal_complement_basis(m)
        assert np.allclose(basis @ basis.T, np.eye(basis.shape[0]),
                           atol=1e-12)
        if is_negligible(m):
            assert basis.shape == (d, d)
        else:
            assert basis.shape == (d - 1, d)
            assert np.max(np.abs(basis @ (m / norm(m)))) <= 1e-12

    def test_bulk_orthonormality(self):
        rng = make_rng(8)
        ms = rng.standard_normal((2000, 4))
        for m in ms:
            basis = orthonormal_complement_basis(m)
            assert np.max(np.abs(basis @ m)) <= 1e-12 * (1.0 + norm(m))


class TestOrthogonalDirection:
    def test_two_dimensional_support(self):
        # In d = 2 the complement of a nonzero m is a line: the sampled
        # direction is one of exactly two opposite unit vectors.
        m = np.array([0.6, 0.8])
        perp = np.array([-0.8, 0.6])
        rng = make_rng(3)
        seen = set()
        for _ in range(64):
            n = sample_orthogonal_direction(m, rng)
            s = float(n @ perp)
            assert abs(abs(s) - 1.0) <= 1e-12
            seen.add(np.sign(s))
        assert seen == {-1.0, 1.0}

    def test_orthogonality_bulk(self):
        rng = make_rng(4)
        m = rng.standard_normal((100_000, 3))
        n = sample_orthogonal_direction(m, rng)
        assert n.shape == m.shape
        assert np.max(np.abs(norm(n) - 1.0)) <= 1e-12
        dots = np.abs(np.sum(n * m, axis=-1))
        assert np.all(dots <= 1e-12 * (1.0 + norm(m)))

    def test_degenerate_midpoint_uses_full_sphere(self):
        rng = make_rng(6)
        n = sample_orthogonal_direction(np.zeros(3), rng, size=5000)
        assert np.max(np.abs(norm(n) - 1.0)) <= 1e-12
        # A full-sphere draw is not confined to any plane.
        assert np.max(np.abs(n.mean(axis=0))) < 0.05
        assert np.min(np.abs(n[:, 2])) >= 0.0
        assert np.max(np.abs(n[:, 2])) > 0.9

    def test_size_argument(self):
        rng = make_rng(1)
        n = sample_orthogonal_direction(np.array([0.0, 0.0, 2.0]), rng,
                                        size=100)
        assert n.shape == (100, 3)
        assert np.max(np.abs(n[:, 2])) <= 1e-12

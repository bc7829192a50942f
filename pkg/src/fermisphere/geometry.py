"""Dimension-generic sphere geometry.

Uniform sampling on spheres, orthogonal-complement machinery and
renormalization helpers used by every other module.  All vector data is
plain float64 numpy with the coordinate axis last, so most functions accept
a single vector of shape ``(d,)`` or a batch of shape ``(..., d)``.

Randomness descends from a single seeded root stream (`make_rng`); parallel
work must use child streams obtained with `split_rng`, never a shared one.
"""

from __future__ import annotations

import numpy as np

# A point w counts as on the sphere of radius R when
# | |w|^2 - R^2 | <= SPHERE_RTOL * R^2.
SPHERE_RTOL = 1e-9

# |m| <= DEGENERATE_RTOL * (1 + |m|) is treated as m = 0.  The zero-mean
# (antipodal) configuration is meaningful and must not crash anything.
DEGENERATE_RTOL = 1e-12


def make_rng(seed=None) -> np.random.Generator:
    """Create the root random stream for a run.

    Every reproducible computation takes either this generator or a child
    obtained via `split_rng`.
    """
    return np.random.default_rng(seed)


def split_rng(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Split ``n`` statistically independent child streams off ``rng``.

    Children are derived through the generator's seed sequence, so a fixed
    root seed yields the same children regardless of how work is scheduled.
    """
    return rng.spawn(n)


def norm(v) -> np.ndarray:
    """Euclidean norm along the last axis."""
    return np.linalg.norm(np.asarray(v, dtype=float), axis=-1)


def sphere_residual(points, radius: float) -> np.ndarray:
    """Absolute residual | |w|^2 - R^2 | per point."""
    points = np.asarray(points, dtype=float)
    return np.abs(np.sum(points * points, axis=-1) - radius * radius)


def is_on_sphere(points, radius: float, rtol: float = SPHERE_RTOL):
    """True where the squared-norm residual is within ``rtol * R^2``."""
    return sphere_residual(points, radius) <= rtol * radius * radius


def renormalize(points, radius: float) -> np.ndarray:
    """Project points back onto the sphere of ``radius``.

    Monte Carlo loops accumulate rounding; re-projection keeps the on-sphere
    invariant assertable.  Zero vectors cannot be projected.
    """
    points = np.asarray(points, dtype=float)
    norms = np.linalg.norm(points, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("cannot renormalize a zero vector onto the sphere")
    return points * (radius / norms)


def is_negligible(m) -> np.ndarray:
    """True where ``m`` is negligibly small, |m| <= 1e-12 * (1 + |m|)."""
    n = norm(m)
    return n <= DEGENERATE_RTOL * (1.0 + n)


def sample_uniform_sphere(dim: int, radius: float, rng: np.random.Generator,
                          size: int | None = None) -> np.ndarray:
    """Sample uniformly from the sphere of ``radius`` in ``dim`` dimensions.

    Isotropic Gaussian draws normalized to the requested radius.  Returns
    shape ``(dim,)`` or ``(size, dim)``.
    """
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    shape = (dim,) if size is None else (int(size), dim)
    g = rng.standard_normal(shape)
    # Essentially-impossible tiny draws are redrawn rather than divided by.
    flat = g.reshape(-1, dim)
    while True:
        bad = np.linalg.norm(flat, axis=-1) < 1e-12
        if not bad.any():
            break
        flat[bad] = rng.standard_normal((int(bad.sum()), dim))
    return renormalize(g, radius)


def orthonormal_complement_basis(m) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``m``.

    For |m| above the degeneracy threshold this returns ``d - 1`` rows, the
    images of the standard basis e2..ed under the Householder reflection
    that exchanges e1 with the direction of m.  For negligible m the
    complement is the whole space and all ``d`` standard basis rows are
    returned.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 1:
        raise ValueError("orthonormal_complement_basis expects a single vector")
    d = m.shape[0]
    if bool(is_negligible(m)):
        return np.eye(d)
    mhat = m / np.linalg.norm(m)
    sign = 1.0 if mhat[0] >= 0.0 else -1.0
    v = mhat.copy()
    v[0] += sign  # mhat + sign*e1 avoids cancellation for mhat near -e1
    h = np.eye(d) - (2.0 / np.dot(v, v)) * np.outer(v, v)
    # h is symmetric orthogonal and maps mhat to -sign*e1, so rows 1..d-1
    # are orthonormal and orthogonal to m.
    return h[1:].copy()


def sample_orthogonal_direction(m, rng: np.random.Generator,
                                size: int | None = None) -> np.ndarray:
    """Uniform unit vector orthogonal to ``m``.

    The draw is an isotropic Gaussian with its component along m removed
    and the remainder normalized, which is uniform on the unit sphere of
    the complement subspace.  For negligible m the full unit sphere is
    used.  In d = 2 with nonzero m the complement is one-dimensional and
    the result is one of the two unit normals with probability 1/2 each.

    ``m`` may be a batch ``(k, d)`` (one direction per row); ``size`` asks
    for several directions orthogonal to one single vector.
    """
    m = np.asarray(m, dtype=float)
    single = m.ndim == 1
    if size is not None and not single:
        raise ValueError("size is only meaningful for a single m")
    mb = m[None, :] if single else m
    k, d = mb.shape
    nsamp = k if size is None else int(size)
    mrep = mb if size is None else np.broadcast_to(mb, (nsamp, d))

    mnorm = np.linalg.norm(mrep, axis=-1)
    degenerate = mnorm <= DEGENERATE_RTOL * (1.0 + mnorm)
    mhat = np.where(degenerate[:, None], 0.0,
                    mrep / np.where(mnorm == 0.0, 1.0, mnorm)[:, None])

    g = rng.standard_normal((nsamp, d))
    while True:
        # Two projection passes keep the residual component along m at
        # rounding level even when the first pass cancels badly.
        perp = g - np.sum(g * mhat, axis=-1, keepdims=True) * mhat
        perp = perp - np.sum(perp * mhat, axis=-1, keepdims=True) * mhat
        pn = np.linalg.norm(perp, axis=-1)
        bad = pn < 1e-6 * np.maximum(np.linalg.norm(g, axis=-1), 1e-300)
        if not bad.any():
            break
        g[bad] = rng.standard_normal((int(bad.sum()), d))
    out = perp / pn[:, None]
    if single and size is None:
        return out[0]
    return out

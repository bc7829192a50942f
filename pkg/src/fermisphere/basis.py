"""Functions on the sphere and structured families of them.

`SphericalFunction` is the common currency of the analysis code: a plain
evaluator over (..., d) point arrays tagged with its dimension, radius
and a human-readable descriptor.  The families below supply the test
functions used throughout:

- Fourier modes cos(k theta), sin(k theta) on the circle, evaluated by
  Chebyshev-style recurrences in (x/R, y/R) so that antipodal parity is
  exact in floating point (no trigonometry of accumulated angles);
- real spherical harmonics in d = 3 (orthonormal with respect to the
  unit surface measure);
- monomials in scaled coordinates for d >= 4, with the last exponent
  capped at 1 so the family stays linearly independent on the sphere
  (the relation sum w_i^2 = R^2 would otherwise tie degree-2 monomials
  to the constant).

`analysis_basis` picks the appropriate family per dimension for the
nullspace analysis; `named_function` resolves the short moment tokens
accepted on the command line (``cos3``, ``Y2_m1``, ...).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

try:
    from scipy.special import sph_harm_y as _sph_harm_y

    def _complex_harmonic(ell: int, m: int, theta, phi):
        return _sph_harm_y(ell, m, theta, phi)
except ImportError:  # older scipy
    from scipy.special import sph_harm as _sph_harm

    def _complex_harmonic(ell: int, m: int, theta, phi):
        return _sph_harm(m, ell, phi, theta)


@dataclass(frozen=True)
class SphericalFunction:
    """An evaluatable g on the sphere of radius R in dimension d.

    ``evaluator`` maps a float array of shape (..., d) to shape (...).
    Evaluation must be pure; everything downstream (defect sampling,
    constraint matrices, moment tracking) assumes repeated calls agree.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    dim: int
    radius: float
    descriptor: str

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dim}")
        if self.radius <= 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != self.dim:
            raise ValueError(
                f"{self.descriptor!r} expects dimension {self.dim}, "
                f"got points of dimension {points.shape[-1]}")
        return np.asarray(self.evaluator(points), dtype=float)


def constant_function(value: float, dim: int, radius: float,
                      descriptor: str | None = None) -> SphericalFunction:
    value = float(value)
    text = descriptor if descriptor is not None else f"{value:g}"

    def ev(pts):
        return np.full(pts.shape[:-1], value)

    return SphericalFunction(ev, dim, radius, text)


def coordinate_function(index: int, dim: int,
                        radius: float) -> SphericalFunction:
    """The bare coordinate w_index (1-based)."""
    if not 1 <= index <= dim:
        raise ValueError(f"coordinate index must be in 1..{dim}, got {index}")

    def ev(pts):
        return pts[..., index - 1]

    return SphericalFunction(ev, dim, radius, f"w{index}")


def affine_function(a: float, b, dim: int, radius: float) -> SphericalFunction:
    """g(w) = a + b . w, the full invariant family for d >= 3."""
    b = np.asarray(b, dtype=float)
    if b.shape != (dim,):
        raise ValueError(f"b must have shape ({dim},), got {b.shape}")
    a = float(a)
    terms = " + ".join(f"{bi:g}*w{i + 1}" for i, bi in enumerate(b))

    def ev(pts):
        return a + pts @ b

    return SphericalFunction(ev, dim, radius, f"{a:g} + {terms}")


# ---------------------------------------------------------------------------
# Fourier modes on the circle (d = 2)


def _angle_recurrences(pts: np.ndarray, radius: float, k: int):
    """cos(k theta), sin(k theta) from (x/R, y/R) by index recurrence.

    Each step multiplies by c = cos(theta) and combines previous terms,
    so negating (x, y) flips the sign of exactly the odd-k values with
    no rounding: antipodal parity holds bitwise.
    """
    c = pts[..., 0] / radius
    s = pts[..., 1] / radius
    cos_prev, cos_cur = np.ones_like(c), c
    sin_prev, sin_cur = np.zeros_like(s), s
    if k == 0:
        return cos_prev, sin_prev
    for _ in range(k - 1):
        cos_prev, cos_cur = cos_cur, 2.0 * c * cos_cur - cos_prev
        sin_prev, sin_cur = sin_cur, 2.0 * c * sin_cur - sin_prev
    return cos_cur, sin_cur


def fourier_mode(kind: str, k: int, radius: float) -> SphericalFunction:
    """cos(k theta) or sin(k theta) on the circle of radius R."""
    if kind not in ("cos", "sin"):
        raise ValueError(f"kind must be 'cos' or 'sin', got {kind!r}")
    if k < 0:
        raise ValueError(f"mode index must be >= 0, got {k}")
    pick = 0 if kind == "cos" else 1

    def ev(pts):
        return _angle_recurrences(pts, radius, k)[pick]

    return SphericalFunction(ev, 2, radius, f"{kind}{k}")


def fourier_basis(max_k: int, radius: float) -> list[SphericalFunction]:
    """{1} followed by cos(k theta), sin(k theta) for k = 1..max_k."""
    if max_k < 1:
        raise ValueError(f"max_k must be >= 1, got {max_k}")
    out = [constant_function(1.0, 2, radius, descriptor="1")]
    for k in range(1, max_k + 1):
        out.append(fourier_mode("cos", k, radius))
        out.append(fourier_mode("sin", k, radius))
    return out


# ---------------------------------------------------------------------------
# Real spherical harmonics (d = 3)


def real_harmonic(ell: int, m: int, radius: float) -> SphericalFunction:
    """Real spherical harmonic Y_{ell,m}, orthonormal on the unit sphere.

    m > 0 pairs with cos(m phi), m < 0 with sin(|m| phi); integral of
    Y^2 over the unit sphere is 1 (for radius R the functions are
    composed with w / R).
    """
    if ell < 0 or abs(m) > ell:
        raise ValueError(f"need 0 <= |m| <= ell, got ell={ell}, m={m}")

    def ev(pts):
        x = pts[..., 0] / radius
        y = pts[..., 1] / radius
        z = pts[..., 2] / radius
        theta = np.arccos(np.clip(z, -1.0, 1.0))
        phi = np.arctan2(y, x)
        if m == 0:
            return np.real(_complex_harmonic(ell, 0, theta, phi))
        cplx = _complex_harmonic(ell, abs(m), theta, phi)
        sign = (-1.0) ** abs(m)
        if m > 0:
            return sign * np.sqrt(2.0) * np.real(cplx)
        return sign * np.sqrt(2.0) * np.imag(cplx)

    return SphericalFunction(ev, 3, radius, f"Y{ell}_{m}")


def harmonic_basis(max_ell: int, radius: float) -> list[SphericalFunction]:
    """All real harmonics of degree <= max_ell: (max_ell + 1)^2 functions."""
    if max_ell < 0:
        raise ValueError(f"max_ell must be >= 0, got {max_ell}")
    return [real_harmonic(ell, m, radius)
            for ell in range(max_ell + 1)
            for m in range(-ell, ell + 1)]


# ---------------------------------------------------------------------------
# Monomials in scaled coordinates (d >= 4)


def monomial(alpha, dim: int, radius: float) -> SphericalFunction:
    """prod_i (w_i / R)^alpha_i for a multi-index alpha."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != dim or any(a < 0 for a in alpha):
        raise ValueError(f"alpha must be {dim} nonnegative integers")
    if all(a == 0 for a in alpha):
        text = "1"
    else:
        text = "*".join(f"w{i + 1}" if a == 1 else f"w{i + 1}^{a}"
                        for i, a in enumerate(alpha) if a > 0)

    def ev(pts):
        out = np.ones(pts.shape[:-1])
        for i, a in enumerate(alpha):
            if a:
                out = out * (pts[..., i] / radius) ** a
        return out

    return SphericalFunction(ev, dim, radius, text)


def monomial_basis(dim: int, max_degree: int,
                   radius: float) -> list[SphericalFunction]:
    """Monomials of total degree <= max_degree, last exponent <= 1.

    On the sphere the coordinates satisfy sum w_i^2 = R^2, so the full
    monomial set is linearly dependent; capping the last exponent at 1
    removes exactly the redundant generators and keeps the span intact.
    """
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    if max_degree < 1:
        raise ValueError(f"max_degree must be >= 1, got {max_degree}")
    alphas: list[tuple[int, ...]] = []

    def extend(prefix, remaining):
        if len(prefix) == dim - 1:
            for last in range(min(remaining, 1) + 1):
                alphas.append(prefix + (last,))
            return
        for a in range(remaining + 1):
            extend(prefix + (a,), remaining - a)

    extend((), max_degree)
    alphas.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
    return [monomial(a, dim, radius) for a in alphas]


def analysis_basis(dim: int, degree: int,
                   radius: float) -> list[SphericalFunction]:
    """Basis used by the nullspace analysis: Fourier modes on the circle,
    real harmonics in d = 3, reduced monomials beyond."""
    if dim == 2:
        return fourier_basis(degree, radius)
    if dim == 3:
        return harmonic_basis(degree, radius)
    return monomial_basis(dim, degree, radius)


def named_function(token: str, dim: int,
                   radius: float) -> SphericalFunction | None:
    """Resolve a short moment token; None when the token is not a name.

    Recognized: ``1``; ``cosK``/``sinK`` (d = 2); ``Yl_m`` with negative
    orders written ``Yl_mM`` (d = 3), e.g. ``Y2_m1`` for m = -1.
    """
    token = token.strip()
    if token == "1":
        return constant_function(1.0, dim, radius, descriptor="1")
    if dim == 2 and len(token) > 3 and token[:3] in ("cos", "sin"):
        tail = token[3:]
        if tail.isdigit():
            return fourier_mode(token[:3], int(tail), radius)
    if dim == 3 and token.startswith("Y") and "_" in token:
        head, _, tail = token[1:].partition("_")
        sign = 1
        if tail.startswith("m"):
            sign, tail = -1, tail[1:]
        if head.isdigit() and tail.isdigit():
            ell, m = int(head), sign * int(tail)
            if abs(m) <= ell:
                return real_harmonic(ell, m, radius)
    return None

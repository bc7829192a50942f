"""Collision kinematics on and off the sphere.

Two collision laws live here.  The sphere-preserving ("quantized") law keeps
both outgoing velocities on the sphere of radius R while conserving the
momentum sum; the classical law conserves momentum and kinetic energy in
free space.  Both post-collision maps share the midpoint form

    out1 = m + h * n,   out2 = m - h * n,

with m the pair midpoint and h half the ingoing separation.  For the
quantized law n must be orthogonal to m; the identity |m|^2 + h^2 = R^2
then puts both outputs back on the sphere.

The module also provides the explicit admissible-quadruple construction
from four scalars s,t,u,v in [-1,1] with s + t = u + v, which produces
nontrivial sphere quadruples in dimensions >= 3 and underpins the
constraint sampling used by the invariant analysis.

Types hold data; the `is_admissible_*` predicates validate, so that
deliberately broken quadruples can be represented in tests and reports.
All point fields are float64 arrays of shape (..., d): single collisions
and sampled batches flow through the same code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    is_on_sphere,
    norm,
    sample_orthogonal_direction,
    sample_uniform_sphere,
    sphere_residual,
)

MOMENTUM_RTOL = 1e-9

# Tolerance for the seed sum constraint s + t = u + v.
SEED_SUM_TOL = 1e-12

# Square-root arguments guaranteed nonnegative in exact arithmetic may
# round slightly negative; anything in [-SQRT_CLAMP, 0) is clamped to 0.
SQRT_CLAMP = 1e-15


class UnsupportedDimensionError(ValueError):
    """Raised when an operation requires a higher dimension."""


class DegenerateSeedError(ValueError):
    """Raised when a scalar seed has s = t and no interpolation parameter."""


def _as_points(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim < 1:
        raise ValueError(f"{name} must have at least one coordinate axis")
    return x


@dataclass(frozen=True)
class CollisionPair:
    """Ingoing velocities, both on the sphere of the shared radius."""

    first: np.ndarray
    second: np.ndarray
    radius: float

    def __post_init__(self):
        first = _as_points(self.first, "first")
        second = _as_points(self.second, "second")
        if first.shape != second.shape:
            raise ValueError("pair members must have identical shapes")
        if self.radius <= 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        for name, pts in (("first", first), ("second", second)):
            if not np.all(is_on_sphere(pts, self.radius)):
                worst = float(np.max(sphere_residual(pts, self.radius)))
                raise ValueError(
                    f"{name} is off the sphere of radius {self.radius} "
                    f"(max |w|^2 residual {worst:.3e})")
        object.__setattr__(self, "first", first)
        object.__setattr__(self, "second", second)

    @property
    def dim(self) -> int:
        return self.first.shape[-1]


@dataclass(frozen=True)
class CollisionQuadruple:
    """Four sphere velocities (in1, in2, out1, out2) with a shared radius.

    Whether the quadruple actually satisfies the momentum and on-sphere
    constraints is checked by `is_admissible_quantum`, not at construction.
    """

    in1: np.ndarray
    in2: np.ndarray
    out1: np.ndarray
    out2: np.ndarray
    radius: float

    def __post_init__(self):
        pts = [_as_points(getattr(self, f), f)
               for f in ("in1", "in2", "out1", "out2")]
        if len({p.shape for p in pts}) != 1:
            raise ValueError("quadruple members must have identical shapes")
        if self.radius <= 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        for f, p in zip(("in1", "in2", "out1", "out2"), pts):
            object.__setattr__(self, f, p)

    @property
    def dim(self) -> int:
        return self.in1.shape[-1]

    @property
    def count(self) -> int:
        """Number of quadruples in the batch (1 for a single collision)."""
        return int(np.prod(self.in1.shape[:-1], dtype=int))

    def points(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.in1, self.in2, self.out1, self.out2


@dataclass(frozen=True)
class ClassicalQuadruple:
    """Four free-space velocities (in1, in2, out1, out2), no sphere."""

    in1: np.ndarray
    in2: np.ndarray
    out1: np.ndarray
    out2: np.ndarray

    def __post_init__(self):
        pts = [_as_points(getattr(self, f), f)
               for f in ("in1", "in2", "out1", "out2")]
        if len({p.shape for p in pts}) != 1:
            raise ValueError("quadruple members must have identical shapes")
        for f, p in zip(("in1", "in2", "out1", "out2"), pts):
            object.__setattr__(self, f, p)

    @property
    def dim(self) -> int:
        return self.in1.shape[-1]


@dataclass(frozen=True)
class AdmissibilityReport:
    """Worst-case constraint residuals for a quadruple (or batch)."""

    ok: bool
    momentum_residual: float
    sphere_residuals: tuple[float, float, float, float] | None
    energy_residual: float | None
    tol: float

    def __bool__(self) -> bool:
        return self.ok

    @property
    def sphere_residual(self) -> float:
        if self.sphere_residuals is None:
            raise AttributeError("classical report has no sphere residuals")
        return max(self.sphere_residuals)


def post_collision_quantum(pair: CollisionPair, n) -> CollisionQuadruple:
    """Outgoing pair for the sphere-preserving collision law.

    ``n`` must be a unit vector orthogonal to the pair midpoint
    m = (in1 + in2)/2 (the condition is vacuous when m = 0).  Outputs are

        out1 = m + |in1 - in2|/2 * n,    out2 = m - |in1 - in2|/2 * n,

    and land on the sphere up to rounding because |m|^2 + |delta/2|^2 = R^2.
    """
    n = _as_points(n, "n")
    if n.shape != pair.first.shape:
        raise ValueError("direction n must match the pair's shape")
    nn = norm(n)
    if not np.all(np.abs(nn - 1.0) <= 1e-12):
        raise ValueError("n must be a unit vector (within 1e-12)")
    m = 0.5 * (pair.first + pair.second)
    dot = np.abs(np.sum(n * m, axis=-1))
    if not np.all(dot <= 1e-12 * (1.0 + pair.radius)):
        raise ValueError(
            f"n is not orthogonal to the pair midpoint "
            f"(max |n.m| = {float(np.max(dot)):.3e})")
    half = 0.5 * norm(pair.first - pair.second)
    step = half[..., None] * n
    return CollisionQuadruple(pair.first, pair.second, m + step, m - step,
                              pair.radius)


def sample_quantum_collision(pair: CollisionPair,
                             rng: np.random.Generator) -> CollisionQuadruple:
    """Random admissible collision: draw n orthogonal to the midpoint.

    In d = 2 with in2 != -in1 the complement is one-dimensional and the
    outcome is necessarily the identity or the exchange of the ingoing
    pair; only exactly antipodal 2-D pairs produce new velocities.
    """
    m = 0.5 * (pair.first + pair.second)
    n = sample_orthogonal_direction(m, rng)
    return post_collision_quantum(pair, n)


def post_collision_classical(v, v_star, n) -> ClassicalQuadruple:
    """Outgoing pair for the classical momentum/energy-conserving law.

    ``n`` is any unit vector; no orthogonality constraint applies off the
    sphere.
    """
    v = _as_points(v, "v")
    v_star = _as_points(v_star, "v_star")
    n = _as_points(n, "n")
    if not (v.shape == v_star.shape == n.shape):
        raise ValueError("v, v_star and n must have identical shapes")
    if not np.all(np.abs(norm(n) - 1.0) <= 1e-12):
        raise ValueError("n must be a unit vector (within 1e-12)")
    m = 0.5 * (v + v_star)
    half = 0.5 * norm(v - v_star)
    step = half[..., None] * n
    return ClassicalQuadruple(v, v_star, m + step, m - step)


def is_admissible_quantum(q: CollisionQuadruple,
                          tol: float = MOMENTUM_RTOL) -> AdmissibilityReport:
    """Check momentum (<= tol*R) and on-sphere (<= tol*R^2) residuals."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    r = q.radius
    mom = norm(q.in1 + q.in2 - q.out1 - q.out2)
    sph = [sphere_residual(p, r) for p in q.points()]
    ok = bool(np.all(mom <= tol * r)
              and all(np.all(s <= tol * r * r) for s in sph))
    return AdmissibilityReport(
        ok=ok,
        momentum_residual=float(np.max(mom)),
        sphere_residuals=tuple(float(np.max(s)) for s in sph),
        energy_residual=None,
        tol=tol,
    )


def is_admissible_classical(q: ClassicalQuadruple,
                            tol: float = MOMENTUM_RTOL) -> AdmissibilityReport:
    """Check momentum and kinetic-energy residuals, relative to pair scale."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    mom = norm(q.in1 + q.in2 - q.out1 - q.out2)
    e_in = np.sum(q.in1 * q.in1, axis=-1) + np.sum(q.in2 * q.in2, axis=-1)
    e_out = np.sum(q.out1 * q.out1, axis=-1) + np.sum(q.out2 * q.out2, axis=-1)
    energy = np.abs(e_in - e_out)
    mom_scale = 1.0 + norm(q.in1) + norm(q.in2)
    ok = bool(np.all(mom <= tol * mom_scale)
              and np.all(energy <= tol * (1.0 + e_in)))
    return AdmissibilityReport(
        ok=ok,
        momentum_residual=float(np.max(mom)),
        sphere_residuals=None,
        energy_residual=float(np.max(energy)),
        tol=tol,
    )


def sign_flip(q: CollisionQuadruple, coordinate: int) -> CollisionQuadruple:
    """Flip the sign of one coordinate (1-based) in all four velocities.

    Momentum conservation is coordinatewise and norms ignore signs, so
    this maps admissible quadruples to admissible quadruples.
    """
    d = q.dim
    if not 1 <= coordinate <= d:
        raise ValueError(f"coordinate must be in 1..{d}, got {coordinate}")
    flip = np.ones(d)
    flip[coordinate - 1] = -1.0
    return CollisionQuadruple(q.in1 * flip, q.in2 * flip, q.out1 * flip,
                              q.out2 * flip, q.radius)


# ---------------------------------------------------------------------------
# Explicit quadruple construction from scalar seeds


@dataclass(frozen=True)
class QuadrupleSeed:
    """Four scalars in [-1,1] with s + t = u + v, plus a coordinate slot.

    The seed describes an admissible unit-sphere quadruple whose
    ``axis``-th coordinates are exactly (s, t, u, v); the remaining
    coordinates are filled by the explicit construction.  Values are
    clipped to [-1, 1] after a 1e-12 entry tolerance.
    """

    s: float
    t: float
    u: float
    v: float
    axis: int = 1
    dim: int = 3

    def __post_init__(self):
        if self.dim < 3:
            raise UnsupportedDimensionError(
                f"seed quadruples need dimension >= 3, got {self.dim}")
        if not 1 <= self.axis <= self.dim:
            raise ValueError(f"axis must be in 1..{self.dim}, got {self.axis}")
        vals = []
        for name in ("s", "t", "u", "v"):
            x = float(getattr(self, name))
            if abs(x) > 1.0 + 1e-12:
                raise ValueError(f"{name} = {x} is outside [-1, 1]")
            vals.append(min(1.0, max(-1.0, x)))
        mismatch = abs(vals[0] + vals[1] - vals[2] - vals[3])
        if mismatch > SEED_SUM_TOL:
            raise ValueError(
                f"seed must satisfy s + t = u + v (mismatch {mismatch:.3e})")
        for name, x in zip(("s", "t", "u", "v"), vals):
            object.__setattr__(self, name, x)

    def canonical(self) -> "QuadrupleSeed":
        """Reorder to s <= u <= v <= t via the pair-exchange symmetries.

        The ingoing pair becomes the one holding the overall minimum
        (ties broken toward the larger maximum); the sum constraint then
        forces it to hold the maximum too, up to the entry tolerance.
        """
        lo_in, hi_in = sorted((self.s, self.t))
        lo_out, hi_out = sorted((self.u, self.v))
        if lo_in > lo_out or (lo_in == lo_out and hi_in < hi_out):
            lo_in, hi_in, lo_out, hi_out = lo_out, hi_out, lo_in, hi_in
        return QuadrupleSeed(lo_in, hi_in, lo_out, hi_out,
                             axis=self.axis, dim=self.dim)


@dataclass(frozen=True)
class ConstructionTrace:
    """Intermediate quantities of the explicit construction.

    All entries refer to the canonically ordered seed (s <= u <= v <= t) on
    the unit sphere: the interpolation parameter lam in [1/2, 1] with
    lam*s + (1-lam)*t = u and (1-lam)*s + lam*t = v, and the four
    complementary vectors sigma, tau, mu, nu of dimension d - 1.
    """

    lam: float | np.ndarray
    sigma: np.ndarray
    tau: np.ndarray
    mu: np.ndarray
    nu: np.ndarray


def lambda_parameter(seed: QuadrupleSeed) -> float:
    """Interpolation parameter of the canonically ordered seed.

    lam = (1 + (v - u)/(t - s)) / 2, which lies in [1/2, 1] and satisfies
    lam*s + (1-lam)*t = u, (1-lam)*s + lam*t = v.
    """
    c = seed.canonical()
    if c.s == c.t:
        raise DegenerateSeedError(
            "s = t after canonical ordering; the quadruple is trivial")
    lam = 0.5 * (1.0 + (c.v - c.u) / (c.t - c.s))
    # The seed sum tolerance can push the raw ratio past the endpoints.
    return min(1.0, max(0.5, lam))


def _clamped_sqrt(x: np.ndarray) -> np.ndarray:
    bad = x < -SQRT_CLAMP
    if np.any(bad):
        raise FloatingPointError(
            f"square-root argument below clamp window: {float(np.min(x)):.3e}")
    return np.sqrt(np.maximum(x, 0.0))


def construct_quadruples(s, t, u, v, dim: int = 3, axis: int = 1,
                         radius: float = 1.0,
                         ) -> tuple[CollisionQuadruple, ConstructionTrace]:
    """Vectorized explicit construction of admissible sphere quadruples.

    Seeds are canonically reordered internally; the returned quadruple
    carries the caller's (s, t) values on the ingoing pair and (u, v) on
    the outgoing pair, in the order given.  Scalars sit in coordinate
    ``axis`` (1-based); the complementary vectors fill the remaining
    coordinates in increasing order, with only their first two entries
    nonzero.  The trace always refers to the canonical ordering.
    """
    if dim < 3:
        raise UnsupportedDimensionError(
            f"the construction needs dimension >= 3, got {dim}")
    if not 1 <= axis <= dim:
        raise ValueError(f"axis must be in 1..{dim}, got {axis}")
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    s, t, u, v = np.broadcast_arrays(*(np.asarray(x, dtype=float)
                                       for x in (s, t, u, v)))
    for name, x in zip("stuv", (s, t, u, v)):
        if np.any(np.abs(x) > 1.0 + 1e-12):
            raise ValueError(f"{name} contains values outside [-1, 1]")
    mismatch = np.abs(s + t - u - v)
    if np.any(mismatch > SEED_SUM_TOL):
        raise ValueError(
            f"seeds must satisfy s + t = u + v "
            f"(max mismatch {float(np.max(mismatch)):.3e})")
    s = np.clip(s, -1.0, 1.0)
    t = np.clip(t, -1.0, 1.0)
    u = np.clip(u, -1.0, 1.0)
    v = np.clip(v, -1.0, 1.0)

    # Canonical reordering s <= u <= v <= t, remembering how to undo it.
    # The ordering can be violated by as much as the seed sum mismatch,
    # so the interpolation parameter is clipped back into [1/2, 1].
    flip_in = s > t
    lo_in, hi_in = np.minimum(s, t), np.maximum(s, t)
    flip_out = u > v
    lo_out, hi_out = np.minimum(u, v), np.maximum(u, v)
    swap = (lo_in > lo_out) | ((lo_in == lo_out) & (hi_in < hi_out))
    cs = np.where(swap, lo_out, lo_in)
    ct = np.where(swap, hi_out, hi_in)
    cu = np.where(swap, lo_in, lo_out)
    cv = np.where(swap, hi_in, hi_out)

    degenerate = cs == ct
    span = np.where(degenerate, 1.0, ct - cs)
    lam = np.where(degenerate, 1.0,
                   np.clip(0.5 * (1.0 + (cv - cu) / span), 0.5, 1.0))

    sig1 = _clamped_sqrt(1.0 - cs * cs)
    tau1 = _clamped_sqrt(1.0 - ct * ct)
    p = np.where(degenerate, sig1, lam * sig1 + (1.0 - lam) * tau1)
    q_ = np.where(degenerate, sig1, (1.0 - lam) * sig1 + lam * tau1)
    # The two square-root arguments agree exactly in real arithmetic
    # (this is what makes sigma + tau = mu + nu close); averaging the
    # rounded values keeps the momentum residual at rounding level.  A
    # seed sum mismatch of delta can push the average negative by a few
    # delta, hence the wider clamp window here.
    arg_u = 1.0 - cu * cu - p * p
    arg_v = 1.0 - cv * cv - q_ * q_
    w = 0.5 * (arg_u + arg_v)
    if np.any(w < -8.0 * SEED_SUM_TOL):
        raise FloatingPointError(
            f"square-root argument below clamp window: {float(np.min(w)):.3e}")
    second = np.where(degenerate, 0.0, np.sqrt(np.maximum(w, 0.0)))

    shape = s.shape
    tilde_slots = [i for i in range(dim) if i != axis - 1]

    def assemble(scalar, first, sec):
        pt = np.zeros(shape + (dim,))
        pt[..., axis - 1] = scalar
        pt[..., tilde_slots[0]] = first
        pt[..., tilde_slots[1]] = sec
        return pt * radius

    p_cs = assemble(cs, sig1, np.zeros(shape))
    p_ct = assemble(ct, tau1, np.zeros(shape))
    p_cu = assemble(cu, p, -second)
    p_cv = assemble(cv, q_, second)

    def pick(cond, a, b):
        return np.where(cond[..., None], a, b)

    # Undo the pair swap, then the within-pair order.
    in_lo = pick(swap, p_cu, p_cs)
    in_hi = pick(swap, p_cv, p_ct)
    out_lo = pick(swap, p_cs, p_cu)
    out_hi = pick(swap, p_ct, p_cv)
    in1 = pick(flip_in, in_hi, in_lo)
    in2 = pick(flip_in, in_lo, in_hi)
    out1 = pick(flip_out, out_hi, out_lo)
    out2 = pick(flip_out, out_lo, out_hi)

    quad = CollisionQuadruple(in1, in2, out1, out2, radius)
    sigma = np.zeros(shape + (dim - 1,))
    sigma[..., 0] = sig1
    tau = np.zeros(shape + (dim - 1,))
    tau[..., 0] = tau1
    mu = np.zeros(shape + (dim - 1,))
    mu[..., 0] = p
    mu[..., 1] = -second
    nu = np.zeros(shape + (dim - 1,))
    nu[..., 0] = q_
    nu[..., 1] = second
    trace = ConstructionTrace(lam if shape else float(lam), sigma, tau, mu, nu)
    return quad, trace


def construct_quadruple(seed: QuadrupleSeed,
                        radius: float = 1.0,
                        ) -> tuple[CollisionQuadruple, ConstructionTrace]:
    """Explicit admissible quadruple for a single scalar seed."""
    return construct_quadruples(seed.s, seed.t, seed.u, seed.v,
                                dim=seed.dim, axis=seed.axis, radius=radius)


# ---------------------------------------------------------------------------
# Quadruple samplers (constraint-row sources for the invariant analysis)


def sample_seed_values(count: int, rng: np.random.Generator):
    """Draw (s, t, u, v) with s, u, v uniform in [-1,1] and t = u + v - s.

    Draws with |t| > 1 are rejected and redrawn, which keeps the sum
    constraint exact to rounding without distorting the admissible set.
    """
    s = np.empty(count)
    t = np.empty(count)
    u = np.empty(count)
    v = np.empty(count)
    need = np.ones(count, dtype=bool)
    while need.any():
        k = int(need.sum())
        ss = rng.uniform(-1.0, 1.0, k)
        uu = rng.uniform(-1.0, 1.0, k)
        vv = rng.uniform(-1.0, 1.0, k)
        tt = uu + vv - ss
        ok = np.abs(tt) <= 1.0
        idx = np.nonzero(need)[0][ok]
        s[idx] = ss[ok]
        t[idx] = tt[ok]
        u[idx] = uu[ok]
        v[idx] = vv[ok]
        need[idx] = False
    return s, t, u, v


def sample_pair_direction_quadruples(dim: int, radius: float, count: int,
                                     rng: np.random.Generator,
                                     ) -> CollisionQuadruple:
    """Uniform ingoing pair plus a uniform orthogonal direction."""
    a = sample_uniform_sphere(dim, radius, rng, size=count)
    b = sample_uniform_sphere(dim, radius, rng, size=count)
    return sample_quantum_collision(CollisionPair(a, b, radius), rng)


def sample_antipodal_quadruples(dim: int, radius: float, count: int,
                                rng: np.random.Generator,
                                ) -> CollisionQuadruple:
    """Antipodal ingoing pair mapped to a uniform antipodal outgoing pair.

    With zero total momentum any output direction is admissible; these are
    the only 2-D collisions that produce new velocities.
    """
    a = sample_uniform_sphere(dim, radius, rng, size=count)
    b = sample_uniform_sphere(dim, radius, rng, size=count)
    return CollisionQuadruple(a, -a, b, -b, radius)


def sample_constructor_quadruples(dim: int, radius: float, count: int,
                                  rng: np.random.Generator,
                                  ) -> CollisionQuadruple:
    """Quadruples from random scalar seeds with a random coordinate slot."""
    if dim < 3:
        raise UnsupportedDimensionError(
            f"the constructor sampler needs dimension >= 3, got {dim}")
    s, t, u, v = sample_seed_values(count, rng)
    axes = rng.integers(1, dim + 1, count)
    in1 = np.empty((count, dim))
    in2 = np.empty((count, dim))
    out1 = np.empty((count, dim))
    out2 = np.empty((count, dim))
    for ax in range(1, dim + 1):
        mask = axes == ax
        if not mask.any():
            continue
        quad, _ = construct_quadruples(s[mask], t[mask], u[mask], v[mask],
                                       dim=dim, axis=ax, radius=radius)
        in1[mask] = quad.in1
        in2[mask] = quad.in2
        out1[mask] = quad.out1
        out2[mask] = quad.out2
    return CollisionQuadruple(in1, in2, out1, out2, radius)


def sample_mixed_quadruples(dim: int, radius: float, count: int,
                            rng: np.random.Generator) -> CollisionQuadruple:
    """Half pair-plus-direction, half constructor seeds (d >= 3).

    The pair-plus-direction half exercises generic collisions; the
    constructor half guarantees rows that constrain the even parts, which
    generic pairs in low dimension may miss.
    """
    n_pairs = count // 2
    qa = sample_pair_direction_quadruples(dim, radius, n_pairs, rng)
    qb = sample_constructor_quadruples(dim, radius, count - n_pairs, rng)
    return CollisionQuadruple(
        np.concatenate([qa.in1, qb.in1]),
        np.concatenate([qa.in2, qb.in2]),
        np.concatenate([qa.out1, qb.out1]),
        np.concatenate([qa.out2, qb.out2]),
        radius,
    )


SAMPLER_KINDS = ("pairs", "construct", "antipodal", "mixed")


def make_sampler(kind: str, dim: int, radius: float):
    """Sampler factory: returns callable(count, rng) -> CollisionQuadruple."""
    if kind not in SAMPLER_KINDS:
        raise ValueError(f"unknown sampler {kind!r}; choose from {SAMPLER_KINDS}")
    if kind in ("construct", "mixed") and dim < 3:
        raise UnsupportedDimensionError(
            f"sampler {kind!r} needs dimension >= 3, got {dim}")
    fn = {
        "pairs": sample_pair_direction_quadruples,
        "construct": sample_constructor_quadruples,
        "antipodal": sample_antipodal_quadruples,
        "mixed": sample_mixed_quadruples,
    }[kind]

    def sampler(count: int, rng: np.random.Generator) -> CollisionQuadruple:
        return fn(dim, radius, count, rng)

    sampler.kind = kind
    return sampler

"""Tests and characterizations of collision invariants.

A function g on the sphere is a collision invariant when

    g(in1) + g(in2) - g(out1) - g(out2) = 0

for every admissible quadruple; the residual of that identity is the
*defect*.  This module provides everything that measures or exploits it:

- the parity decomposition g = sum_I g_I into components odd in exactly
  the coordinates of I, which reduces invariance questions to single
  coordinates;
- Monte Carlo defect statistics over sampled quadruples, for both the
  sphere-preserving and the classical collision laws;
- least-squares fits against the known invariant families (affine
  A + B.w on the sphere; A + B.v + C|v|^2 off it) with rank-deficiency
  detection, since on a single sphere |v|^2 merges with the constant;
- the sampled-constraint nullspace analysis: defects of a function basis
  over many quadruples form a matrix whose numerical kernel approximates
  the invariant subspace of the basis span;
- the circle (d = 2) even-part constancy check g(w) + g(-w) = const;
- additive (Cauchy) functional-equation machinery: defect statistics of
  h(x+y) = h(x) + h(y) and the through-origin slope fit h(x) = c x,
  together with the reduction of a single-coordinate invariant component
  to its scalar profile h_i.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, product
from typing import Callable, Sequence

import numpy as np

from .basis import SphericalFunction
from .collisions import (
    CollisionQuadruple,
    is_admissible_quantum,
    make_sampler,
    post_collision_classical,
)
from .geometry import make_rng, sample_uniform_sphere

DEFECT_TOL = 1e-8

RANK_RCOND = 1e-10


class NotInvariantError(ValueError):
    """Raised when a function fails a structural invariance requirement."""


# ---------------------------------------------------------------------------
# Parity decomposition


@dataclass(frozen=True)
class ParityIndex:
    """A subset of coordinate indices {1..d}, held strictly increasing."""

    indices: tuple[int, ...]
    dim: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if sorted(set(idx)) != list(idx):
            raise ValueError(f"indices must be strictly increasing, got {idx}")
        if idx and not (1 <= idx[0] and idx[-1] <= self.dim):
            raise ValueError(f"indices must lie in 1..{self.dim}, got {idx}")
        if self.dim < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dim}")
        object.__setattr__(self, "indices", idx)

    @property
    def size(self) -> int:
        return len(self.indices)

    def __str__(self) -> str:
        return "{" + ",".join(str(i) for i in self.indices) + "}"


def _sign_table(dim: int) -> np.ndarray:
    """All 2^d sign vectors in {+1,-1}^d, one per row."""
    return np.array(list(product((1.0, -1.0), repeat=dim)))


def parity_component(g: SphericalFunction,
                     index: ParityIndex) -> SphericalFunction:
    """The part of g odd in the coordinates of I and even in the rest.

    g_I(w) = 2^{-d} sum over sign vectors sigma of
             (prod_{i in I} sigma_i) g(sigma * w);
    evaluation costs 2^d calls to g.
    """
    if index.dim != g.dim:
        raise ValueError(
            f"index set is over dimension {index.dim}, g over {g.dim}")
    signs = _sign_table(g.dim)
    cols = [i - 1 for i in index.indices]
    weights = signs[:, cols].prod(axis=1) if cols else np.ones(len(signs))
    scale = 0.5 ** g.dim

    def ev(pts):
        acc = 0.0
        for sigma, weight in zip(signs, weights):
            acc = acc + weight * g.evaluator(pts * sigma)
        return scale * acc

    return SphericalFunction(ev, g.dim, g.radius,
                             f"parity{index}[{g.descriptor}]")


def parity_decompose(g: SphericalFunction,
                     ) -> dict[ParityIndex, SphericalFunction]:
    """All 2^d parity components; they sum pointwise back to g."""
    out = {}
    universe = range(1, g.dim + 1)
    for r in range(g.dim + 1):
        for combo in combinations(universe, r):
            index = ParityIndex(combo, g.dim)
            out[index] = parity_component(g, index)
    return out


# ---------------------------------------------------------------------------
# Defect statistics


@dataclass(frozen=True)
class DefectReport:
    """Statistics of |defect| over a sampled batch of quadruples."""

    samples: int
    mean_abs: float
    max_abs: float
    rms: float
    seed: int
    function_rms: float
    normalized_max: float

    def __post_init__(self):
        if self.max_abs + 1e-15 < self.mean_abs:
            raise ValueError("max |defect| cannot be below the mean")


def defect_on_quadruple(g: SphericalFunction, q: CollisionQuadruple,
                        tol: float = 1e-9):
    """g(in1) + g(in2) - g(out1) - g(out2); q must be admissible."""
    rep = is_admissible_quantum(q, tol=tol)
    if not rep.ok:
        raise ValueError(
            f"quadruple is not admissible at tol {tol} "
            f"(momentum {rep.momentum_residual:.3e}, "
            f"sphere {rep.sphere_residual:.3e})")
    return _raw_defects(g, q)


def _raw_defects(g, q: CollisionQuadruple):
    return g(q.in1) + g(q.in2) - g(q.out1) - g(q.out2)


def _defect_report(values_abs: np.ndarray, function_scale: float,
                   seed: int) -> DefectReport:
    return DefectReport(
        samples=int(values_abs.size),
        mean_abs=float(values_abs.mean()),
        max_abs=float(values_abs.max()),
        rms=float(np.sqrt(np.mean(values_abs ** 2))),
        seed=seed,
        function_rms=function_scale,
        normalized_max=float(values_abs.max() / (1.0 + function_scale)),
    )


def mc_defect(g: SphericalFunction, count: int, sampler, seed: int,
              ) -> DefectReport:
    """Defect statistics over ``count`` sampled quadruples.

    ``sampler`` is either a sampler kind name (see
    `collisions.make_sampler`) or a callable ``(count, rng) ->
    CollisionQuadruple``.  The report is deterministic given the seed;
    ``normalized_max`` divides by 1 + rms|g| so verdict thresholds are
    meaningful across function scales.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if isinstance(sampler, str):
        sampler = make_sampler(sampler, g.dim, g.radius)
    rng = make_rng(seed)
    quad = sampler(count, rng)
    vals = [g(p) for p in quad.points()]
    defects = np.abs(vals[0] + vals[1] - vals[2] - vals[3])
    scale = float(np.sqrt(np.mean(np.square(vals))))
    return _defect_report(defects, scale, seed)


def mc_classical_defect(fn: Callable[[np.ndarray], np.ndarray], dim: int,
                        count: int, seed: int) -> DefectReport:
    """Defect statistics for the classical law over Gaussian velocities.

    Velocities are drawn iid standard normal in R^d and collided along a
    uniform unit direction; ``fn`` maps (..., d) arrays to values.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    rng = make_rng(seed)
    v = rng.standard_normal((count, dim))
    v_star = rng.standard_normal((count, dim))
    n = sample_uniform_sphere(dim, 1.0, rng, size=count)
    quad = post_collision_classical(v, v_star, n)
    vals = [np.asarray(fn(p), dtype=float) for p in
            (quad.in1, quad.in2, quad.out1, quad.out2)]
    defects = np.abs(vals[0] + vals[1] - vals[2] - vals[3])
    scale = float(np.sqrt(np.mean(np.square(vals))))
    return _defect_report(defects, scale, seed)


# ---------------------------------------------------------------------------
# Least-squares fits against the invariant families


@dataclass(frozen=True)
class AffineFit:
    """Least-squares A + B.w through sphere samples."""

    a: float
    b: np.ndarray
    rms_residual: float
    samples: int
    rank_deficient: bool

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return self.a + pts @ self.b


@dataclass(frozen=True)
class ClassicalPolyFit:
    """Least-squares A + B.v + C|v|^2 through free-space samples."""

    a: float
    b: np.ndarray
    c: float
    rms_residual: float
    samples: int
    rank_deficient: bool

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return self.a + pts @ self.b + self.c * np.sum(pts * pts, axis=-1)


def fit_affine(points, values) -> AffineFit:
    """Fit A + B.w to (point, value) samples by least squares.

    A design rank below d + 1 (all samples confined to a proper
    subsphere) sets ``rank_deficient``; the minimum-norm solution is
    still returned.
    """
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    if points.ndim != 2 or points.shape[0] != values.shape[0]:
        raise ValueError("points must be (n, d) with matching values (n,)")
    n, d = points.shape
    if n < d + 1:
        raise ValueError(f"need at least {d + 1} samples, got {n}")
    design = np.concatenate([np.ones((n, 1)), points], axis=1)
    coef, _, rank, _ = np.linalg.lstsq(design, values, rcond=RANK_RCOND)
    resid = design @ coef - values
    return AffineFit(
        a=float(coef[0]),
        b=coef[1:].copy(),
        rms_residual=float(np.sqrt(np.mean(resid ** 2))),
        samples=n,
        rank_deficient=bool(rank < d + 1),
    )


def fit_affine_function(g: SphericalFunction, count: int,
                        seed: int) -> AffineFit:
    """Sample g at uniform sphere points and fit the affine family."""
    rng = make_rng(seed)
    pts = sample_uniform_sphere(g.dim, g.radius, rng, size=count)
    return fit_affine(pts, g(pts))


def fit_classical_poly(points, values) -> ClassicalPolyFit:
    """Fit A + B.v + C|v|^2 to free-space samples by least squares.

    Samples confined to a single sphere make |v|^2 collinear with the
    constant; the resulting rank deficiency is flagged rather than
    hidden, because it is exactly the sphere-constraint degeneracy.
    """
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    if points.ndim != 2 or points.shape[0] != values.shape[0]:
        raise ValueError("points must be (n, d) with matching values (n,)")
    n, d = points.shape
    if n < d + 2:
        raise ValueError(f"need at least {d + 2} samples, got {n}")
    sq = np.sum(points * points, axis=1, keepdims=True)
    design = np.concatenate([np.ones((n, 1)), points, sq], axis=1)
    coef, _, rank, _ = np.linalg.lstsq(design, values, rcond=RANK_RCOND)
    resid = design @ coef - values
    return ClassicalPolyFit(
        a=float(coef[0]),
        b=coef[1:-1].copy(),
        c=float(coef[-1]),
        rms_residual=float(np.sqrt(np.mean(resid ** 2))),
        samples=n,
        rank_deficient=bool(rank < d + 2),
    )


# ---------------------------------------------------------------------------
# Sampled-constraint nullspace analysis


@dataclass(frozen=True)
class KernelReport:
    """Singular spectrum of a sampled constraint matrix.

    ``kernel_dimension`` counts singular values at or below
    ``tol * max(sigma_max, sqrt(rows))``.  The sqrt(rows) floor handles
    the all-invariant case: when every basis function is invariant the
    whole spectrum is rounding noise and the plain relative rule would
    report an empty kernel for a matrix that is morally zero.  A basis
    with O(1) function values contributes singular values of order
    sqrt(rows) per unit of defect, which is what the floor encodes.
    """

    descriptors: tuple[str, ...]
    rows: int
    singular_values: np.ndarray
    kernel_dimension: int
    tol: float
    threshold: float


def build_constraint_matrix(basis: Sequence[SphericalFunction],
                            quadruples: CollisionQuadruple,
                            threads: int = 1) -> np.ndarray:
    """Matrix of defects: rows are quadruples, columns basis functions.

    An exact invariant in the span of the basis is an exact nullvector
    up to rounding.  ``threads`` caps worker threads for column
    evaluation; columns are independent and reassembled in order, so the
    result does not depend on the cap.
    """
    basis = list(basis)
    if not basis:
        raise ValueError("basis must not be empty")
    dims = {b.dim for b in basis}
    radii = {b.radius for b in basis}
    if len(dims) != 1 or len(radii) != 1:
        raise ValueError("basis functions must share dimension and radius")
    if basis[0].dim != quadruples.dim:
        raise ValueError(
            f"basis dimension {basis[0].dim} does not match quadruples "
            f"of dimension {quadruples.dim}")
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")

    def column(b):
        return np.atleast_1d(_raw_defects(b, quadruples)).ravel()

    if threads > 1 and len(basis) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cols = list(pool.map(column, basis))
    else:
        cols = [column(b) for b in basis]
    return np.stack(cols, axis=1)


def kernel_dimension(matrix: np.ndarray, tol: float,
                     descriptors: Sequence[str] = ()) -> KernelReport:
    """Numerical kernel of the constraint matrix by SVD."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    rows, cols = matrix.shape
    if rows < cols:
        raise ValueError(
            f"under-determined: {rows} constraint rows for {cols} basis "
            f"functions; sample at least {2 * cols} quadruples")
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must be in (0, 1), got {tol}")
    sigma = np.linalg.svd(matrix, compute_uv=False)
    threshold = tol * max(float(sigma[0]) if sigma.size else 0.0,
                          float(np.sqrt(rows)))
    kernel = int(np.sum(sigma <= threshold))
    return KernelReport(
        descriptors=tuple(descriptors),
        rows=rows,
        singular_values=sigma,
        kernel_dimension=kernel,
        tol=tol,
        threshold=threshold,
    )


# ---------------------------------------------------------------------------
# Circle even-part constancy


@dataclass(frozen=True)
class EvenPartReport:
    """Mean and worst-case spread of E(w) = g(w) + g(-w) on the circle."""

    a_hat: float
    max_deviation: float
    probes: int


def even_part_constancy(g: SphericalFunction, probes: int,
                        seed: int) -> EvenPartReport:
    """Probe E(w) = g(w) + g(-w) at uniform circle points.

    For a 2-D collision invariant E is a constant A; the report carries
    the empirical mean and the maximum deviation from it.  Higher
    dimensions are rejected: there the full affine fit applies.
    """
    if g.dim != 2:
        raise ValueError(
            f"even-part constancy is a circle test (d=2); g has d={g.dim}")
    if probes < 1:
        raise ValueError(f"probes must be >= 1, got {probes}")
    rng = make_rng(seed)
    pts = sample_uniform_sphere(2, g.radius, rng, size=probes)
    even = g(pts) + g(-pts)
    a_hat = float(even.mean())
    return EvenPartReport(
        a_hat=a_hat,
        max_deviation=float(np.max(np.abs(even - a_hat))),
        probes=probes,
    )


# ---------------------------------------------------------------------------
# Cauchy functional-equation machinery


@dataclass(frozen=True)
class AdditivityDefect:
    """Statistics of |h(x+y) - h(x) - h(y)| over tested pairs."""

    mean_abs: float
    max_abs: float
    count: int


@dataclass(frozen=True)
class CauchyFit:
    """Through-origin slope with additivity diagnostics.

    ``reliable`` is set when the observed additivity defect is at
    rounding scale relative to the sample magnitude; a large defect
    means the data are not additive and the slope is just a projection.
    """

    c: float
    defect_mean: float
    defect_max: float
    halfwidth: float
    triples: int
    reliable: bool


def cauchy_additivity_defect(h: Callable, pairs,
                             halfwidth: float) -> AdditivityDefect:
    """|h(x+y) - h(x) - h(y)| statistics over explicit (x, y) pairs."""
    if halfwidth <= 0.0:
        raise ValueError(f"halfwidth must be positive, got {halfwidth}")
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2 or pairs.shape[0] == 0:
        raise ValueError("pairs must be a nonempty (n, 2) array")
    x, y = pairs[:, 0], pairs[:, 1]
    slack = halfwidth + 1e-12
    if np.any(np.abs(x) > slack) or np.any(np.abs(y) > slack) \
            or np.any(np.abs(x + y) > slack):
        raise ValueError(
            f"pair outside the domain [-{halfwidth}, {halfwidth}] "
            "(x, y and x + y must all lie inside)")
    defect = np.abs(np.asarray(h(x + y), dtype=float)
                    - np.asarray(h(x), dtype=float)
                    - np.asarray(h(y), dtype=float))
    return AdditivityDefect(
        mean_abs=float(defect.mean()),
        max_abs=float(defect.max()),
        count=int(defect.size),
    )


_MAX_GRID_FOR_PAIRS = 200


def synthesize_additive_pairs(xs: np.ndarray):
    """(x_i, x_j) pairs from a sample grid whose sum is again on the grid.

    Sums are matched to grid values within 1e-12 relative, so defects
    can be computed from sample values alone, without re-evaluating h.
    Returns (pairs_idx_i, pairs_idx_j, sum_idx).
    """
    xs = np.asarray(xs, dtype=float)
    order = np.argsort(xs, kind="stable")
    sorted_xs = xs[order]
    take = order
    if len(order) > _MAX_GRID_FOR_PAIRS:
        stride = np.linspace(0, len(order) - 1, _MAX_GRID_FOR_PAIRS)
        take = order[np.unique(stride.astype(int))]
    i_idx, j_idx, k_idx = [], [], []
    for a in range(len(take)):
        sums = xs[take[a]] + xs[take[a:]]
        pos = np.searchsorted(sorted_xs, sums)
        for b, (target, p) in enumerate(zip(sums, pos)):
            tol = 1e-12 * (1.0 + abs(target))
            for cand in (p - 1, p):
                if 0 <= cand < len(sorted_xs) \
                        and abs(sorted_xs[cand] - target) <= tol:
                    i_idx.append(take[a])
                    j_idx.append(take[a + b])
                    k_idx.append(order[cand])
                    break
    return (np.array(i_idx, dtype=int), np.array(j_idx, dtype=int),
            np.array(k_idx, dtype=int))


def cauchy_fit(xs, hs, reliability_tol: float = DEFECT_TOL) -> CauchyFit:
    """Slope c = sum(x h) / sum(x^2) plus additivity diagnostics.

    The additivity defect is evaluated on pairs synthesized from the
    sample grid itself (sums that land back on the grid), using the
    sampled values only.
    """
    xs = np.asarray(xs, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if xs.ndim != 1 or xs.shape != hs.shape:
        raise ValueError("xs and hs must be matching one-dimensional arrays")
    if xs.size < 2 or np.all(xs == 0.0):
        raise ValueError(
            "need at least two samples with nonzero x to determine a slope")
    c = float(np.sum(xs * hs) / np.sum(xs * xs))
    i_idx, j_idx, k_idx = synthesize_additive_pairs(xs)
    if i_idx.size:
        defect = np.abs(hs[k_idx] - hs[i_idx] - hs[j_idx])
        mean_abs, max_abs = float(defect.mean()), float(defect.max())
        count = int(defect.size)
    else:
        mean_abs = max_abs = 0.0
        count = 0
    scale = 1.0 + float(np.max(np.abs(hs)))
    return CauchyFit(
        c=c,
        defect_mean=mean_abs,
        defect_max=max_abs,
        halfwidth=float(np.max(np.abs(xs))),
        triples=count,
        reliable=bool(count > 0 and max_abs <= reliability_tol * scale),
    )


# ---------------------------------------------------------------------------
# Reduction of a single-coordinate component to its scalar profile


def reduce_invariant_to_scalar(g: SphericalFunction, axis: int,
                               probes: int = 8, tol: float = 1e-9):
    """Extract h(x) with g(w) = h(w_axis) from a single-axis component.

    Requires g odd in coordinate ``axis`` and independent of the other
    coordinates on the sphere; both are verified by evaluating g at
    ``probes`` rotated positions of the complementary coordinates for a
    grid of axis values.  Violations raise `NotInvariantError`.  The
    returned callable maps x in [-R, R] to h(x), with h(0) = 0 exact.
    """
    if g.dim < 3:
        raise ValueError(
            "the scalar reduction needs d >= 3 (two free complementary "
            "coordinates); use the circle even-part test for d = 2")
    if not 1 <= axis <= g.dim:
        raise ValueError(f"axis must be in 1..{g.dim}, got {axis}")
    if probes < 2:
        raise ValueError(f"probes must be >= 2, got {probes}")
    r = g.radius
    others = [i for i in range(g.dim) if i != axis - 1]
    j1, j2 = others[0], others[1]

    def points_at(x, angle):
        x = np.asarray(x, dtype=float)
        pts = np.zeros(x.shape + (g.dim,))
        pts[..., axis - 1] = x
        rad = np.sqrt(np.maximum(r * r - x * x, 0.0))
        pts[..., j1] = rad * np.cos(angle)
        pts[..., j2] = rad * np.sin(angle)
        return pts

    # Verification grid: interior values, the poles, and zero.
    grid = np.concatenate([np.linspace(-r, r, 17), [0.0]])
    angles = 2.0 * np.pi * np.arange(probes) / probes
    table = np.stack([g(points_at(grid, ang)) for ang in angles])
    scale = 1.0 + float(np.max(np.abs(table)))
    spread = float(np.max(table.max(axis=0) - table.min(axis=0)))
    if spread > tol * scale:
        raise NotInvariantError(
            f"{g.descriptor!r} varies with the complementary coordinates "
            f"at fixed w{axis} (spread {spread:.3e}); it does not reduce "
            "to a scalar profile")
    # Oddness in the axis: h(-x) = -h(x); the first 17 grid values are a
    # symmetric linspace, so reversal negates the argument.
    sym = np.abs(table[0][:17] + table[0][:17][::-1])
    if float(np.max(sym)) > tol * scale:
        raise NotInvariantError(
            f"{g.descriptor!r} is not odd in w{axis} "
            f"(max |h(x)+h(-x)| = {float(np.max(sym)):.3e})")

    def h(x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > r + 1e-12):
            raise ValueError(f"argument outside [-{r}, {r}]")
        vals = g(points_at(np.clip(x, -r, r), 0.0))
        return np.where(x == 0.0, 0.0, vals)

    return h

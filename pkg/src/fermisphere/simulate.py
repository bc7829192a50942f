"""Ensemble relaxation under random sphere-preserving collisions.

The scheme applies one random binary collision per step: pick a
uniformly random unordered particle pair, collide it along a random
admissible direction, re-project both outputs to the sphere.  There is
no time variable and no cross-section; conservation and relaxation
statements are rate-independent, and this uniform-pair dynamics is one
consistent realization of the collision relation.

The circle is special: generic 2-D pairs admit only the identity or the
exchange, so an unpaired 2-D ensemble is frozen.  Nontrivial circle
dynamics need exactly antipodal pairs, which are kept as explicit state
(a partner table, partners stored as exact negations) rather than being
rediscovered within a tolerance.  A 2-D collision rotates one antipodal
pair to a uniformly random antipodal pair.

Randomness is consumed in a documented block pattern so runs are
reproducible: per advance segment, index draws then direction draws, in
blocks of at most `BLOCK` steps.  `collision_step` is exactly a
one-step segment; a loop of single steps therefore consumes the stream
differently from one long `run` (both are deterministic for a given
seed and schedule).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .basis import SphericalFunction
from .geometry import SPHERE_RTOL, make_rng, norm, sample_uniform_sphere

BLOCK = 8192

# A projected direction this much smaller than the Gaussian draw means
# the draw was essentially parallel to the midpoint; the step degrades
# to the identity collision rather than dividing by noise.
DEGENERATE_DIRECTION = 1e-6


class FrozenDynamicsError(RuntimeError):
    """2-D dynamics without antipodal pairing: every collision is trivial."""


@dataclass
class Ensemble:
    """N particles on the sphere plus the collision step counter.

    ``partners`` is the antipodal partner table and exists only for
    paired 2-D ensembles; partner pairs are exact negations at all
    times.  The ensemble owns its generator: advancing mutates both.
    """

    particles: np.ndarray
    radius: float
    step: int
    rng: np.random.Generator
    partners: np.ndarray | None = None
    seed: int | None = None
    distribution: str = "uniform"

    @property
    def dim(self) -> int:
        return self.particles.shape[1]

    @property
    def count(self) -> int:
        return self.particles.shape[0]

    def on_sphere_residual(self) -> float:
        sq = np.sum(self.particles ** 2, axis=1)
        return float(np.max(np.abs(sq - self.radius ** 2)))

    def pairing_residual(self) -> float:
        if self.partners is None:
            raise ValueError("ensemble has no partner table")
        return float(np.max(np.abs(self.particles
                                   + self.particles[self.partners])))

    def momentum(self) -> np.ndarray:
        return self.particles.sum(axis=0)


@dataclass(frozen=True)
class MomentSeries:
    """Recorded values of (1/N) sum_k g(w_k) at collision-step marks."""

    descriptor: str
    steps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.steps.shape != self.values.shape:
            raise ValueError("steps and values must align")

    @property
    def initial(self) -> float:
        return float(self.values[0])

    @property
    def final(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class RelaxationReport:
    """Drift summary of one moment series; no smoothing, no model."""

    descriptor: str
    initial: float
    final: float
    max_drift: float
    monotone: bool


def parse_distribution(spec: str, dim: int):
    """Parse an initialization spec string.

    Accepted: ``uniform``; ``cap:AXIS,ANGLE`` (particles within ANGLE of
    the +AXIS pole, uniform on that cap); ``antipodal-paired-cap:AXIS,
    ANGLE`` (2-D only: one particle of each pair in the cap, partner
    exactly opposite).  ANGLE is in radians, in (0, pi].
    """
    spec = spec.strip()
    if spec == "uniform":
        return ("uniform", None, None)
    for kind, tag in (("cap", "cap:"),
                      ("paired", "antipodal-paired-cap:")):
        if spec.startswith(tag):
            body = spec[len(tag):]
            parts = body.split(",")
            if len(parts) != 2:
                raise ValueError(
                    f"expected {tag}AXIS,ANGLE, got {spec!r}")
            try:
                axis = int(parts[0])
                angle = float(parts[1])
            except ValueError:
                raise ValueError(
                    f"expected {tag}AXIS,ANGLE with integer axis and "
                    f"real angle, got {spec!r}") from None
            if not 1 <= axis <= dim:
                raise ValueError(f"axis must be in 1..{dim}, got {axis}")
            if not 0.0 < angle <= np.pi:
                raise ValueError(
                    f"cap angle must be in (0, pi], got {angle}")
            if kind == "paired" and dim != 2:
                raise ValueError(
                    "antipodal-paired-cap initialization is specific to "
                    "dimension 2")
            return (kind, axis, angle)
    raise ValueError(
        f"unknown distribution {spec!r}; expected uniform, cap:AXIS,ANGLE "
        "or antipodal-paired-cap:AXIS,ANGLE")


def _sample_cap(dim, radius, count, axis, angle, rng):
    """Uniform points on the cap {angle to +axis pole <= angle}."""
    if dim == 2:
        # On the circle the cap is an angular interval; sample directly.
        base = 0.0 if axis == 1 else np.pi / 2.0
        phi = base + rng.uniform(-angle, angle, count)
        return radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    cos_min = np.cos(angle)
    out = np.empty((count, dim))
    filled = 0
    while filled < count:
        draw = sample_uniform_sphere(dim, radius, rng,
                                     size=max(4 * (count - filled), 256))
        keep = draw[draw[:, axis - 1] >= radius * cos_min]
        take = min(count - filled, len(keep))
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


def init_ensemble(dim: int, radius: float, count: int, distribution: str,
                  seed: int) -> Ensemble:
    """Draw N particles from the requested law; see `parse_distribution`."""
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    if count < 2:
        raise ValueError(f"need at least 2 particles, got {count}")
    kind, axis, angle = parse_distribution(distribution, dim)
    rng = make_rng(seed)
    partners = None
    if kind == "uniform":
        particles = sample_uniform_sphere(dim, radius, rng, size=count)
    elif kind == "cap":
        particles = _sample_cap(dim, radius, count, axis, angle, rng)
    else:
        if count % 2 != 0:
            raise ValueError(
                f"paired initialization needs an even particle count, "
                f"got {count}")
        half = _sample_cap(2, radius, count // 2, axis, angle, rng)
        particles = np.empty((count, 2))
        particles[0::2] = half
        particles[1::2] = -half
        partners = np.arange(count)
        partners[0::2] += 1
        partners[1::2] -= 1
    return Ensemble(particles=np.ascontiguousarray(particles),
                    radius=radius, step=0, rng=rng, partners=partners,
                    seed=seed, distribution=distribution)


@njit(cache=True)
def _advance_generic(parts, radius, idx_i, idx_j, gauss):
    n_steps = idx_i.shape[0]
    d = parts.shape[1]
    m = np.empty(d)
    v = np.empty(d)
    for k in range(n_steps):
        i = idx_i[k]
        j = idx_j[k]
        hh = 0.0
        mm = 0.0
        for c in range(d):
            m[c] = 0.5 * (parts[i, c] + parts[j, c])
            diff = parts[i, c] - parts[j, c]
            hh += diff * diff
            mm += m[c] * m[c]
        h = 0.5 * np.sqrt(hh)
        gg = 0.0
        for c in range(d):
            v[c] = gauss[k, c]
            gg += v[c] * v[c]
        gnorm = np.sqrt(gg)
        if mm > (1e-12 * (1.0 + np.sqrt(mm))) ** 2:
            # two projection passes onto the complement of m
            for _ in range(2):
                dot = 0.0
                for c in range(d):
                    dot += v[c] * m[c]
                dot /= mm
                for c in range(d):
                    v[c] -= dot * m[c]
        vv = 0.0
        for c in range(d):
            vv += v[c] * v[c]
        vnorm = np.sqrt(vv)
        if vnorm < DEGENERATE_DIRECTION * gnorm:
            continue  # degenerate draw: identity collision
        out_i_sq = 0.0
        out_j_sq = 0.0
        for c in range(d):
            nc = v[c] / vnorm
            a = m[c] + h * nc
            b = m[c] - h * nc
            parts[i, c] = a
            parts[j, c] = b
            out_i_sq += a * a
            out_j_sq += b * b
        scale_i = radius / np.sqrt(out_i_sq)
        scale_j = radius / np.sqrt(out_j_sq)
        for c in range(d):
            parts[i, c] *= scale_i
            parts[j, c] *= scale_j


@njit(cache=True)
def _advance_paired(parts, radius, pair_idx, angles):
    for k in range(pair_idx.shape[0]):
        p = 2 * pair_idx[k]
        x = radius * np.cos(angles[k])
        y = radius * np.sin(angles[k])
        parts[p, 0] = x
        parts[p, 1] = y
        parts[p + 1, 0] = -x
        parts[p + 1, 1] = -y


def _advance(ensemble: Ensemble, steps: int) -> None:
    """Advance ``steps`` collisions, consuming randomness blockwise."""
    if steps <= 0:
        return
    parts = ensemble.particles
    n = ensemble.count
    rng = ensemble.rng
    paired = ensemble.partners is not None
    if ensemble.dim == 2 and not paired:
        raise FrozenDynamicsError(
            "2-D dynamics without antipodal pairing are frozen: generic "
            "circle pairs admit only the identity and the exchange; "
            "initialize with antipodal-paired-cap")
    done = 0
    while done < steps:
        b = min(BLOCK, steps - done)
        if paired:
            pair_idx = rng.integers(0, n // 2, size=b)
            angles = rng.uniform(0.0, 2.0 * np.pi, size=b)
            _advance_paired(parts, ensemble.radius, pair_idx, angles)
        else:
            idx_i = rng.integers(0, n, size=b)
            idx_j = rng.integers(0, n - 1, size=b)
            idx_j = idx_j + (idx_j >= idx_i)
            gauss = rng.standard_normal((b, ensemble.dim))
            _advance_generic(parts, ensemble.radius, idx_i, idx_j, gauss)
        done += b
    ensemble.step += steps


def collision_step(ensemble: Ensemble) -> Ensemble:
    """Apply one random collision (a one-step advance segment)."""
    _advance(ensemble, 1)
    return ensemble


def evaluate_moments(ensemble: Ensemble,
                     moments: list[SphericalFunction]) -> np.ndarray:
    """(1/N) sum_k g(w_k) for each tracked g."""
    return np.array([float(np.mean(m(ensemble.particles)))
                     for m in moments])


def run(ensemble: Ensemble, steps: int, record_every: int,
        moments: list[SphericalFunction]) -> list[MomentSeries]:
    """Advance ``steps`` collisions, recording moments on a fixed schedule.

    Records at the starting step, after every ``record_every``
    collisions, and at the final step (which may close a partial
    segment).  Deterministic given the ensemble seed and the schedule.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every}")
    for m in moments:
        if m.dim != ensemble.dim:
            raise ValueError(
                f"moment {m.descriptor!r} has dimension {m.dim}, "
                f"ensemble has {ensemble.dim}")
    marks = [ensemble.step]
    rows = [evaluate_moments(ensemble, moments)]
    remaining = steps
    while remaining > 0:
        seg = min(record_every, remaining)
        _advance(ensemble, seg)
        remaining -= seg
        marks.append(ensemble.step)
        rows.append(evaluate_moments(ensemble, moments))
    table = np.array(rows)
    marks = np.array(marks)
    return [MomentSeries(m.descriptor, marks.copy(), table[:, k].copy())
            for k, m in enumerate(moments)]


def relaxation_report(series: MomentSeries) -> RelaxationReport:
    """Initial/final values, worst drift, and a strict-trend flag."""
    if series.values.size < 2:
        raise ValueError("need at least two recorded values")
    drift = float(np.max(np.abs(series.values - series.values[0])))
    diffs = np.diff(series.values)
    trending = bool((np.all(diffs <= 0.0) or np.all(diffs >= 0.0))
                    and series.final != series.initial)
    return RelaxationReport(
        descriptor=series.descriptor,
        initial=series.initial,
        final=series.final,
        max_drift=drift,
        monotone=trending,
    )

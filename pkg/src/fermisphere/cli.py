"""Command-line interface over the collision toolkit.

Subcommands: single-collision demos (collide), explicit quadruple
construction (quadruple), Monte Carlo invariance verdicts (defect),
nullspace analysis (kernel), least-squares fits (fit), additive-slope
fits (cauchy), ensemble simulation (simulate), and manifest replay
(replay).

Exit codes are a scripting contract: 0 = success / verdict pass,
1 = verdict fail, 2 = usage or data error.  Given the same options and
seed, every subcommand writes byte-identical artifacts; ``--threads``
caps worker threads without affecting any output byte.  A manifest
recording the effective options is written beside all artifacts, and
``replay MANIFEST`` reruns it exactly.

The default seed is 0, overridable per run with ``--seed`` or globally
with the environment variable FERMISPHERE_SEED.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .basis import analysis_basis, named_function
from .collisions import (
    CollisionPair,
    construct_quadruple,
    QuadrupleSeed,
    is_admissible_quantum,
    make_sampler,
    post_collision_quantum,
    sample_quantum_collision,
)
from .expr import EvaluationError, ExpressionError, to_spherical_function
from .geometry import make_rng, norm
from .invariants import (
    build_constraint_matrix,
    cauchy_fit,
    fit_affine,
    fit_classical_poly,
    kernel_dimension,
    mc_defect,
)
from .io import (
    format_float,
    json_text,
    read_manifest,
    read_table_csv,
    write_csv,
    write_json,
    write_manifest,
)
from .simulate import init_ensemble, parse_distribution, run

SEED_ENV = "FERMISPHERE_SEED"

# cmd_collide input handling: inputs within RENORM_SILENT of the sphere
# are accepted as-is (then tightened), within RENORM_WARN they are
# renormalized with a warning, beyond that the command refuses.
RENORM_SILENT = 1e-9
RENORM_WARN = 1e-6


class UsageError(ValueError):
    """Invalid flags or data; mapped to exit code 2."""


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(
            f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _parse_vector(text: str, dim: int, flag: str) -> np.ndarray:
    try:
        values = np.array([float(c) for c in text.split(",")])
    except ValueError:
        raise UsageError(
            f"{flag} must be comma-separated numbers, got {text!r}") from None
    if values.shape != (dim,):
        raise UsageError(
            f"{flag} must have {dim} components, got {values.size}")
    return values


def _format_point(p: np.ndarray) -> str:
    return "(" + ", ".join(format_float(c) for c in p) + ")"


def _sampler_kind_for_dim(dim: int) -> str:
    # The constructor populates three coordinates per point; beyond d = 3
    # it is mixed with generic pairs so no coordinate stays silent.
    if dim == 2:
        return "antipodal"
    if dim == 3:
        return "construct"
    return "mixed"


def _sphere_function(source: str, dim: int, radius: float):
    """Moment/expression token -> function on the sphere.

    Short names (``1``, ``cosK``/``sinK`` on the circle, ``Yl_m`` in
    d = 3) take precedence; anything else is parsed as an expression in
    w1..wd.
    """
    named = named_function(source, dim, radius)
    if named is not None:
        return named
    return to_spherical_function(source, dim, radius)


def _emit(args, report: dict, filename: str, subcommand: str,
          options: dict) -> None:
    """Print the JSON report; persist it plus a manifest when --out is set."""
    text = json_text(report)
    sys.stdout.write(text)
    out = getattr(args, "out", None)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / filename).write_text(text, encoding="utf-8")
        write_manifest(out, subcommand, options)


# ---------------------------------------------------------------------------
# collide


def cmd_collide(args) -> int:
    dim = args.dim
    if dim < 2:
        raise UsageError(f"dimension must be >= 2, got {dim}")
    radius = args.radius
    if radius <= 0.0:
        raise UsageError(f"radius must be positive, got {radius}")
    if args.n is not None and args.seed is not None:
        raise UsageError("give either --n or --seed, not both")

    def checked(text: str, flag: str) -> np.ndarray:
        w = _parse_vector(text, dim, flag)
        dev = abs(float(norm(w)) / radius - 1.0)
        if dev > RENORM_WARN:
            raise UsageError(
                f"{flag} is off the sphere by {dev:.3e} relative "
                f"(limit {RENORM_WARN:g})")
        if dev > RENORM_SILENT:
            _warn(f"{flag} off the sphere by {dev:.3e}; renormalizing")
        return w * (radius / float(norm(w)))

    omega = checked(args.omega, "--omega")
    omega_star = checked(args.omega_star, "--omega-star")
    pair = CollisionPair(omega, omega_star, radius)
    if args.n is not None:
        n = _parse_vector(args.n, dim, "--n")
        nn = float(norm(n))
        if nn == 0.0:
            raise UsageError("--n must be a nonzero direction")
        quad = post_collision_quantum(pair, n / nn)
    else:
        quad = sample_quantum_collision(pair, make_rng(_resolve_seed(args)))
    rep = is_admissible_quantum(quad, tol=args.tol)

    print(f"in   omega       = {_format_point(quad.in1)}")
    print(f"in   omega_star  = {_format_point(quad.in2)}")
    print(f"out  omega'      = {_format_point(quad.out1)}")
    print(f"out  omega_star' = {_format_point(quad.out2)}")
    print(f"momentum residual = {format_float(rep.momentum_residual)}")
    print(f"sphere residual   = {format_float(rep.sphere_residual)}")
    print(f"admissible (tol {args.tol:g}): {'yes' if rep.ok else 'no'}")

    out = getattr(args, "out", None)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "quadruple.json", {
            "dim": dim, "radius": radius,
            "in1": quad.in1, "in2": quad.in2,
            "out1": quad.out1, "out2": quad.out2,
            "momentum_residual": rep.momentum_residual,
            "sphere_residuals": list(rep.sphere_residuals),
            "admissible": rep.ok, "tol": args.tol,
        })
        options = {"dim": dim, "radius": radius, "omega": args.omega,
                   "omega_star": args.omega_star, "tol": args.tol}
        if args.n is not None:
            options["n"] = args.n
        else:
            options["seed"] = _resolve_seed(args)
        write_manifest(out, "collide", options)
    return 0


# ---------------------------------------------------------------------------
# quadruple


def cmd_quadruple(args) -> int:
    if args.dim < 3:
        raise UsageError(
            "the explicit construction needs dimension >= 3; on the circle "
            "only antipodal pairs move, so use the collide command with "
            "antipodal inputs instead")
    mismatch = (args.s + args.t) - (args.u + args.v)
    if abs(mismatch) > 1e-9:
        raise UsageError(
            f"seeds must satisfy s + t = u + v (mismatch {mismatch:.3e})")
    # Small mismatches are repaired exactly so downstream identities hold
    # to rounding rather than to the input slack.  Repairs at decimal
    # representation scale happen silently.
    v = (args.s + args.t) - args.u
    if abs(v - args.v) > 1e-12 * (1.0 + abs(v)):
        _warn(f"adjusted v from {args.v!r} to {v!r} to balance the sum")
    seed = QuadrupleSeed(args.s, args.t, args.u, v,
                         axis=args.axis, dim=args.dim)
    quad, trace = construct_quadruple(seed, radius=args.radius)
    rep = is_admissible_quantum(quad, tol=1e-9)

    degenerate = seed.canonical().s == seed.canonical().t
    print(f"in   omega       = {_format_point(quad.in1)}")
    print(f"in   omega_star  = {_format_point(quad.in2)}")
    print(f"out  omega'      = {_format_point(quad.out1)}")
    print(f"out  omega_star' = {_format_point(quad.out2)}")
    if degenerate:
        print("lambda = 1 (degenerate seed: s = t, repeated point)")
    else:
        print(f"lambda = {format_float(trace.lam)}")
    print(f"momentum residual = {format_float(rep.momentum_residual)}")
    print(f"sphere residual   = {format_float(rep.sphere_residual)}")

    out = getattr(args, "out", None)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "quadruple.json", {
            "dim": args.dim, "radius": args.radius, "axis": args.axis,
            "s": args.s, "t": args.t, "u": args.u, "v": v,
            "lambda": float(trace.lam), "degenerate": degenerate,
            "in1": quad.in1, "in2": quad.in2,
            "out1": quad.out1, "out2": quad.out2,
            "momentum_residual": rep.momentum_residual,
            "sphere_residuals": list(rep.sphere_residuals),
        })
        write_manifest(out, "quadruple", {
            "s": args.s, "t": args.t, "u": args.u, "v": args.v,
            "dim": args.dim, "axis": args.axis, "radius": args.radius,
        })
    return 0


# ---------------------------------------------------------------------------
# defect


def cmd_defect(args) -> int:
    if args.dim < 2:
        raise UsageError(f"dimension must be >= 2, got {args.dim}")
    if args.samples < 1:
        raise UsageError(f"samples must be >= 1, got {args.samples}")
    g = _sphere_function(args.g, args.dim, args.radius)
    kind = args.sampler or _sampler_kind_for_dim(args.dim)
    seed = _resolve_seed(args)
    sampler = make_sampler(kind, args.dim, args.radius)
    rep = mc_defect(g, args.samples, sampler, seed)
    invariant = rep.normalized_max <= args.threshold
    report = {
        "g": args.g,
        "dim": args.dim,
        "radius": args.radius,
        "samples": rep.samples,
        "sampler": kind,
        "seed": seed,
        "mean_abs": rep.mean_abs,
        "max_abs": rep.max_abs,
        "rms": rep.rms,
        "function_rms": rep.function_rms,
        "normalized_max": rep.normalized_max,
        "threshold": args.threshold,
        "verdict": "invariant" if invariant else "non-invariant",
    }
    options = {"g": args.g, "dim": args.dim, "radius": args.radius,
               "samples": args.samples, "sampler": kind, "seed": seed,
               "threshold": args.threshold}
    _emit(args, report, "report.json", "defect", options)
    return 0 if invariant else 1


# ---------------------------------------------------------------------------
# kernel


def cmd_kernel(args) -> int:
    if args.dim < 2:
        raise UsageError(f"dimension must be >= 2, got {args.dim}")
    if args.degree < 1:
        raise UsageError(f"degree must be >= 1, got {args.degree}")
    if args.samples < 1:
        raise UsageError(f"samples must be >= 1, got {args.samples}")
    seed = _resolve_seed(args)
    basis = analysis_basis(args.dim, args.degree, args.radius)
    kind = _sampler_kind_for_dim(args.dim)
    quads = make_sampler(kind, args.dim, args.radius)(
        args.samples, make_rng(seed))
    matrix = build_constraint_matrix(basis, quads, threads=args.threads)
    rep = kernel_dimension(matrix, args.tol,
                           descriptors=[b.descriptor for b in basis])
    report = {
        "dim": args.dim,
        "degree": args.degree,
        "radius": args.radius,
        "samples": args.samples,
        "sampler": kind,
        "seed": seed,
        "tol": args.tol,
        "threshold": rep.threshold,
        "rows": rep.rows,
        "basis": list(rep.descriptors),
        "singular_values": rep.singular_values,
        "kernel_dimension": rep.kernel_dimension,
    }
    options = {"dim": args.dim, "degree": args.degree, "radius": args.radius,
               "samples": args.samples, "seed": seed, "tol": args.tol}
    _emit(args, report, "report.json", "kernel", options)
    out = getattr(args, "out", None)
    if out is not None:
        write_csv(Path(out) / "spectrum.csv", ["index", "singular_value"],
                  [(k, sv) for k, sv in enumerate(rep.singular_values)])
    print(f"kernel dimension: {rep.kernel_dimension}")
    return 0


# ---------------------------------------------------------------------------
# fit


def cmd_fit(args) -> int:
    header, rows = read_table_csv(args.input, min_columns=2)
    points, values = rows[:, :-1], rows[:, -1]
    if args.classical:
        fit = fit_classical_poly(points, values)
        if fit.rank_deficient:
            _warn("rank-deficient fit: on a single sphere |v|^2 is "
                  "collinear with the constant, so A and C are not "
                  "separately determined")
        report = {
            "kind": "classical",
            "a": fit.a, "b": fit.b, "c": fit.c,
            "rms_residual": fit.rms_residual,
            "samples": fit.samples,
            "rank_deficient": fit.rank_deficient,
        }
    else:
        fit = fit_affine(points, values)
        if fit.rank_deficient:
            _warn("rank-deficient fit: the samples span a proper subsphere")
        report = {
            "kind": "affine",
            "a": fit.a, "b": fit.b,
            "rms_residual": fit.rms_residual,
            "samples": fit.samples,
            "rank_deficient": fit.rank_deficient,
        }
    options = {"input": str(args.input), "classical": bool(args.classical)}
    _emit(args, report, "fit.json", "fit", options)
    return 0


# ---------------------------------------------------------------------------
# cauchy


def cmd_cauchy(args) -> int:
    if args.a <= 0.0:
        raise UsageError(f"--a must be positive, got {args.a}")
    header, rows = read_table_csv(args.input, min_columns=2)
    if rows.shape[1] != 2:
        raise UsageError(
            f"{args.input}: expected two columns (x, h), "
            f"found {rows.shape[1]}")
    xs, hs = rows[:, 0], rows[:, 1]
    beyond = np.abs(xs) > args.a
    if np.any(beyond):
        raise UsageError(
            f"{args.input}: {int(beyond.sum())} samples outside "
            f"[-{args.a:g}, {args.a:g}]")
    fit = cauchy_fit(xs, hs, reliability_tol=args.reliability_tol)
    report = {
        "c": fit.c,
        "halfwidth": args.a,
        "defect_mean": fit.defect_mean,
        "defect_max": fit.defect_max,
        "triples": fit.triples,
        "reliability_tol": args.reliability_tol,
        "reliable": fit.reliable,
    }
    options = {"input": str(args.input), "a": args.a,
               "reliability_tol": args.reliability_tol}
    _emit(args, report, "fit.json", "cauchy", options)
    return 0 if fit.reliable else 1


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    kind, _, _ = parse_distribution(args.init, args.dim)
    if args.dim == 2 and kind != "paired":
        raise UsageError(
            "2-D dynamics are frozen without antipodal pairing: generic "
            "circle pairs only permit the identity or the exchange, so no "
            "moment can move; initialize with antipodal-paired-cap:AXIS,"
            "ANGLE instead")
    tokens = [tok.strip() for tok in args.moments.split(",") if tok.strip()]
    if not tokens:
        raise UsageError("--moments must name at least one function")
    moments = [_sphere_function(tok, args.dim, args.radius)
               for tok in tokens]
    seed = _resolve_seed(args)
    ensemble = init_ensemble(args.dim, args.radius, args.particles,
                             args.init, seed)
    series = run(ensemble, args.steps, args.record_every, moments)

    tol = args.conservation_tol
    for s in series:
        drift = float(np.max(np.abs(s.values - s.values[0])))
        held = drift <= tol * (1.0 + abs(s.initial))
        print(f"{s.descriptor}: initial={format_float(s.initial)} "
              f"final={format_float(s.final)} "
              f"max_drift={format_float(drift)} "
              f"conserved(tol {tol:g}): {'yes' if held else 'no'}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    marks = series[0].steps
    columns = [s.values for s in series]
    write_csv(out / "series.csv",
              ["step"] + [s.descriptor for s in series],
              [(int(marks[r]), *(col[r] for col in columns))
               for r in range(len(marks))])
    write_manifest(out, "simulate", {
        "dim": args.dim, "radius": args.radius,
        "particles": args.particles, "steps": args.steps,
        "record_every": args.record_every, "init": args.init,
        "moments": args.moments, "seed": seed,
        "conservation_tol": tol,
    })
    return 0


# ---------------------------------------------------------------------------
# replay


def cmd_replay(args) -> int:
    manifest = read_manifest(args.manifest)
    sub = manifest["subcommand"]
    if sub == "replay":
        raise UsageError("refusing to replay a replay manifest")
    argv = [sub]
    for key, value in manifest["options"].items():
        flag = "--" + str(key).replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        else:
            argv.extend([flag, str(value)])
    if args.out is not None:
        argv.extend(["--out", str(args.out)])
    if args.threads is not None:
        argv.extend(["--threads", str(args.threads)])
    return main(argv)


# ---------------------------------------------------------------------------
# parser assembly


def _add_seed(p):
    p.add_argument("--seed", type=int, default=None,
                   help=f"RNG seed (default: ${SEED_ENV} or 0)")


def _add_out(p):
    p.add_argument("--out", type=Path, default=None, metavar="DIR",
                   help="directory for artifacts and the run manifest")


def _add_threads(p):
    p.add_argument("--threads", type=int, default=1,
                   help="worker-thread cap; never affects output bytes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fermisphere",
        description="Collision invariants on the Fermi sphere: kinematics, "
                    "Monte Carlo defect analysis, nullspace computations, "
                    "and ensemble relaxation runs.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="SUBCOMMAND")

    p = sub.add_parser("collide",
                       help="collide one pair and print the quadruple")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--omega", required=True, metavar="X1,...,XD")
    p.add_argument("--omega-star", required=True, metavar="X1,...,XD")
    p.add_argument("--n", default=None, metavar="X1,...,XD",
                   help="collision direction; random when omitted")
    p.add_argument("--tol", type=float, default=1e-9,
                   help="admissibility tolerance echoed in the output")
    _add_seed(p)
    _add_out(p)
    p.set_defaults(func=cmd_collide)

    p = sub.add_parser("quadruple",
                       help="explicit quadruple from scalar seeds (d >= 3)")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--axis", type=int, default=1)
    p.add_argument("--radius", type=float, default=1.0)
    _add_out(p)
    p.set_defaults(func=cmd_quadruple)

    p = sub.add_parser("defect",
                       help="Monte Carlo invariance verdict for an "
                            "expression")
    p.add_argument("--g", required=True, metavar="EXPR")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--sampler", choices=["pairs", "construct", "antipodal",
                                         "mixed"], default=None,
                   help="quadruple sampler (default chosen by dimension)")
    p.add_argument("--threshold", type=float, default=1e-8,
                   help="invariant verdict bound on the normalized max "
                        "defect")
    _add_seed(p)
    _add_out(p)
    _add_threads(p)
    p.set_defaults(func=cmd_defect)

    p = sub.add_parser("kernel",
                       help="numerical nullspace of the sampled constraint "
                            "operator")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6,
                   help="relative singular-value cutoff")
    _add_seed(p)
    _add_out(p)
    _add_threads(p)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("fit",
                       help="least-squares invariant-family fit to CSV "
                            "samples")
    p.add_argument("--input", type=Path, required=True, metavar="CSV",
                   help="header row, d coordinate columns, one value column")
    p.add_argument("--classical", action="store_true",
                   help="fit A + B.v + C|v|^2 instead of A + B.w")
    _add_out(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cauchy",
                       help="additive-slope fit h(x) = c x with defect "
                            "diagnostics")
    p.add_argument("--input", type=Path, required=True, metavar="CSV",
                   help="header row, columns x and h")
    p.add_argument("--a", type=float, default=1.0,
                   help="domain halfwidth; samples must lie in [-a, a]")
    p.add_argument("--reliability-tol", type=float, default=1e-8)
    _add_out(p)
    p.set_defaults(func=cmd_cauchy)

    p = sub.add_parser("simulate",
                       help="random-collision ensemble run with moment "
                            "tracking")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--particles", type=int, default=1000)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--record-every", type=int, default=1000)
    p.add_argument("--init", default="uniform",
                   metavar="uniform|cap:AXIS,ANGLE|antipodal-paired-cap:"
                           "AXIS,ANGLE")
    p.add_argument("--moments", default="1",
                   help="comma-separated expressions or named functions")
    p.add_argument("--conservation-tol", type=float, default=1e-9,
                   help="relative drift bound echoed per moment")
    _add_seed(p)
    p.add_argument("--out", type=Path, required=True, metavar="DIR",
                   help="directory for series.csv and the manifest")
    _add_threads(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay",
                       help="rerun a subcommand exactly from its manifest")
    p.add_argument("manifest", type=Path)
    _add_out(p)
    p.add_argument("--threads", type=int, default=None,
                   help="worker-thread cap for the replayed run")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ExpressionError, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FloatingPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()

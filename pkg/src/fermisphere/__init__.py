"""Collision invariants on the Fermi sphere.

Numerical toolkit for sphere-preserving binary collisions: exact
kinematics and explicit quadruple construction, Monte Carlo defect
statistics, nullspace analysis of the sampled constraint operator,
additive (Cauchy) slope fits, and a random-collision ensemble
simulator, all seeded and reproducible.
"""

__version__ = "0.1.0"

from .basis import (
    SphericalFunction,
    affine_function,
    analysis_basis,
    constant_function,
    coordinate_function,
    fourier_basis,
    fourier_mode,
    harmonic_basis,
    monomial,
    monomial_basis,
    named_function,
    real_harmonic,
)
from .collisions import (
    AdmissibilityReport,
    ClassicalQuadruple,
    CollisionPair,
    CollisionQuadruple,
    ConstructionTrace,
    DegenerateSeedError,
    QuadrupleSeed,
    UnsupportedDimensionError,
    construct_quadruple,
    construct_quadruples,
    is_admissible_classical,
    is_admissible_quantum,
    lambda_parameter,
    make_sampler,
    post_collision_classical,
    post_collision_quantum,
    sample_quantum_collision,
    sign_flip,
)
from .expr import (
    EvaluationError,
    Expression,
    ExpressionError,
    parse,
    to_scalar_function,
    to_spherical_function,
)
from .geometry import (
    make_rng,
    norm,
    renormalize,
    sample_orthogonal_direction,
    sample_uniform_sphere,
    split_rng,
)
from .invariants import (
    AffineFit,
    CauchyFit,
    ClassicalPolyFit,
    DefectReport,
    EvenPartReport,
    KernelReport,
    NotInvariantError,
    ParityIndex,
    build_constraint_matrix,
    cauchy_additivity_defect,
    cauchy_fit,
    defect_on_quadruple,
    even_part_constancy,
    fit_affine,
    fit_affine_function,
    fit_classical_poly,
    kernel_dimension,
    mc_classical_defect,
    mc_defect,
    parity_component,
    parity_decompose,
    reduce_invariant_to_scalar,
)
from .simulate import (
    Ensemble,
    FrozenDynamicsError,
    MomentSeries,
    RelaxationReport,
    collision_step,
    init_ensemble,
    relaxation_report,
    run,
)

__all__ = [name for name in dir() if not name.startswith("_")]

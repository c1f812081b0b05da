"""Solvers and benchmarks for variational inclusions 0 in A(u) + M(u).

The inclusion is solved through the resolvent (H + lam*M)^{-1}, which turns
it into the fixed-point equation x = F(x) with F(x) = R[H x - lam*A x].
Four iterative schemes, their contraction/feasibility analysis and a
convergence-rate comparison harness are provided, all verified numerically
on problems with known solutions.
"""

from .analysis import (
    boundary_sharpness,
    contraction_factor,
    envelope_fh,
    envelope_new,
    equivalence_audit,
    feasible_lambda,
    kappa_scan,
    rate_compare,
)
from .operators import (
    AffineLinear,
    DiagonalNonlinear,
    InconsistentConstantsError,
    LinearMonotone,
    OperatorConstants,
    ScaledIdentity,
    ScaledIdentityMulti,
    ShiftedSubdifferential,
    UnsupportedOperatorError,
    catalog_constants,
    validate_constants,
)
from .problems import gen_scalar_affine, gen_soft_threshold, gen_spd_linear
from .resolvent import ResolventDivergenceError, ResolventEngine, resolvent_lipschitz_bound
from .schemes import (
    IterationTrace,
    ProblemInstance,
    StepSequence,
    StoppingRule,
    f_map,
    make_step_sequence,
    run_fh,
    run_mann,
    run_new,
    run_zgy,
)
from .space import DimensionMismatchError, as_vector, combine, inner, norm

__version__ = "0.1.0"

"""
Conjugate harmonic pairs in three dimensions by P1 finite elements.

Given a field ``w`` with unit gradient, a pair ``(u, v)`` is conjugate when
``grad u = grad v ^ grad w`` and ``grad v = grad w ^ grad u``. The package
builds meshes of the cube and ball, assembles the stiffness and determinant
coupling forms, computes pairs by alternating conjugate solves, checks the
pointwise identities, and assembles discrete Dirichlet-to-Neumann maps for
conductivity experiments.
"""

import os

# CONJPAIR_THREADS caps BLAS workers; it has to be set before numpy loads.
_threads = os.environ.get("CONJPAIR_THREADS", "")
if _threads.isdigit() and int(_threads) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[_var] = _threads

from .dtn import DtnMatrix, assemble_dtn, dtn_distance, dtn_experiment, harmonic_extension  # noqa: E402
from .errors import (  # noqa: E402
    BoundViolationError,
    CompatibilityError,
    ConjPairError,
    DegenerateFieldError,
    DimensionError,
    DomainError,
    IncompatibilityError,
    InvalidParameterError,
    InvalidSpecError,
    NonConvergenceError,
    SizeError,
)
from .fields import (  # noqa: E402
    ConstantGamma,
    Coordinate,
    DistToAxis,
    DistToPoint,
    GradNormGamma,
    InclusionGamma,
    Nodal,
    make_gamma,
    sample_w,
    unitarity_report,
)
from .forms import (  # noqa: E402
    assemble_cross_load,
    assemble_det_form,
    assemble_stiffness,
    assemble_vector_load,
    det_integral,
    weak_divergence_residual,
)
from .mesh import Domain, Mesh, build_ball_mesh, build_cube_mesh, build_mesh, element_gradients  # noqa: E402
from .solver import (  # noqa: E402
    PairSolveReport,
    SolverConfig,
    alternating_pair_solve,
    conjugate_of,
    dense_eig_oracle,
    dual_conjugate_of,
    solve_in_hw,
    solve_neumann,
)
from .verify import (  # noqa: E402
    ExponentTriple,
    ResidualReport,
    boundary_tangential_residual,
    convergence_study,
    orthobasis_check,
    relaxed_cr_check,
    residual_report,
    vector_identity_checks,
)

__version__ = "0.1.0"

__all__ = [
    "BoundViolationError",
    "CompatibilityError",
    "ConjPairError",
    "ConstantGamma",
    "Coordinate",
    "DegenerateFieldError",
    "DimensionError",
    "DistToAxis",
    "DistToPoint",
    "Domain",
    "DomainError",
    "DtnMatrix",
    "ExponentTriple",
    "GradNormGamma",
    "InclusionGamma",
    "IncompatibilityError",
    "InvalidParameterError",
    "InvalidSpecError",
    "Mesh",
    "Nodal",
    "NonConvergenceError",
    "PairSolveReport",
    "ResidualReport",
    "SizeError",
    "SolverConfig",
    "alternating_pair_solve",
    "assemble_cross_load",
    "assemble_det_form",
    "assemble_dtn",
    "assemble_stiffness",
    "assemble_vector_load",
    "boundary_tangential_residual",
    "build_ball_mesh",
    "build_cube_mesh",
    "build_mesh",
    "conjugate_of",
    "convergence_study",
    "dense_eig_oracle",
    "det_integral",
    "dtn_distance",
    "dtn_experiment",
    "dual_conjugate_of",
    "element_gradients",
    "harmonic_extension",
    "make_gamma",
    "orthobasis_check",
    "relaxed_cr_check",
    "residual_report",
    "sample_w",
    "solve_in_hw",
    "solve_neumann",
    "unitarity_report",
    "vector_identity_checks",
    "weak_divergence_residual",
]

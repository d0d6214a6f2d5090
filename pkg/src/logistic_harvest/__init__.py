"""Finite-element study of the logistic equation with sublinear boundary harvesting.

    -Lap u = u - u^p in Omega,   du/dnu = -lam u^q on the boundary,

with p > 1 and 0 < q < 1.
"""
__version__ = "0.1.0"

from .assembly import (
    Field,
    OperatorSet,
    ProblemParams,
    assemble_operators,
    jacobian,
    residual,
)
from .continuation import (
    Branch,
    BranchPoint,
    FoldEvent,
    continue_arclength,
    continue_natural,
    detect_lambda_bar,
    start_point,
    tag_stability,
)
from .diagnostics import (
    decompose,
    energy,
    energy_identity_residual,
    energy_inequality_report,
    h1_norm,
    lambda0_rescaled_probe,
    profile_distance,
    rescaled_residual,
)
from .eigen import (
    EigenPair,
    dirichlet_gamma1,
    dirichlet_principal,
    linearized_gamma1,
    solve_sym_gen_smallest,
)
from .errors import InvalidArgumentError, NumericalFailure
from .mesh import Mesh, build_interval, build_mesh, build_rectangle
from .parabolic import EvolutionConfig, Trajectory, basin_scan, evolve
from .steady import (
    MonotoneConfig,
    SolveReport,
    build_subsolution_phi_eps,
    build_supersolution_psi,
    classify_beta,
    monotone_iterate,
    newton_solve,
    solve_dirichlet_logistic,
    verify_subsolution,
    verify_supersolution,
)

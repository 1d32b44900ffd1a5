"""Joint informativity analysis and data-driven solution of Lyapunov equations.

Given a fragment of one state trajectory of ``xdot = A x`` and prior
knowledge about the unknown ``A``, this package decides whether the pair
determines the solution of ``A P + P A^T = -Q`` uniquely, and computes that
solution directly from the pair when it does, without identifying ``A``.
"""

__version__ = "0.1.0"

from .informativity import (
    InformativityVerdict,
    Verdict,
    check_informativity,
    check_informativity_structured,
    check_informativity_subspace,
    common_lyapunov_kernel,
)
from .instance import (
    InstanceError,
    ProblemInstance,
    Tolerances,
    load_instance,
    parse_instance,
    resolve_dataset,
)
from .lyapcore import (
    LyapunovRegularityError,
    SpectralGap,
    is_lyapunov_regular,
    solve_lyapunov,
    spectral_gap,
)
from .matspace import (
    AffineMatrixSet,
    MatrixSubspace,
    affine_intersect,
    column_space_basis,
    kernel_basis,
    kron_sum_operator,
    solve_affine_system,
    unvec,
    vec,
)
from .oracle import (
    DegenerateSetError,
    OracleResult,
    WitnessPair,
    brute_force_informative,
    crosscheck_verdict,
    sample_consistent,
)
from .solver import (
    NoRegularMemberError,
    ReducedRankError,
    ReducedResidualError,
    ReducedSolution,
    SolutionIntegrityError,
    pick_regular_member,
    reduced_operator,
    solve_from_data,
    solve_reduced,
)
from .sysmodel import (
    BoundedAffinePrior,
    Dataset,
    InconsistentDataError,
    PriorKnowledge,
    PriorValidation,
    SubspaceActionPrior,
    UnconstrainedPrior,
    consistent_set,
    data_consistent_set,
    effective_rank_tol,
    prior_affine_hull,
    validate_prior,
)
from .trajgen import estimate_derivatives, matrix_exponential, simulate_trajectory

__all__ = [
    "__version__",
    # matspace
    "AffineMatrixSet", "MatrixSubspace", "affine_intersect", "column_space_basis",
    "kernel_basis", "kron_sum_operator", "solve_affine_system", "unvec", "vec",
    # lyapcore
    "LyapunovRegularityError", "SpectralGap", "is_lyapunov_regular",
    "solve_lyapunov", "spectral_gap",
    # sysmodel
    "BoundedAffinePrior", "Dataset", "InconsistentDataError", "PriorKnowledge",
    "PriorValidation", "SubspaceActionPrior", "UnconstrainedPrior",
    "consistent_set", "data_consistent_set", "effective_rank_tol",
    "prior_affine_hull", "validate_prior",
    # trajgen
    "estimate_derivatives", "matrix_exponential", "simulate_trajectory",
    # informativity
    "InformativityVerdict", "Verdict", "check_informativity",
    "check_informativity_structured", "check_informativity_subspace",
    "common_lyapunov_kernel",
    # solver
    "NoRegularMemberError", "ReducedRankError", "ReducedResidualError",
    "ReducedSolution", "SolutionIntegrityError", "pick_regular_member",
    "reduced_operator", "solve_from_data", "solve_reduced",
    # oracle
    "DegenerateSetError", "OracleResult", "WitnessPair",
    "brute_force_informative", "crosscheck_verdict", "sample_consistent",
    # instance
    "InstanceError", "ProblemInstance", "Tolerances", "load_instance",
    "parse_instance", "resolve_dataset",
]

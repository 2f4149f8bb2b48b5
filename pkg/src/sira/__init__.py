"""Inner-outer sparse eigensolvers targeting the eigenvalue nearest a shift."""

from .dense import RitzSet, orthonormalize_against, rayleigh_update, small_eig, subspace_sine
from .errors import (
    ConfigError,
    ConvergenceError,
    DimensionError,
    MalformedInputError,
    NearSingularProjection,
    SiraError,
    SubspaceBreakdown,
    ZeroPivotError,
)
from .krylov import InnerSolveReport, LinearOperator, gmres_right, jd_projected_operator
from .outer import (
    ConvergenceRecord,
    InnerConfig,
    OuterConfig,
    compute_inner_tol,
    relaxed_sia_tol,
    run_restarted,
    run_solver,
    solve,
)
from .precond import IlutFactors, ProjectedPreconditioner, ilut_factor, precond_solve, projected_precond_solve
from .sparse import ShiftedOperator, SparseMatrix, mm_load, one_norm, spmv

__version__ = "0.1.0"

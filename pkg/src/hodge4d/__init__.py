"""hodge4d: space-time finite element solver for periodic steady-state
scalar/vector potentials on structured 4D tensor-product meshes."""

from .mesh import Mesh4, build_mesh, classify_boundary, entity_count
from .elements import (
    LocalMatrices,
    QuadratureRule,
    apply_D1_ref,
    eval_basis_edge,
    eval_basis_node,
    gauss_rule,
    local_matrices,
)
from .dofs import (
    DofMap,
    FormVector,
    HarmonicReport,
    assemble_D0,
    assemble_D1,
    build_dofmap,
    cell_averages,
    harmonic_diagnostics,
)
from .assembly import (
    SaddleSystem,
    assemble_constraint,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    build_system,
    reduce_with_bc,
)
from .solvers import (
    AhaParams,
    DivergedError,
    SolveResult,
    arrow_hurwicz,
    krylov_reference,
    mixed_full_solve,
    solve,
)
from .scenarios import (
    ConvergenceRecord,
    Example2Config,
    convergence_study,
    error_norm,
    example1_exact,
    example1_source,
    example2_setup,
)

__version__ = "0.1.0"

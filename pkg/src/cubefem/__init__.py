"""Linear finite elements on a structured tetrahedral cube mesh.

The mesh splits prism columns over a quadrant-patterned triangulation of
the unit square; on it, the P1 finite element method is entrywise identical
to a weighted seven-point difference scheme whose single off-unit weight
(2/3 on the center column) makes the maximum-norm error grow like
h^2 ln(1/h) instead of h^2.  The package builds and validates the mesh,
verifies the identity, and reproduces the error growth numerically.
"""

from .fdschemes import (
    CENTER_WEIGHT,
    apply_fd_operator,
    barrier_field,
    build_fd_system,
    greens_function,
    node_weight,
    sine_eigenvalue,
    solve_helmholtz_2d,
    solve_poisson_2d,
    solve_weighted_poisson_2d,
)
from .fem import (
    assemble_load_exact,
    assemble_load_lumped,
    assemble_stiffness,
    local_prism_stiffness,
    prism_stiffness_edge_formula,
    stencil_equivalence,
)
from .grids import GridFn2D, GridFn3D
from .linsys import SolverError, SparseSpd, export_system, read_system
from .mesh import (
    METHOD_A,
    METHOD_B,
    TetMesh3D,
    TriMesh2D,
    build_tet_mesh,
    build_tri_mesh,
    check_conformity,
    flip_prism,
    node_tet_count,
    read_mesh,
    split_prisms,
    write_mesh,
)
from .solve import IterationReport, solve_cg, solve_direct_small, solve_sine_fast, solve_sine_fast_rhs
from .study import (
    ManufacturedSolution,
    StudyReport,
    default_manufactured,
    run_control_study,
    run_cross_section_study,
    run_green_study,
    run_lower_bound_study,
    run_noquad_study,
    run_separability_study,
)

__version__ = "0.1.0"

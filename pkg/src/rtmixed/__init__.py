"""Mixed Raviart-Thomas finite elements for nonlinear parabolic equations.

A solver library and CLI for the linearized backward-Euler mixed scheme on
structured simplicial meshes, plus an analysis toolkit for broken-norm and
discrete-embedding studies and manufactured-solution convergence tables.
"""

from .analysis import (
    ConvergenceReport,
    StudyRecord,
    chain_inequality,
    convergence_orders,
    dg_norm,
    embedding_study,
    l2_error,
    lp_norm,
)
from .assembly import (
    NonlinearitySpec,
    SaddleSystem,
    assemble_nonlinear_load,
    assemble_saddle,
    assemble_source,
)
from .errors import (
    DivergenceError,
    MeshIntegrityError,
    NumericalDegeneracyError,
    SolverError,
    UnsupportedDegreeError,
)
from .local_projection import LocalProjectionData, local_rt_project, local_stability_ratio
from .mesh import (
    CellGeometry,
    Face,
    SimplicialMesh,
    build_unit_cube_mesh,
    build_unit_square_mesh,
    cell_geometry,
)
from .projection import ExactSolutionSpec, elliptic_project, initial_data
from .quadrature import QuadratureRule, integrate_on_cell, simplex_rule
from .solver import Factorization, factor, solve
from .spaces import (
    DgSpace,
    DiscreteField,
    RtSpace,
    build_dg_space,
    build_rt_space,
    evaluate_field,
    evaluate_rt_basis,
    rt_local_dim,
)
from .timestepper import RunConfig, TimeStepState, run, step

__version__ = "0.1.0"

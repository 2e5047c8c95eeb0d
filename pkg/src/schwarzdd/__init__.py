"""Fully algebraic two-level Schwarz preconditioning for sparse linear systems."""

from .coarse import CoarseSpace, LocalEigenSelection, assemble_coarse, bound_rhs, kernel_basis, solve_local_gevp
from .driver import ProblemSpec, RunRecord, SolverConfig, emit_table, run
from .krylov import SolveReport, estimate_condition, gmres
from .mmio import read_matrix_market, write_matrix_market
from .partition import (
    AdjacencyGraph,
    OverlapLayout,
    build_graph,
    coloring_and_multiplicity,
    extend_overlap,
    import_partition,
    partition_graph,
)
from .problems import generate_convdiff2d, generate_laplacian1d, generate_laplacian2d
from .schwarz import SchwarzPreconditioner, setup
from .sparse import SparseMatrix, extract_submatrix, hermitian_transpose_pattern, spmv
from .splitting import LocalSplitting, build_local_splitting, verify_hpsd_splitting

__version__ = "0.1.0"

__all__ = [
    "AdjacencyGraph",
    "CoarseSpace",
    "LocalEigenSelection",
    "LocalSplitting",
    "OverlapLayout",
    "ProblemSpec",
    "RunRecord",
    "SchwarzPreconditioner",
    "SolveReport",
    "SolverConfig",
    "SparseMatrix",
    "assemble_coarse",
    "bound_rhs",
    "build_graph",
    "build_local_splitting",
    "coloring_and_multiplicity",
    "emit_table",
    "estimate_condition",
    "extend_overlap",
    "extract_submatrix",
    "generate_convdiff2d",
    "generate_laplacian1d",
    "generate_laplacian2d",
    "gmres",
    "hermitian_transpose_pattern",
    "import_partition",
    "kernel_basis",
    "partition_graph",
    "read_matrix_market",
    "run",
    "setup",
    "solve_local_gevp",
    "spmv",
    "verify_hpsd_splitting",
    "write_matrix_market",
]

"""Well-balanced flux-globalization central-upwind solvers for 1-D
nonconservative balance laws, with second-order and fifth-order (A-WENO)
spatial discretizations, instantiated for nozzle flow and the two-layer
shallow water equations."""

__version__ = "0.1.0"

from .assembly import Scheme, accumulate_global_flux, aweno_flux, cell_bracket, path_bracket, pccu_flux
from .grid import BoundarySpec, Grid, apply_boundary, build_grid, extend_geometry
from .systems import (
    EquilibriumSolveError,
    NozzleModel,
    NozzleParams,
    TwoLayerModel,
    TwoLayerParams,
    VacuumStateError,
)
from .timestepping import TimeControls, compute_dt, evolve, ssp_rk3_step

__all__ = [
    "Scheme",
    "Grid",
    "BoundarySpec",
    "build_grid",
    "apply_boundary",
    "extend_geometry",
    "NozzleModel",
    "NozzleParams",
    "TwoLayerModel",
    "TwoLayerParams",
    "VacuumStateError",
    "EquilibriumSolveError",
    "TimeControls",
    "compute_dt",
    "evolve",
    "ssp_rk3_step",
    "pccu_flux",
    "aweno_flux",
    "path_bracket",
    "cell_bracket",
    "accumulate_global_flux",
    "__version__",
]

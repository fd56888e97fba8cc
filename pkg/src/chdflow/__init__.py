"""Compact Hermite difference solver for convection-diffusion systems and
double-diffusive cavity convection."""

from .compact import (Axis, BoundaryTreatment, LineError, SchemeOrder,
                      ZeroPivotError, ccd_first_derivative_line,
                      field_derivative, recover_velocity,
                      solve_cyclic_tridiagonal, solve_tridiagonal)
from .grid import (ConservedState, Grid, GridError, PhysicalParams,
                   ScalarField, error_norms, make_grid, observed_order)
from .poisson import (PoissonResult, PoissonSettings, PoissonStrategy,
                      compact_poisson_residual, solve_stream_function, sor_sweep)
from .timestepping import RhsEvaluation, assemble_rhs, choose_dt, rk3_step
from .ddc import (DdcConfig, RunResult, SolverError, WallScalar,
                  apply_scalar_wall_bc, apply_vorticity_bc, initialize,
                  nusselt_sherwood, run, source_term)

__all__ = [name for name in dir() if not name.startswith("_")]

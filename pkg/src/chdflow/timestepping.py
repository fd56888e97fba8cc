"""Right-hand-side assembly for the coupled system and the explicit RK3 update."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .compact import BoundaryTreatment, SchemeOrder
from .grid import ConservedState, PhysicalParams, ScalarField
from .hermite import (ALPHA_FLOOR, diffusion_term_lines, flux_divergence_lines,
                      global_splitting_speed)


@dataclass
class RhsEvaluation:
    """dU/dt at interior nodes; wall entries are exactly zero."""

    d_omega: ScalarField
    d_temperature: ScalarField
    d_concentration: ScalarField


def _zero_walls(a: np.ndarray) -> np.ndarray:
    a[0, :] = a[-1, :] = 0.0
    a[:, 0] = a[:, -1] = 0.0
    return a


def assemble_rhs(state: ConservedState, params: PhysicalParams,
                 order: SchemeOrder) -> RhsEvaluation:
    """Convective + diffusive + buoyancy terms of the cavity system.

    Fluxes are u*q and v*q per component with global per-axis split speeds;
    diffusion acts on (Pr*omega, T, C/Le); the buoyancy source feeds the
    vorticity component only.  Walls are never evolved.  The three components
    ride through the line operators side by side as one batch.
    """
    from .ddc import source_term  # deferred: ddc builds on this module

    g = state.grid
    bc = BoundaryTreatment.ONE_SIDED
    u, v = state.u.values, state.v.values
    ax = max(global_splitting_speed(state.u), ALPHA_FLOOR)
    ay = max(global_splitting_speed(state.v), ALPHA_FLOOR)
    nxp, nyp = g.shape

    q3 = np.concatenate([state.omega.values, state.temperature.values,
                         state.concentration.values], axis=1)
    h3 = np.concatenate([params.prandtl * state.omega.values,
                         state.temperature.values,
                         state.concentration.values / params.lewis], axis=1)
    rhs = flux_divergence_lines(np.tile(u, (1, 3)) * q3, q3, ax, g.dx, order, bc)
    rhs += diffusion_term_lines(h3, g.dx, order, bc)

    q3t = q3.reshape(nxp, 3, nyp).transpose(2, 1, 0).reshape(nyp, 3 * nxp)
    h3t = h3.reshape(nxp, 3, nyp).transpose(2, 1, 0).reshape(nyp, 3 * nxp)
    vt = np.tile(v.T, (1, 3))
    rhs_t = flux_divergence_lines(vt * q3t, q3t, ay, g.dy, order, bc)
    rhs_t += diffusion_term_lines(h3t, g.dy, order, bc)
    rhs += rhs_t.reshape(nyp, 3, nxp).transpose(2, 1, 0).reshape(nxp, 3 * nyp)

    d_omega = rhs[:, :nyp] + source_term(state.temperature, state.concentration,
                                         params, order).values
    d_temp = rhs[:, nyp:2 * nyp]
    d_conc = rhs[:, 2 * nyp:]

    fields = []
    for name, arr in (("omega", d_omega), ("temperature", d_temp),
                      ("concentration", d_conc)):
        arr = _zero_walls(np.ascontiguousarray(arr))
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError(f"non-finite right-hand side for {name}")
        fields.append(ScalarField(g, arr))
    return RhsEvaluation(*fields)


def rk3_step(state: ConservedState, dt: float,
             rhs: Callable[[ConservedState], RhsEvaluation]) -> ConservedState:
    """One explicit third-order (SSP) Runge-Kutta step of the evolved components.

    The rhs callable is invoked exactly once per stage and may refresh the
    stage state's wall values in place before evaluating.  psi, u, v ride
    along unmodified (the outer iteration owns them); stage states carry the
    standard stage times t, t+dt, t+dt/2.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    g = state.grid
    t0 = state.time

    def evolved(s):
        return (s.omega.values, s.temperature.values, s.concentration.values)

    def build(arrays, time):
        fields = [ScalarField(g, a) for a in arrays]
        s = ConservedState(fields[0], fields[1], fields[2],
                           state.psi, state.u, state.v, time)
        for f, name in zip(fields, ("omega", "temperature", "concentration")):
            if not np.all(np.isfinite(f.values)):
                raise FloatingPointError(f"non-finite {name} in RK stage at t={time}")
        return s

    u0 = evolved(state)
    r0 = rhs(state)
    k0 = evolved_rhs(r0)
    s1 = build([a + dt * k for a, k in zip(u0, k0)], t0 + dt)

    r1 = rhs(s1)
    k1 = evolved_rhs(r1)
    s2 = build([0.75 * a + 0.25 * (b + dt * k)
                for a, b, k in zip(u0, evolved(s1), k1)], t0 + 0.5 * dt)

    r2 = rhs(s2)
    k2 = evolved_rhs(r2)
    return build([a / 3.0 + 2.0 / 3.0 * (b + dt * k)
                  for a, b, k in zip(u0, evolved(s2), k2)], t0 + dt)


def evolved_rhs(r: RhsEvaluation):
    return (r.d_omega.values, r.d_temperature.values, r.d_concentration.values)


def choose_dt(state: ConservedState, params: PhysicalParams, cfl: float,
              dt_override: Optional[float] = None) -> float:
    """Advective/diffusive explicit step bound, or the override when given."""
    if dt_override is not None:
        return float(dt_override)
    if not 0.0 < cfl <= 1.0:
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    g = state.grid
    h = min(g.dx, g.dy)
    alpha = max(global_splitting_speed(state.u), global_splitting_speed(state.v))
    nu_max = max(params.prandtl, 1.0, 1.0 / params.lewis)
    return cfl * min(h / (alpha + 1e-8), h * h / (4.0 * nu_max))

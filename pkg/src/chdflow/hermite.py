"""Flux splitting, Hermite face reconstruction, and Hermite diffusion stencils.

Convective terms: each scalar flux line is split into one-signed parts
F+- = (F +- alpha*q)/2, the split parts are differentiated with the compact
scheme, and face values at x_{i+1/2} come from a fifth-degree Hermite
interpolant of the sliding-average kernel (value weights 11/60, 19/30, 11/60
with a derivative correction).  The minus reconstruction mirrors the plus one
about the face.

Diffusive terms: a seventh-degree Hermite interpolant yields a five-node
second-derivative stencil that reuses the same compact first derivatives.

Non-periodic lines are extended by one ghost node per side with a quintic
Hermite extrapolant built from the three (value, derivative) pairs nearest
the boundary, so every face and every interior diffusion stencil is fed from
within one closure family.
"""

from __future__ import annotations

import enum

import numpy as np
from numba import njit

from .compact import (BoundaryTreatment, SchemeOrder, differentiate_lines,
                      differentiate_lines_pinned)
from .grid import ScalarField

ALPHA_FLOOR = 1e-8

# Face weights of the quintic sliding-average Hermite interpolant.
_WV = (11.0 / 60.0, 19.0 / 30.0, 11.0 / 60.0)
_WD = (1.0 / 20.0, 10.0 / 20.0, -1.0 / 20.0)

# Quintic boundary extrapolation: value and first derivative at the node one
# spacing outside the first of three (value, derivative) data pairs.
_EXT_V = (-18.0, 9.0, 10.0)
_EXT_VD = (9.0, 18.0, 3.0)
_EXT_DV = (57.0, -24.0, -33.0)
_EXT_DD = (24.0, 57.0, 10.0)

# Degree-7 variant on four pairs, used to ghost-extend diffusion lines of the
# sixth-order scheme (the quintic's h^6 remainder would cap the five-node
# second-derivative stencil at fourth order next to walls).
_EXT7_V = (-128.0 / 3.0, -36.0, 64.0, 47.0 / 3.0)
_EXT7_VD = (16.0, 72.0, 48.0, 4.0)
_EXT7_DV = (1360.0 / 9.0, 150.0, -240.0, -550.0 / 9.0)
_EXT7_DD = (152.0 / 3.0, 264.0, 184.0, 47.0 / 3.0)

# Five-value/two-derivative second-derivative stencil (scaled by 1/(36 h^2)).
_DIFF_V = (1.0, 80.0, -162.0, 80.0, 1.0)
_DIFF_D = 24.0


class Side(enum.Enum):
    LEFT = 1
    RIGHT = -1


class StencilError(ValueError):
    """Insufficient stencil support or mismatched line lengths."""


def global_splitting_speed(velocity_component: ScalarField) -> float:
    """Largest advection speed on the grid: max |velocity| over all nodes."""
    v = velocity_component.values
    if not np.all(np.isfinite(v)):
        raise StencilError("velocity field contains non-finite values")
    return float(np.max(np.abs(v)))


def lax_friedrichs_split(flux, conserved, alpha: float):
    """F+- = (F +- alpha*q) / 2; the two parts sum back to the physical flux."""
    f = np.asarray(flux, dtype=float)
    q = np.asarray(conserved, dtype=float)
    if f.shape != q.shape:
        raise StencilError(f"flux shape {f.shape} != conserved shape {q.shape}")
    if alpha < 0.0:
        raise StencilError(f"splitting speed must be >= 0, got {alpha}")
    aq = 0.5 * alpha * q
    half = 0.5 * f
    return half + aq, half - aq


def extrapolate_boundary_values(values, derivs, spacing: float, side: Side):
    """Quintic Hermite extrapolation one spacing beyond the line's end.

    For side LEFT the target sits one spacing left of values[0]; for RIGHT one
    spacing right of values[-1].  Uses the three (value, derivative) pairs
    nearest that end.  Returns (value, derivative) at the target node.
    """
    v = np.asarray(values, dtype=float)
    d = np.asarray(derivs, dtype=float)
    if v.shape != d.shape or v.shape[0] < 3:
        raise StencilError("extrapolation needs >= 3 matching (value, derivative) pairs")
    if side is Side.LEFT:
        vs, ds = v[:3], d[:3]
    else:
        vs, ds = v[-1:-4:-1], d[-1:-4:-1]
    h = side.value * spacing
    val = (_EXT_V[0] * vs[0] + _EXT_V[1] * vs[1] + _EXT_V[2] * vs[2]
           - h * (_EXT_VD[0] * ds[0] + _EXT_VD[1] * ds[1] + _EXT_VD[2] * ds[2]))
    der = ((_EXT_DV[0] * vs[0] + _EXT_DV[1] * vs[1] + _EXT_DV[2] * vs[2]) / h
           + _EXT_DD[0] * ds[0] + _EXT_DD[1] * ds[1] + _EXT_DD[2] * ds[2])
    return val, der


def _extrapolate_septic(values, derivs, spacing, side: Side):
    """Degree-7 analogue of extrapolate_boundary_values on four pairs."""
    v = np.asarray(values, dtype=float)
    d = np.asarray(derivs, dtype=float)
    if v.shape[0] < 4:
        raise StencilError("septic extrapolation needs >= 4 (value, derivative) pairs")
    if side is Side.LEFT:
        vs, ds = v[:4], d[:4]
    else:
        vs, ds = v[-1:-5:-1], d[-1:-5:-1]
    h = side.value * spacing
    val = sum(_EXT7_V[k] * vs[k] for k in range(4)) \
        - h * sum(_EXT7_VD[k] * ds[k] for k in range(4))
    der = sum(_EXT7_DV[k] * vs[k] for k in range(4)) / h \
        + sum(_EXT7_DD[k] * ds[k] for k in range(4))
    return val, der


def _extend(values, derivs, spacing, bc, left: bool, right: bool, degree: int = 5):
    """Ghost-extend a line (or a batch of lines along axis 0) by one node."""
    assert bc is BoundaryTreatment.ONE_SIDED
    extrap = extrapolate_boundary_values if degree == 5 else _extrapolate_septic
    v, d = values, derivs
    parts_v, parts_d = [v], [d]
    if left:
        gv, gd = extrap(v, d, spacing, Side.LEFT)
        parts_v.insert(0, np.asarray(gv)[None, ...])
        parts_d.insert(0, np.asarray(gd)[None, ...])
    if right:
        gv, gd = extrap(v, d, spacing, Side.RIGHT)
        parts_v.append(np.asarray(gv)[None, ...])
        parts_d.append(np.asarray(gd)[None, ...])
    return np.concatenate(parts_v), np.concatenate(parts_d)


def reconstruct_face_flux_plus(f_plus, f_plus_deriv, spacing: float) -> np.ndarray:
    """Upwind-biased face values from an extended line (stencil i-1, i, i+1).

    Input vectors must already carry the entries needed so that every face has
    its three-node stencil: entry j of the result is the face between original
    nodes j-1 and j of the extended indexing, i.e. len(result) = len(input)-2.
    """
    v = np.asarray(f_plus, dtype=float)
    d = np.asarray(f_plus_deriv, dtype=float)
    if v.shape != d.shape:
        raise StencilError("value/derivative lines must match")
    if v.shape[0] < 3:
        raise StencilError("face reconstruction needs at least 3 stencil nodes")
    return (_WV[0] * v[:-2] + _WV[1] * v[1:-1] + _WV[2] * v[2:]
            + spacing * (_WD[0] * d[:-2] + _WD[1] * d[1:-1] + _WD[2] * d[2:]))


def reconstruct_face_flux_minus(f_minus, f_minus_deriv, spacing: float) -> np.ndarray:
    """Downwind-biased mirror of the plus reconstruction (stencil i, i+1, i+2)."""
    v = np.asarray(f_minus, dtype=float)
    d = np.asarray(f_minus_deriv, dtype=float)
    if v.shape != d.shape:
        raise StencilError("value/derivative lines must match")
    if v.shape[0] < 3:
        raise StencilError("face reconstruction needs at least 3 stencil nodes")
    return (_WV[2] * v[:-2] + _WV[1] * v[1:-1] + _WV[0] * v[2:]
            - spacing * (_WD[2] * d[:-2] + _WD[1] * d[1:-1] + _WD[0] * d[2:]))


@njit(cache=True)
def _conv_divergence_kernel(fp, dp, fm, dm, h):  # pragma: no cover - jitted
    """One-sided convective divergence: ghost + faces + difference, fused."""
    m, k = fp.shape
    out = np.zeros((m, k))
    inv_h = 1.0 / h
    wv0, wv1 = 11.0 / 60.0, 19.0 / 30.0
    wd0, wd1 = 1.0 / 20.0, 10.0 / 20.0
    for j in range(k):
        gvp = (-18.0 * fp[0, j] + 9.0 * fp[1, j] + 10.0 * fp[2, j]
               - h * (9.0 * dp[0, j] + 18.0 * dp[1, j] + 3.0 * dp[2, j]))
        gdp = ((57.0 * fp[0, j] - 24.0 * fp[1, j] - 33.0 * fp[2, j]) / h
               + 24.0 * dp[0, j] + 57.0 * dp[1, j] + 10.0 * dp[2, j])
        gvm = (-18.0 * fm[m - 1, j] + 9.0 * fm[m - 2, j] + 10.0 * fm[m - 3, j]
               + h * (9.0 * dm[m - 1, j] + 18.0 * dm[m - 2, j] + 3.0 * dm[m - 3, j]))
        gdm = (-(57.0 * fm[m - 1, j] - 24.0 * fm[m - 2, j] - 33.0 * fm[m - 3, j]) / h
               + 24.0 * dm[m - 1, j] + 57.0 * dm[m - 2, j] + 10.0 * dm[m - 3, j])
        prev = 0.0
        for i in range(m - 1):
            if i == 0:
                vm1, dm1 = gvp, gdp
            else:
                vm1, dm1 = fp[i - 1, j], dp[i - 1, j]
            fhat = (wv0 * vm1 + wv1 * fp[i, j] + wv0 * fp[i + 1, j]
                    + h * (wd0 * dm1 + wd1 * dp[i, j] - wd0 * dp[i + 1, j]))
            if i == m - 2:
                vp2, dp2 = gvm, gdm
            else:
                vp2, dp2 = fm[i + 2, j], dm[i + 2, j]
            fhat += (wv0 * fm[i, j] + wv1 * fm[i + 1, j] + wv0 * vp2
                     + h * (wd0 * dm[i, j] - wd1 * dm[i + 1, j] - wd0 * dp2))
            if i > 0:
                out[i, j] = -(fhat - prev) * inv_h
            prev = fhat
    return out


@njit(cache=True)
def _diffusion_kernel(hv, d, h, septic):  # pragma: no cover - jitted
    """One-sided Hermite second derivative with ghost extension, fused."""
    m, k = hv.shape
    out = np.zeros((m, k))
    scale = 1.0 / (36.0 * h * h)
    for j in range(k):
        if septic:
            gl = (-128.0 / 3.0 * hv[0, j] - 36.0 * hv[1, j] + 64.0 * hv[2, j]
                  + 47.0 / 3.0 * hv[3, j]
                  - h * (16.0 * d[0, j] + 72.0 * d[1, j] + 48.0 * d[2, j]
                         + 4.0 * d[3, j]))
            gr = (-128.0 / 3.0 * hv[m - 1, j] - 36.0 * hv[m - 2, j]
                  + 64.0 * hv[m - 3, j] + 47.0 / 3.0 * hv[m - 4, j]
                  + h * (16.0 * d[m - 1, j] + 72.0 * d[m - 2, j]
                         + 48.0 * d[m - 3, j] + 4.0 * d[m - 4, j]))
        else:
            gl = (-18.0 * hv[0, j] + 9.0 * hv[1, j] + 10.0 * hv[2, j]
                  - h * (9.0 * d[0, j] + 18.0 * d[1, j] + 3.0 * d[2, j]))
            gr = (-18.0 * hv[m - 1, j] + 9.0 * hv[m - 2, j] + 10.0 * hv[m - 3, j]
                  + h * (9.0 * d[m - 1, j] + 18.0 * d[m - 2, j] + 3.0 * d[m - 3, j]))
        for i in range(1, m - 1):
            left = gl if i == 1 else hv[i - 2, j]
            right = gr if i == m - 2 else hv[i + 2, j]
            out[i, j] = (left + 80.0 * hv[i - 1, j] - 162.0 * hv[i, j]
                         + 80.0 * hv[i + 1, j] + right
                         + 24.0 * h * (d[i - 1, j] - d[i + 1, j])) * scale
    return out


def split_face_flux(flux, conserved, alpha: float, spacing: float,
                    order: SchemeOrder, bc: BoundaryTreatment,
                    wall_slopes=None) -> np.ndarray:
    """Numerical flux at every face of a line (or batch of lines, axis 0).

    Splits, differentiates the split parts with the compact scheme, extends
    for stencil coverage, and sums the plus/minus reconstructions.  Length of
    the result along axis 0 is m for periodic lines (faces i+1/2, i = 0..m-1,
    wrapping) and m-1 for one-sided lines (interior faces only).

    wall_slopes, when given for one-sided lines, carries exact end-node
    slopes ((dflux_lo, dflux_hi), (dconserved_lo, dconserved_hi)) so the
    derivative solves bypass the one-sided closure rows (Dirichlet tests
    whose boundary data comes from an exact solution).
    """
    fp, fm = lax_friedrichs_split(flux, conserved, alpha)
    if wall_slopes is not None and bc is BoundaryTreatment.ONE_SIDED:
        (dflo, dfhi), (dqlo, dqhi) = wall_slopes
        dp = differentiate_lines_pinned(fp, spacing, order,
                                        0.5 * (dflo + alpha * dqlo),
                                        0.5 * (dfhi + alpha * dqhi))
        dm = differentiate_lines_pinned(fm, spacing, order,
                                        0.5 * (dflo - alpha * dqlo),
                                        0.5 * (dfhi - alpha * dqhi))
    else:
        dp = differentiate_lines(fp, spacing, order, bc, axis=0)
        dm = differentiate_lines(fm, spacing, order, bc, axis=0)
    if bc is BoundaryTreatment.PERIODIC:
        # plus stencil {i-1, i, i+1}: wrap one node each side; minus stencil
        # {i, i+1, i+2}: wrap two nodes on the right.  Both yield m faces
        # x_{i+1/2}, i = 0..m-1, aligned entry for entry.
        vp = np.concatenate([fp[-1:], fp, fp[:1]])
        gp = np.concatenate([dp[-1:], dp, dp[:1]])
        vm = np.concatenate([fm, fm[:2]])
        gm = np.concatenate([dm, dm[:2]])
    else:
        vp, gp = _extend(fp, dp, spacing, bc, left=True, right=False)
        vm, gm = _extend(fm, dm, spacing, bc, left=False, right=True)
    return (reconstruct_face_flux_plus(vp, gp, spacing)
            + reconstruct_face_flux_minus(vm, gm, spacing))


def flux_divergence_lines(flux, conserved, alpha: float, spacing: float,
                          order: SchemeOrder, bc: BoundaryTreatment,
                          wall_slopes=None) -> np.ndarray:
    """-(Fhat_{i+1/2} - Fhat_{i-1/2}) / h along axis 0.

    One-sided lines return zeros at the two wall nodes (walls are set by
    boundary conditions, not evolved); periodic lines fill every node.
    """
    if bc is BoundaryTreatment.ONE_SIDED:
        fp, fm = lax_friedrichs_split(flux, conserved, alpha)
        if wall_slopes is not None:
            (dflo, dfhi), (dqlo, dqhi) = wall_slopes
            dp = differentiate_lines_pinned(fp, spacing, order,
                                            0.5 * (dflo + alpha * dqlo),
                                            0.5 * (dfhi + alpha * dqhi))
            dm = differentiate_lines_pinned(fm, spacing, order,
                                            0.5 * (dflo - alpha * dqlo),
                                            0.5 * (dfhi - alpha * dqhi))
        else:
            dp = differentiate_lines(fp, spacing, order, bc, axis=0)
            dm = differentiate_lines(fm, spacing, order, bc, axis=0)
        flat = fp.ndim == 1
        if flat:
            fp, dp = fp[:, None], dp[:, None]
            fm, dm = fm[:, None], dm[:, None]
        out = _conv_divergence_kernel(np.ascontiguousarray(fp),
                                      np.ascontiguousarray(dp),
                                      np.ascontiguousarray(fm),
                                      np.ascontiguousarray(dm), spacing)
        return out[:, 0] if flat else out
    faces = split_face_flux(flux, conserved, alpha, spacing, order, bc)
    out = np.zeros_like(np.asarray(flux, dtype=float))
    out[0] = faces[0] - faces[-1]
    out[1:] = faces[1:] - faces[:-1]
    out *= -1.0 / spacing
    return out


def hermite_diffusion_line(h_values, h_derivs, spacing: float,
                           bc: BoundaryTreatment = BoundaryTreatment.ONE_SIDED,
                           ghost_degree: int = 5) -> np.ndarray:
    """Second-derivative approximation along axis 0 from values and derivatives.

    One-sided lines are ghost-extended by the quintic extrapolant; the two
    wall entries of the result are zeros (never consumed by the solvers).
    """
    v = np.asarray(h_values, dtype=float)
    d = np.asarray(h_derivs, dtype=float)
    if v.shape != d.shape:
        raise StencilError("value/derivative lines must match")
    if v.shape[0] < 5:
        raise StencilError("diffusion stencil needs at least 5 nodes per line")
    out = np.zeros_like(v)
    scale = 1.0 / (36.0 * spacing * spacing)
    if bc is BoundaryTreatment.PERIODIC:
        ev = np.concatenate([v[-2:], v, v[:2]])   # nodes -2 .. m+1
        dd = np.concatenate([d[-1:], d, d[:1]])   # nodes -1 .. m
        core = (_DIFF_V[0] * ev[:-4] + _DIFF_V[1] * ev[1:-3] + _DIFF_V[2] * ev[2:-2]
                + _DIFF_V[3] * ev[3:-1] + _DIFF_V[4] * ev[4:])
        corr = _DIFF_D * spacing * (dd[:-2] - dd[2:])
        out[:] = (core + corr) * scale
    else:
        ev, _ = _extend(v, d, spacing, bc, left=True, right=True,
                        degree=ghost_degree)  # nodes -1 .. m
        core = (_DIFF_V[0] * ev[:-4] + _DIFF_V[1] * ev[1:-3] + _DIFF_V[2] * ev[2:-2]
                + _DIFF_V[3] * ev[3:-1] + _DIFF_V[4] * ev[4:])
        corr = _DIFF_D * spacing * (d[:-2] - d[2:])
        out[1:-1] = (core + corr) * scale
    return out


def diffusion_term_lines(h_values, spacing: float, order: SchemeOrder,
                         bc: BoundaryTreatment, wall_slope=None) -> np.ndarray:
    """Hermite second derivative along axis 0, deriving slopes with the CCD scheme.

    wall_slope optionally pins exact end-node slopes of the diffused quantity
    (same convention as split_face_flux).
    """
    hv = np.asarray(h_values, dtype=float)
    if wall_slope is not None and bc is BoundaryTreatment.ONE_SIDED:
        d = differentiate_lines_pinned(hv, spacing, order, wall_slope[0], wall_slope[1])
    else:
        d = differentiate_lines(hv, spacing, order, bc, axis=0)
    degree = 5 if order is SchemeOrder.CHD4 else 7
    if bc is BoundaryTreatment.ONE_SIDED:
        flat = hv.ndim == 1
        if flat:
            hv, d = hv[:, None], d[:, None]
        out = _diffusion_kernel(np.ascontiguousarray(hv), np.ascontiguousarray(d),
                                spacing, degree == 7)
        return out[:, 0] if flat else out
    return hermite_diffusion_line(hv, d, spacing, bc, ghost_degree=degree)


def convective_divergence(component: ScalarField, u: ScalarField, v: ScalarField,
                          order: SchemeOrder,
                          bc: BoundaryTreatment = BoundaryTreatment.ONE_SIDED) -> ScalarField:
    """Convective contribution -d(u q)/dx - d(v q)/dy for an advected scalar q.

    Split speeds are global per axis (alpha_x = max|u|, alpha_y = max|v|) with
    a small floor keeping the split well defined at rest.
    """
    g = component.grid
    q = component.values
    ax = max(global_splitting_speed(u), ALPHA_FLOOR)
    ay = max(global_splitting_speed(v), ALPHA_FLOOR)
    div_x = flux_divergence_lines(u.values * q, q, ax, g.dx, order, bc)
    div_y = flux_divergence_lines((v.values * q).T, q.T, ay, g.dy, order, bc).T
    return ScalarField(g, div_x + div_y)

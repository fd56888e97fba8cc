"""Tridiagonal kernels and compact central first-derivative operators.

The CCD4/CCD6 interior rows couple derivative unknowns on a three-node
stencil through a tridiagonal system.  Non-periodic lines are closed with
one-sided rows at both ends; the sixth-order variant additionally needs a
biased row at the first/last interior node (the plain interior row would
reach outside the line there), for which a degree-7-exact tridiagonal row is
used.  Every row's polynomial-reproduction degree is certified in the test
suite against a monomial oracle.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .grid import Grid, ScalarField

PIVOT_FLOOR = 1e-14


class LineError(ValueError):
    """Line too short for the requested stencil, or non-finite input."""


class ZeroPivotError(ArithmeticError):
    """Tridiagonal elimination hit a pivot below the floor."""


class SchemeOrder(enum.Enum):
    """Which compact scheme feeds the Hermite reconstructions."""

    CHD4 = 4
    CHD6 = 6


class BoundaryTreatment(enum.Enum):
    PERIODIC = "periodic"
    ONE_SIDED = "one_sided"


class Axis(enum.Enum):
    X = 0
    Y = 1


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Thomas elimination for A x = rhs; rhs may be (n,) or (n, k).

    lower/upper hold the sub/super-diagonals (length n-1).  Raises
    ZeroPivotError when a pivot magnitude falls below 1e-14.
    """
    d = np.asarray(diag, dtype=float)
    n = d.shape[0]
    if n < 2:
        raise LineError(f"tridiagonal system needs n >= 2, got {n}")
    lo = np.asarray(lower, dtype=float)
    up = np.asarray(upper, dtype=float)
    if lo.shape[0] != n - 1 or up.shape[0] != n - 1:
        raise LineError("lower/upper bands must have length n-1")
    b = np.asarray(rhs, dtype=float)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if b.shape[0] != n:
        raise LineError(f"rhs rows {b.shape[0]} do not match system size {n}")

    cp = np.empty(n - 1)
    x = b.copy()
    piv = d[0]
    if abs(piv) < PIVOT_FLOOR:
        raise ZeroPivotError(f"zero pivot at row 0 ({piv})")
    cp[0] = up[0] / piv
    x[0] /= piv
    for i in range(1, n):
        piv = d[i] - lo[i - 1] * cp[i - 1]
        if abs(piv) < PIVOT_FLOOR:
            raise ZeroPivotError(f"zero pivot at row {i} ({piv})")
        if i < n - 1:
            cp[i] = up[i] / piv
        x[i] = (x[i] - lo[i - 1] * x[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x[:, 0] if squeeze else x


def solve_cyclic_tridiagonal(lower, diag, upper, corner_lo: float, corner_hi: float,
                             rhs) -> np.ndarray:
    """Periodic tridiagonal solve via Sherman-Morrison rank-one correction.

    corner_lo is A[0, n-1] and corner_hi is A[n-1, 0].  Reduces to two plain
    tridiagonal solves; with zero corners it matches solve_tridiagonal.
    """
    d = np.asarray(diag, dtype=float)
    n = d.shape[0]
    if n < 3:
        raise LineError(f"cyclic tridiagonal system needs n >= 3, got {n}")
    if corner_lo == 0.0 and corner_hi == 0.0:
        return solve_tridiagonal(lower, diag, upper, rhs)

    b = np.asarray(rhs, dtype=float)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]

    gamma = -d[0]
    dm = d.copy()
    dm[0] = d[0] - gamma
    dm[-1] = d[-1] - corner_lo * corner_hi / gamma
    u = np.zeros(n)
    u[0] = gamma
    u[-1] = corner_hi
    yz = solve_tridiagonal(lower, dm, upper, np.concatenate([b, u[:, None]], axis=1))
    y, z = yz[:, :-1], yz[:, -1]
    # v = (1, 0, ..., 0, corner_lo/gamma)
    vy = y[0] + (corner_lo / gamma) * y[-1]
    vz = z[0] + (corner_lo / gamma) * z[-1]
    x = y - np.outer(z, vy / (1.0 + vz))
    return x[:, 0] if squeeze else x


# Interior rows: (lhs_left, lhs_center, lhs_right), rhs offsets -> weight / h.
_CCD4_INTERIOR = ((Fraction(1, 6), Fraction(2, 3), Fraction(1, 6)),
                  {-1: Fraction(-1, 2), 1: Fraction(1, 2)})
_CCD6_INTERIOR = ((Fraction(1, 3), Fraction(1, 1), Fraction(1, 3)),
                  {-2: Fraction(-1, 36), -1: Fraction(-7, 9),
                   1: Fraction(7, 9), 2: Fraction(1, 36)})

# One-sided end rows relate the two end derivative unknowns to nearby values.
_CCD4_EDGE = ((Fraction(1, 1), Fraction(3, 1)),
              {0: Fraction(-17, 6), 1: Fraction(3, 2), 2: Fraction(3, 2), 3: Fraction(-1, 6)})
_CCD6_EDGE = ((Fraction(1, 1), Fraction(5, 1)),
              {0: Fraction(-197, 60), 1: Fraction(-5, 12), 2: Fraction(5, 1),
               3: Fraction(-5, 3), 4: Fraction(5, 12), 5: Fraction(-1, 20)})

# Biased row at the first interior node for the sixth-order one-sided ladder
# (degree-7 exact; the plain CCD6 row would reach one node outside the line).
_CCD6_NEXT_TO_EDGE = ((Fraction(1, 10), Fraction(1, 1), Fraction(1, 1)),
                      {0: Fraction(-227, 600), 1: Fraction(-13, 12), 2: Fraction(7, 6),
                       3: Fraction(1, 3), 4: Fraction(-1, 24), 5: Fraction(1, 300)})


def min_line_length(order: SchemeOrder, bc: BoundaryTreatment) -> int:
    if bc is BoundaryTreatment.ONE_SIDED:
        return 4 if order is SchemeOrder.CHD4 else 7
    return 3 if order is SchemeOrder.CHD4 else 5


@lru_cache(maxsize=None)
def _ccd_system(order: SchemeOrder, bc: BoundaryTreatment, m: int):
    """LHS bands (+corners) and dense RHS matrix B at unit spacing."""
    interior = _CCD4_INTERIOR if order is SchemeOrder.CHD4 else _CCD6_INTERIOR
    (al, ac, ar), brow = interior
    lo = np.full(m - 1, float(al))
    di = np.full(m, float(ac))
    up = np.full(m - 1, float(ar))
    B = np.zeros((m, m))

    if bc is BoundaryTreatment.PERIODIC:
        for off, w in brow.items():
            B += float(w) * np.eye(m, k=off)
            # wrap the stencil
            B += float(w) * np.eye(m, k=off - m if off > 0 else off + m)
        corner_lo, corner_hi = float(al), float(ar)
        return (lo, di, up), (corner_lo, corner_hi), B

    first_interior = 1 if order is SchemeOrder.CHD4 else 2
    for i in range(first_interior, m - first_interior):
        for off, w in brow.items():
            B[i, i + off] = float(w)

    def put_edge(row_idx, lhs, rhs, start, step):
        a0, a1 = lhs
        di[row_idx] = float(a0)
        if step > 0:
            up[row_idx] = float(a1)
        else:
            lo[row_idx - 1] = float(a1)
        B[row_idx, :] = 0.0
        for off, w in rhs.items():
            B[row_idx, start + step * off] = float(w) * step

    edge = _CCD4_EDGE if order is SchemeOrder.CHD4 else _CCD6_EDGE
    put_edge(0, *edge, start=0, step=1)
    put_edge(m - 1, *edge, start=m - 1, step=-1)

    if order is SchemeOrder.CHD6:
        (a0, a1, a2), rhs6 = _CCD6_NEXT_TO_EDGE
        lo[0], di[1], up[1] = float(a0), float(a1), float(a2)
        B[1, :] = 0.0
        for off, w in rhs6.items():
            B[1, off] = float(w)
        lo[m - 3], di[m - 2], up[m - 2] = float(a2), float(a1), float(a0)
        B[m - 2, :] = 0.0
        for off, w in rhs6.items():
            B[m - 2, m - 1 - off] = -float(w)

    return (lo, di, up), None, B


@lru_cache(maxsize=None)
def derivative_matrix(order: SchemeOrder, bc: BoundaryTreatment, m: int) -> np.ndarray:
    """Dense first-derivative operator D at unit spacing: f' = (D @ f) / h.

    Built once per (scheme, treatment, length) by solving the compact system
    against the full RHS matrix; cached because the CCD matrices are
    constant-coefficient.
    """
    if m < min_line_length(order, bc):
        raise LineError(
            f"line of {m} nodes is too short for {order.name} with {bc.value} "
            f"boundaries (minimum {min_line_length(order, bc)})")
    (lo, di, up), corners, B = _ccd_system(order, bc, m)
    if corners is None:
        D = solve_tridiagonal(lo, di, up, B)
    else:
        D = solve_cyclic_tridiagonal(lo, di, up, corners[0], corners[1], B)
    D.setflags(write=False)
    return D


@lru_cache(maxsize=None)
def _pinned_system(order: SchemeOrder, m: int):
    """CCD system with the end rows replaced by known end derivatives.

    Returns (M, w0, wn) with d = (M @ v)/h + outer(w0, d0) + outer(wn, dn):
    used when a problem supplies exact wall slopes (Dirichlet data taken from
    an exact solution), bypassing the one-sided closure rows at the walls.
    """
    if m < min_line_length(order, BoundaryTreatment.ONE_SIDED):
        raise LineError(f"line of {m} nodes is too short for {order.name}")
    (lo, di, up), _, B = _ccd_system(order, BoundaryTreatment.ONE_SIDED, m)
    lo, di, up, B = lo.copy(), di.copy(), up.copy(), B.copy()
    di[0] = di[-1] = 1.0
    up[0] = lo[-1] = 0.0
    B[0, :] = B[-1, :] = 0.0
    rhs = np.concatenate([B, np.eye(m)[:, [0, m - 1]]], axis=1)
    sol = solve_tridiagonal(lo, di, up, rhs)
    M, w0, wn = sol[:, :m], sol[:, m], sol[:, m + 1]
    M.setflags(write=False)
    return M, w0, wn


def differentiate_lines_pinned(values: np.ndarray, spacing: float,
                               order: SchemeOrder, slope_lo, slope_hi) -> np.ndarray:
    """Compact derivatives along axis 0 with prescribed end-node slopes."""
    m = values.shape[0]
    M, w0, wn = _pinned_system(order, m)
    out = (M @ values) / spacing
    if values.ndim == 1:
        out += w0 * slope_lo + wn * slope_hi
    else:
        out += np.outer(w0, np.broadcast_to(slope_lo, values.shape[1:]))
        out += np.outer(wn, np.broadcast_to(slope_hi, values.shape[1:]))
    return out


def ccd_first_derivative_line(values, spacing: float, order: SchemeOrder,
                              bc: BoundaryTreatment) -> np.ndarray:
    """Nodal first derivatives of one grid line.

    For periodic treatment all samples are distinct nodes of one period of
    length m*spacing; the wrap stencil uses modular indexing.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise LineError("expected a 1D line of samples")
    if spacing <= 0.0:
        raise LineError(f"spacing must be positive, got {spacing}")
    if not np.all(np.isfinite(v)):
        raise LineError("line contains non-finite samples")
    D = derivative_matrix(order, bc, v.shape[0])
    return (D @ v) / spacing


@lru_cache(maxsize=None)
def _scaled_matrix(order: SchemeOrder, bc: BoundaryTreatment, m: int,
                   spacing: float) -> np.ndarray:
    D = derivative_matrix(order, bc, m) / spacing
    D.setflags(write=False)
    return D


def differentiate_lines(values: np.ndarray, spacing: float, order: SchemeOrder,
                        bc: BoundaryTreatment, axis: int = 0) -> np.ndarray:
    """Apply the line operator to every line of a 2D array along `axis`."""
    D = _scaled_matrix(order, bc, values.shape[axis], float(spacing))
    if axis == 0:
        return D @ values
    return values @ D.T


def field_derivative(fld: ScalarField, axis: Axis, order: SchemeOrder,
                     bc: BoundaryTreatment) -> ScalarField:
    """Derivative field along one axis, each grid line treated independently."""
    g = fld.grid
    m = fld.values.shape[axis.value]
    if m < min_line_length(order, bc):
        raise LineError(
            f"{m} nodes along {axis.name} is too short for {order.name} "
            f"with {bc.value} boundaries")
    if not np.all(np.isfinite(fld.values)):
        raise LineError("field contains non-finite values")
    h = g.dx if axis is Axis.X else g.dy
    return ScalarField(g, differentiate_lines(fld.values, h, order, bc, axis=axis.value))


def recover_velocity(psi: ScalarField, order: SchemeOrder) -> tuple[ScalarField, ScalarField]:
    """u = dpsi/dy, v = -dpsi/dx with one-sided closures; no-slip walls zeroed."""
    u = field_derivative(psi, Axis.Y, order, BoundaryTreatment.ONE_SIDED)
    v = field_derivative(psi, Axis.X, order, BoundaryTreatment.ONE_SIDED)
    v.values *= -1.0
    for f in (u, v):
        f.values[0, :] = 0.0
        f.values[-1, :] = 0.0
        f.values[:, 0] = 0.0
        f.values[:, -1] = 0.0
    return u, v

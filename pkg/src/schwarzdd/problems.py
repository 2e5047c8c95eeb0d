"""Finite-difference test operators on uniform grids of the unit interval/square.

Unknowns are interior grid nodes; node ``(i, j)`` of an ``nx x ny`` grid has
index ``i + nx * j`` and coordinates ``((i+1) h_x, (j+1) h_y)`` with
``h_x = 1/(nx+1)``. Dirichlet values are eliminated from the matrix.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .sparse import SparseMatrix

KAPPA_LOW, KAPPA_HIGH = 6e-2, 2.0


def generate_laplacian1d(n):
    """``tridiag(-1, 2, -1)`` of order ``n``."""
    if n < 1:
        raise ValueError("n must be positive")
    a = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")
    return SparseMatrix.from_scipy(a, symmetry_hint="symmetric")


def generate_laplacian2d(nx, ny):
    """Unscaled 5-point Laplacian: 4 on the diagonal, -1 for each grid neighbor."""
    if nx < 2 or ny < 2:
        raise ValueError("grid needs at least 2 nodes per direction")
    tx = sp.diags([-np.ones(nx - 1), -np.ones(nx - 1)], [-1, 1])
    ty = sp.diags([-np.ones(ny - 1), -np.ones(ny - 1)], [-1, 1])
    a = sp.kron(sp.identity(ny), tx) + sp.kron(ty, sp.identity(nx)) + 4 * sp.identity(nx * ny)
    return SparseMatrix.from_scipy(a, symmetry_hint="symmetric")


def recirculating_velocity(x, y):
    return x * (1 - x) * (2 * y - 1), -y * (1 - y) * (2 * x - 1)


def banded_kappa(n_bands=4):
    """Two-valued diffusivity in horizontal bands alternating low/high."""
    def kappa(x, y):
        band = np.floor(np.clip(y, 0.0, 1.0 - 1e-15) * n_bands).astype(int)
        return np.where(band % 2 == 1, KAPPA_HIGH, KAPPA_LOW)
    return kappa


def _resolve_kappa(kappa):
    if kappa is None or kappa == "constant":
        return lambda x, y: np.ones_like(np.asarray(x, dtype=float) + np.asarray(y, dtype=float))
    if kappa == "bands":
        return banded_kappa()
    if callable(kappa):
        return kappa
    c = float(kappa)
    return lambda x, y: np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, c)


def _resolve_velocity(velocity):
    if velocity is None or velocity == "recirculating":
        return recirculating_velocity
    if velocity == "zero":
        return lambda x, y: (0.0 * x, 0.0 * y)
    if callable(velocity):
        return velocity
    vx, vy = (float(v) for v in velocity)
    return lambda x, y: (vx + 0.0 * x, vy + 0.0 * y)


def inlet_boundary(x, y):
    """Dirichlet data: 1 on the edge ``x = 0``, 0 elsewhere."""
    return np.where(np.asarray(x) <= 0.0, 1.0, 0.0)


def convdiff2d_system(nx, ny, nu, kappa="constant", velocity="recirculating", boundary=inlet_boundary):
    """Upwind convection plus centered diffusion for ``div(V u) - nu div(kappa grad u) = 0``.

    The velocity is sampled at the node and discretized by first-order
    upwinding (``V_x > 0`` couples to the west neighbor with ``-V_x/h``
    and adds ``V_x/h`` to the diagonal). Diffusion uses the harmonic mean of
    ``kappa`` at the two nodes of each face, scaled by ``nu/h^2``. Rows are
    not multiplied by ``h^2``. The resulting matrix is an M-matrix with
    nonnegative row sums.

    Returns
    -------
    A : SparseMatrix
    b : ndarray
        Right-hand side carrying the eliminated Dirichlet values.
    """
    if nx < 3 or ny < 3:
        raise ValueError("grid needs at least 3 nodes per direction")
    if nu <= 0:
        raise ValueError("nu must be positive")
    kap = _resolve_kappa(kappa)
    vel = _resolve_velocity(velocity)
    hx, hy = 1.0 / (nx + 1), 1.0 / (ny + 1)
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    x, y = (ii + 1) * hx, (jj + 1) * hy
    k = ii + nx * jj
    n = nx * ny
    kp = kap(x, y)
    vx, vy = (np.broadcast_to(np.asarray(v, dtype=float), x.shape) for v in vel(x, y))

    diag = np.zeros(n)
    rhs = np.zeros(n)
    rows, cols, vals = [], [], []

    for di, dj, h, vcomp in ((-1, 0, hx, vx), (1, 0, hx, vx), (0, -1, hy, vy), (0, 1, hy, vy)):
        xn, yn = (ii + 1 + di) * hx, (jj + 1 + dj) * hy
        knb = kap(xn, yn)
        kf = 2 * kp * knb / (kp + knb)
        coef = nu * kf / h**2
        # upwind: the neighbor on the side the flow comes from
        sgn = di + dj  # -1 for west/south, +1 for east/north
        upw = np.where(sgn * vcomp < 0, np.abs(vcomp) / h, 0.0)
        coef = coef + upw
        diag += coef
        inside = (ii + di >= 0) & (ii + di < nx) & (jj + dj >= 0) & (jj + dj < ny)
        rows.append(k[inside])
        cols.append((ii + di + nx * (jj + dj))[inside])
        vals.append(-coef[inside])
        out = ~inside
        rhs[out] += coef[out] * boundary(xn[out], yn[out])
    rows.append(k)
    cols.append(k)
    vals.append(diag)
    a = SparseMatrix.from_coo(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), (n, n))
    return a, rhs


def generate_convdiff2d(nx, ny, nu, kappa="constant", velocity="recirculating"):
    return convdiff2d_system(nx, ny, nu, kappa, velocity)[0]

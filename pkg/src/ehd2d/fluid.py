"""Incompressible velocity update: advect, diffuse implicitly, project.

The velocity lives on the MAC faces with no-slip walls, meaning boundary
faces are held at zero and the tangential wall condition enters the viscous
operator through mirror ghosts (ghost = -interior). One step runs the
classical non-incremental projection:

    u*   = u - dt (u . grad) u + dt f          explicit, first-order upwind
    u**  : (I - dt Lap) u** = u*               implicit per component
    q    : Lap_N q = div u**                   Neumann Poisson solve
    u+   = u** - grad q,   p = q (zero mean)

Gradients of cell scalars have zero boundary faces, so the correction never
touches the walls and the projected field is discretely divergence free to
solver precision. The stored pressure is the projection potential (the dt
factor is absorbed), zero mean by construction.

The electric body force is assembled pointwise on faces as (v - w) grad phi,
with the charge imbalance averaged from the neighboring cells; this is the
form whose pairing with the velocity telescopes against the potential-energy
bookkeeping in the diagnostics module.
"""

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import NonConvergence, ZeroField
from .grid import MacVectorField, ScalarField, grad_norm_sq, grad_to_faces, div_from_faces
from .poisson import _lap1d, solve_neumann


class FluidState:
    """Velocity plus the pressure of the most recent projection."""

    __slots__ = ("u", "p")

    def __init__(self, u, p):
        self.u = u
        self.p = p

    @classmethod
    def at_rest(cls, grid):
        return cls(MacVectorField.zeros(grid), ScalarField.zeros(grid))

    def copy(self):
        return FluidState(self.u.copy(), self.p.copy())


def body_force(v, w, phi):
    """Face field (v - w)_face * (grad phi)_face, zero on boundary faces."""
    g = phi.grid
    rho = v.data - w.data
    ph = phi.data
    fx = np.zeros((g.ny, g.nx + 1))
    fy = np.zeros((g.ny + 1, g.nx))
    fx[:, 1:-1] = 0.5 * (rho[:, :-1] + rho[:, 1:]) * (ph[:, 1:] - ph[:, :-1]) / g.hx
    fy[1:-1, :] = 0.5 * (rho[:-1, :] + rho[1:, :]) * (ph[1:, :] - ph[:-1, :]) / g.hy
    return MacVectorField(g, fx, fy)


# ---------------------------------------------------------------------------
# viscous operators, cached per (grid, dt)
# ---------------------------------------------------------------------------

_viscous_cache = {}


def _viscous_lu(grid, dt):
    """LU factors of (I - dt Lap) for the two interior velocity components.

    ux unknowns: (ny, nx-1) interior vertical faces. Along x the neighbors at
    i = 0 and i = nx are boundary faces whose value 0 is known, so the 1-D
    operator is the plain second difference. Along y the walls are half a
    cell away; the mirror ghost closure (end diagonal -3/h^2) realizes the
    zero tangential velocity there. uy is the transpose arrangement.
    """
    key = (grid.key(), float(dt))
    if key not in _viscous_cache:
        dxx_val = _lap1d(grid.nx - 1, grid.hx, "value")
        dyy_ghost = _lap1d(grid.ny, grid.hy, "dirichlet")
        ax = sp.kron(dyy_ghost, sp.identity(grid.nx - 1)) + sp.kron(
            sp.identity(grid.ny), dxx_val
        )
        dyy_val = _lap1d(grid.ny - 1, grid.hy, "value")
        dxx_ghost = _lap1d(grid.nx, grid.hx, "dirichlet")
        ay = sp.kron(dyy_val, sp.identity(grid.nx)) + sp.kron(
            sp.identity(grid.ny - 1), dxx_ghost
        )
        nux = grid.ny * (grid.nx - 1)
        nuy = (grid.ny - 1) * grid.nx
        lux = splu((sp.identity(nux) - dt * ax).tocsc())
        luy = splu((sp.identity(nuy) - dt * ay).tocsc())
        _viscous_cache[key] = (lux, luy)
    return _viscous_cache[key]


# ---------------------------------------------------------------------------
# upwind self-advection
# ---------------------------------------------------------------------------

def _advect(u):
    """First-order upwind (u . grad) u on interior faces; tuple (adv_x, adv_y)."""
    g = u.grid
    hx, hy = g.hx, g.hy
    ux, uy = u.ux, u.uy

    # x-momentum on interior vertical faces (ny, nx-1)
    a = ux[:, 1:-1]
    ddx_b = (ux[:, 1:-1] - ux[:, :-2]) / hx
    ddx_f = (ux[:, 2:] - ux[:, 1:-1]) / hx
    ux_pad = np.vstack([-ux[:1, :], ux, -ux[-1:, :]])
    ddy_b = (ux_pad[1:-1, 1:-1] - ux_pad[:-2, 1:-1]) / hy
    ddy_f = (ux_pad[2:, 1:-1] - ux_pad[1:-1, 1:-1]) / hy
    vbar = 0.25 * (uy[:-1, :-1] + uy[:-1, 1:] + uy[1:, :-1] + uy[1:, 1:])
    adv_x = (
        np.maximum(a, 0.0) * ddx_b
        + np.minimum(a, 0.0) * ddx_f
        + np.maximum(vbar, 0.0) * ddy_b
        + np.minimum(vbar, 0.0) * ddy_f
    )

    # y-momentum on interior horizontal faces (ny-1, nx)
    b = uy[1:-1, :]
    ddy_b = (uy[1:-1, :] - uy[:-2, :]) / hy
    ddy_f = (uy[2:, :] - uy[1:-1, :]) / hy
    uy_pad = np.hstack([-uy[:, :1], uy, -uy[:, -1:]])
    ddx_b = (uy_pad[1:-1, 1:-1] - uy_pad[1:-1, :-2]) / hx
    ddx_f = (uy_pad[1:-1, 2:] - uy_pad[1:-1, 1:-1]) / hx
    ubar = 0.25 * (ux[:-1, :-1] + ux[:-1, 1:] + ux[1:, :-1] + ux[1:, 1:])
    adv_y = (
        np.maximum(b, 0.0) * ddy_b
        + np.minimum(b, 0.0) * ddy_f
        + np.maximum(ubar, 0.0) * ddx_b
        + np.minimum(ubar, 0.0) * ddx_f
    )
    return adv_x, adv_y


def step_velocity(s, f, dt, proj_tol=1e-10, div_tol=1e-8):
    """Advance the fluid state by one projection step under the face force f.

    The force enters after the viscous solve so that a force which is a
    discrete gradient is removed exactly by the projection; diffusing it
    first would bend it away from gradient form near the walls.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    g = s.u.grid
    adv_x, adv_y = _advect(s.u)

    star_x = s.u.ux[:, 1:-1] - dt * adv_x
    star_y = s.u.uy[1:-1, :] - dt * adv_y

    lux, luy = _viscous_lu(g, dt)
    visc_x = lux.solve(star_x.ravel()).reshape(star_x.shape)
    visc_y = luy.solve(star_y.ravel()).reshape(star_y.shape)

    u2 = MacVectorField.zeros(g)
    u2.ux[:, 1:-1] = visc_x + dt * f.ux[:, 1:-1]
    u2.uy[1:-1, :] = visc_y + dt * f.uy[1:-1, :]

    q = solve_neumann(div_from_faces(u2), tol=proj_tol)
    gq = grad_to_faces(q)
    u_new = MacVectorField(g, u2.ux - gq.ux, u2.uy - gq.uy)

    worst = float(np.abs(div_from_faces(u_new).data).max())
    if worst > div_tol:
        raise NonConvergence(1, worst, "projection (residual divergence)")
    return FluidState(u_new, q)


def ladyzhenskaya_ratio(u):
    """||u||_L4 / (||u||_L2^(1/2) ||grad u||_L2^(1/2)) for a no-slip field.

    The L2 and L4 norms are taken on the cell-centered speed interpolant so
    numerator and denominator sample the field the same way; the gradient
    norm is the wall-aware face-difference form (grad_norm_sq). Invariant
    under u -> alpha*u by construction.
    """
    if u.is_zero():
        raise ZeroField("Ladyzhenskaya ratio of a zero velocity field")
    g = u.grid
    uxc = 0.5 * (u.ux[:, :-1] + u.ux[:, 1:])
    uyc = 0.5 * (u.uy[:-1, :] + u.uy[1:, :])
    speed2 = uxc * uxc + uyc * uyc
    l2 = np.sqrt(g.vol * float(speed2.sum()))
    l4 = (g.vol * float((speed2 * speed2).sum())) ** 0.25
    gn = grad_norm_sq(u) ** 0.25
    return float(l4 / (np.sqrt(l2) * gn))

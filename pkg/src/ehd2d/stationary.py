"""Stationary state: damped Newton minimization of the convex potential functional.

The equilibrium potential is the unique minimizer over the discrete
zero-boundary space of

    J[phi] = 1/2 ||grad phi||^2 + M log int e^{phi} + N log int e^{-phi},

whose Euler-Lagrange residual on the grid is

    R(phi) = Lap_h phi - M e^{phi}/int e^{phi} + N e^{-phi}/int e^{-phi}.

Newton directions use the sparse quasi-Jacobian Lap_h - diag(v + w) (the
dense rank-one terms coming from the normalizing integrals are dropped; the
matrix stays symmetric negative definite, so the direction is always a
descent direction for J and a backtracking line search gives global
convergence from phi = 0). The Maxwellian densities

    v_inf = M e^{phi}/int e^{phi},    w_inf = N e^{-phi}/int e^{-phi}

carry their masses exactly by construction. Exponentials are evaluated in
shifted (log-sum-exp) form throughout, so moderate-amplitude potentials
cannot overflow.
"""

import os

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import LineSearchStall, NonConvergence
from .grid import ScalarField, h1_seminorm, save_matrix
from .poisson import _dirichlet_ops

_DEFAULT_TOL = 1e-10


def _log_int_exp(z, vol):
    """log of int e^{z} dx by midpoint quadrature, shifted against overflow."""
    m = float(z.max())
    return m + np.log(vol * float(np.exp(z - m).sum()))


def _normalized_exp(z, mass, vol):
    """mass * e^{z} / int e^{z}, evaluated stably."""
    e = np.exp(z - float(z.max()))
    return mass * e / (vol * float(e.sum()))


class StationarySolution:
    """Equilibrium bundle: potential, Maxwellians, masses, solver record."""

    __slots__ = ("phi", "v", "w", "M", "N", "residual", "iterations")

    def __init__(self, phi, v, w, M, N, residual, iterations):
        self.phi = phi
        self.v = v
        self.w = w
        self.M = M
        self.N = N
        self.residual = residual
        self.iterations = iterations

    @property
    def grid(self):
        return self.phi.grid


def functional_J(phi, M, N):
    """The convex functional; gradient term uses the Dirichlet ghost closure."""
    if M <= 0.0 or N <= 0.0:
        raise ValueError("masses must be positive")
    z = phi.data.ravel()
    vol = phi.grid.vol
    return (
        0.5 * h1_seminorm(phi, dirichlet=True)
        + M * _log_int_exp(z, vol)
        + N * _log_int_exp(-z, vol)
    )


def solve_pb(M, N, grid, tol=_DEFAULT_TOL, max_iter=50, phi0=None):
    """Damped Newton solve of the discrete Poisson-Boltzmann problem.

    Terminates when the grid-L2 norm of R(phi) drops to tol. phi0 overrides
    the zero initial guess (used by the uniqueness checks).
    """
    if M <= 0.0 or N <= 0.0:
        raise ValueError("masses must be positive")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    A, _ = _dirichlet_ops(grid)
    vol = grid.vol
    n = grid.nx * grid.ny
    phi = np.zeros(n) if phi0 is None else phi0.data.ravel().copy()

    def J_of(vec):
        return functional_J(ScalarField(grid, vec.reshape(grid.ny, grid.nx)), M, N)

    res = np.inf
    iterations = 0
    for k in range(max_iter + 1):
        dens_v = _normalized_exp(phi, M, vol)
        dens_w = _normalized_exp(-phi, N, vol)
        R = A @ phi - dens_v + dens_w
        res = float(np.sqrt(vol * (R @ R)))
        iterations = k
        if res <= tol:
            break
        if k == max_iter:
            raise NonConvergence(k, res, "Poisson-Boltzmann Newton")
        Jmat = (A - sp.diags(dens_v + dens_w)).tocsc()
        delta = splu(Jmat).solve(-R)
        J0 = J_of(phi)
        slope = -vol * float(R @ delta)
        # Near the minimum the decrease per step falls below the rounding
        # error of J itself, so the sufficient-decrease test carries an
        # absolute floating-point allowance.
        fuzz = 1e-14 * (1.0 + abs(J0))
        alpha = 1.0
        while J_of(phi + alpha * delta) > J0 + 1e-4 * alpha * slope + fuzz:
            alpha *= 0.5
            if alpha < 1e-12:
                raise LineSearchStall(J0, alpha)
        phi = phi + alpha * delta

    dens_v = _normalized_exp(phi, M, vol)
    dens_w = _normalized_exp(-phi, N, vol)
    shape = (grid.ny, grid.nx)
    return StationarySolution(
        ScalarField(grid, phi.reshape(shape)),
        ScalarField(grid, dens_v.reshape(shape)),
        ScalarField(grid, dens_w.reshape(shape)),
        float(M),
        float(N),
        res,
        iterations,
    )


def sinh_form_check(s):
    """Residual of the equivalent sinh formulation of the stationary equation.

    The two normalized exponentials combine into a single shifted sinh,

        a e^{phi} - b e^{-phi} = 2 sqrt(ab) sinh(phi - (1/2) log(b/a)),

    with a = M/int e^{phi}, b = N/int e^{-phi}; the returned grid-L2 norm of
    Lap_h phi - 2 alpha sinh(phi - beta) is algebraically the same quantity
    as the Newton residual, so it vanishes to solver tolerance at any
    converged solution.
    """
    grid = s.grid
    A, _ = _dirichlet_ops(grid)
    phi = s.phi.data.ravel()
    vol = grid.vol
    log_ip = _log_int_exp(phi, vol)
    log_im = _log_int_exp(-phi, vol)
    alpha2 = 2.0 * np.exp(0.5 * (np.log(s.M) + np.log(s.N) - log_ip - log_im))
    beta = 0.5 * (np.log(s.N) + log_ip - np.log(s.M) - log_im)
    r = A @ phi - alpha2 * np.sinh(phi - beta)
    return float(np.sqrt(vol * (r @ r)))


def stationary_pressure_check(s):
    """Interior-face norm of (v - w) grad phi - grad (v + w).

    At the stationary state the electric force is exactly a pressure
    gradient with p = v + w; on the grid the identity holds to O(h^2), which
    the refinement tests measure.
    """
    g = s.grid
    rho = s.v.data - s.w.data
    ssum = s.v.data + s.w.data
    ph = s.phi.data
    rx = (
        0.5 * (rho[:, :-1] + rho[:, 1:]) * (ph[:, 1:] - ph[:, :-1]) / g.hx
        - (ssum[:, 1:] - ssum[:, :-1]) / g.hx
    )
    ry = (
        0.5 * (rho[:-1, :] + rho[1:, :]) * (ph[1:, :] - ph[:-1, :]) / g.hy
        - (ssum[1:, :] - ssum[:-1, :]) / g.hy
    )
    return float(np.sqrt(g.vol * (float((rx * rx).sum()) + float((ry * ry).sum()))))


def export_stationary(s, outdir):
    """Write the solution matrices plus a small metadata file; returns the paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = {}
    for name, field in (("phi_inf", s.phi), ("v_inf", s.v), ("w_inf", s.w)):
        path = os.path.join(outdir, f"{name}.txt")
        save_matrix(path, field.data)
        paths[name] = path
    meta = os.path.join(outdir, "metadata.txt")
    g = s.grid
    with open(meta, "w") as fh:
        fh.write(f"M = {s.M:.17g}\n")
        fh.write(f"N = {s.N:.17g}\n")
        fh.write(f"residual = {s.residual:.17g}\n")
        fh.write(f"iterations = {s.iterations}\n")
        fh.write(f"nx = {g.nx}\nny = {g.ny}\nlx = {g.lx:.17g}\nly = {g.ly:.17g}\n")
    paths["metadata"] = meta
    return paths

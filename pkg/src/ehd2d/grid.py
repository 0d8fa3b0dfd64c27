"""Uniform Cartesian MAC grid: field containers, quadrature and discrete calculus.

Layout
------
The domain is the open rectangle (0, lx) x (0, ly) split into nx * ny equal
cells. Scalars (charge densities, potential, pressure) live at cell centers;
vector fields live on cell faces in the usual marker-and-cell arrangement:

        +---uy[j+1,i]---+
        |               |
    ux[j,i]   c[j,i]   ux[j,i+1]        c : (ny, nx)   cell centers
        |               |              ux : (ny, nx+1) vertical faces
        +---uy[j,i]-----+              uy : (ny+1, nx) horizontal faces

Arrays are indexed [j, i] with j the y-row and i the x-column, so a plain
text dump of a field reads like a map of the domain with y increasing
downwards. Cell (j, i) is centered at ((i + 1/2) hx, (j + 1/2) hy).

The staggered placement makes the discrete gradient (cells to faces) and
divergence (faces to cells) exact negative adjoints of each other whenever
the boundary faces carry zeros:

    <grad f, g>_faces = -<f, div g>_cells

and that single identity is what the conservation and energy-dissipation
checks in the rest of the package lean on.

Quadrature is the midpoint rule everywhere: integrate(f) = hx*hy*sum(f),
exact for cellwise-linear integrands and second-order otherwise.
"""

import numpy as np


class Grid2D:
    """Descriptor of the uniform mesh. Immutable after construction."""

    def __init__(self, nx, ny, lx=1.0, ly=1.0):
        nx = int(nx)
        ny = int(ny)
        if nx < 3 or ny < 3:
            raise ValueError(f"need at least 3 cells per direction, got {nx}x{ny}")
        if not (lx > 0.0 and ly > 0.0):
            raise ValueError(f"domain sides must be positive, got {lx}, {ly}")
        self.nx = nx
        self.ny = ny
        self.lx = float(lx)
        self.ly = float(ly)
        self.hx = self.lx / nx
        self.hy = self.ly / ny
        self.vol = self.hx * self.hy
        self.area = self.lx * self.ly

    def cell_centers(self):
        """Return (X, Y) center coordinate arrays of shape (ny, nx)."""
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y)

    def key(self):
        return (self.nx, self.ny, self.lx, self.ly)

    def __eq__(self, other):
        return isinstance(other, Grid2D) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Grid2D(nx={self.nx}, ny={self.ny}, lx={self.lx}, ly={self.ly})"


class ScalarField:
    """Cell-centered field: data array of shape (ny, nx), all entries finite."""

    __slots__ = ("grid", "data")

    def __init__(self, grid, data):
        data = np.ascontiguousarray(data, dtype=float)
        if data.shape != (grid.ny, grid.nx):
            raise ValueError(
                f"scalar data shape {data.shape} does not match grid "
                f"({grid.ny}, {grid.nx})"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("scalar field contains non-finite entries")
        self.grid = grid
        self.data = data

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.ny, grid.nx)))

    @classmethod
    def full(cls, grid, value):
        return cls(grid, np.full((grid.ny, grid.nx), float(value)))

    @classmethod
    def from_function(cls, grid, fn):
        X, Y = grid.cell_centers()
        return cls(grid, fn(X, Y))

    def copy(self):
        return ScalarField(self.grid, self.data.copy())


class MacVectorField:
    """Face-staggered vector field; ux on vertical faces, uy on horizontal ones.

    Velocity fields additionally keep every boundary face at zero (no-slip,
    no-penetration walls); that is the caller's contract, checked by
    assert_no_slip, because derived face fields (gradients with boundary
    ghosts attached) legitimately carry boundary values.
    """

    __slots__ = ("grid", "ux", "uy")

    def __init__(self, grid, ux, uy):
        ux = np.ascontiguousarray(ux, dtype=float)
        uy = np.ascontiguousarray(uy, dtype=float)
        if ux.shape != (grid.ny, grid.nx + 1):
            raise ValueError(f"ux shape {ux.shape} != {(grid.ny, grid.nx + 1)}")
        if uy.shape != (grid.ny + 1, grid.nx):
            raise ValueError(f"uy shape {uy.shape} != {(grid.ny + 1, grid.nx)}")
        if not (np.all(np.isfinite(ux)) and np.all(np.isfinite(uy))):
            raise ValueError("vector field contains non-finite entries")
        self.grid = grid
        self.ux = ux
        self.uy = uy

    @classmethod
    def zeros(cls, grid):
        return cls(
            grid,
            np.zeros((grid.ny, grid.nx + 1)),
            np.zeros((grid.ny + 1, grid.nx)),
        )

    def copy(self):
        return MacVectorField(self.grid, self.ux.copy(), self.uy.copy())

    def max_speed(self):
        m = 0.0
        if self.ux.size:
            m = max(m, float(np.abs(self.ux).max()))
        if self.uy.size:
            m = max(m, float(np.abs(self.uy).max()))
        return m

    def is_zero(self):
        return not (np.any(self.ux) or np.any(self.uy))

    def assert_no_slip(self, tol=0.0):
        worst = max(
            float(np.abs(self.ux[:, 0]).max()),
            float(np.abs(self.ux[:, -1]).max()),
            float(np.abs(self.uy[0, :]).max()),
            float(np.abs(self.uy[-1, :]).max()),
        )
        if worst > tol:
            raise ValueError(f"boundary faces not zero (max {worst:.3e})")


# ---------------------------------------------------------------------------
# quadrature and norms
# ---------------------------------------------------------------------------

def integrate(f):
    """Midpoint-rule integral hx*hy*sum(f) over the whole domain."""
    return f.grid.vol * float(f.data.sum())


def lp_norm(f, p):
    """L^p norm by midpoint quadrature; p = inf gives the max norm."""
    if p == np.inf or p == "inf":
        return float(np.abs(f.data).max())
    p = float(p)
    if p < 1.0:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    return float((f.grid.vol * (np.abs(f.data) ** p).sum()) ** (1.0 / p))


def grad_to_faces(f, dirichlet=False):
    """Face-centered difference gradient of a cell field.

    Interior faces get the centered two-point difference. Boundary faces are
    zero by default; with dirichlet=True they get the one-sided difference
    against the ghost convention ghost = -interior (face value 0), which is
    the gradient the homogeneous-Dirichlet Laplacian of the poisson module
    induces.
    """
    g = f.grid
    d = f.data
    gx = np.zeros((g.ny, g.nx + 1))
    gy = np.zeros((g.ny + 1, g.nx))
    gx[:, 1:-1] = (d[:, 1:] - d[:, :-1]) / g.hx
    gy[1:-1, :] = (d[1:, :] - d[:-1, :]) / g.hy
    if dirichlet:
        gx[:, 0] = 2.0 * d[:, 0] / g.hx
        gx[:, -1] = -2.0 * d[:, -1] / g.hx
        gy[0, :] = 2.0 * d[0, :] / g.hy
        gy[-1, :] = -2.0 * d[-1, :] / g.hy
    return MacVectorField(g, gx, gy)


def div_from_faces(u):
    """Cell-centered divergence (ux_E - ux_W)/hx + (uy_N - uy_S)/hy."""
    g = u.grid
    d = (u.ux[:, 1:] - u.ux[:, :-1]) / g.hx + (u.uy[1:, :] - u.uy[:-1, :]) / g.hy
    return ScalarField(g, d)


def h1_seminorm(f, dirichlet=False):
    """Squared H1 seminorm |grad f|^2 integrated by face quadrature.

    The default sums centered differences over interior faces only. With
    dirichlet=True the ghost-based boundary gradients (2 f / h) are added at
    half weight, which makes the result agree exactly with the quadratic
    form -<f, Lap_h f> * hx * hy of the Dirichlet Laplacian; the energy
    bookkeeping in the diagnostics module relies on that exact agreement.
    """
    g = f.grid
    d = f.data
    gx = (d[:, 1:] - d[:, :-1]) / g.hx
    gy = (d[1:, :] - d[:-1, :]) / g.hy
    s = float((gx * gx).sum() + (gy * gy).sum())
    if dirichlet:
        s += 0.5 * float(
            ((2.0 * d[:, 0] / g.hx) ** 2).sum() + ((2.0 * d[:, -1] / g.hx) ** 2).sum()
        )
        s += 0.5 * float(
            ((2.0 * d[0, :] / g.hy) ** 2).sum() + ((2.0 * d[-1, :] / g.hy) ** 2).sum()
        )
    return g.vol * s


def kinetic_energy(u):
    """(1/2) integral |u|^2 by face-value quadrature (one cell volume per face)."""
    g = u.grid
    return 0.5 * g.vol * float((u.ux * u.ux).sum() + (u.uy * u.uy).sum())


def grad_norm_sq(u):
    """Squared H1 seminorm of a no-slip MAC velocity field.

    Uses face differences plus the tangential wall ghosts (ghost = -interior),
    weighted so the value equals -<u, Lap_h u> * hx * hy for the viscous
    Laplacian of the fluid module. Normal derivatives at walls land on the
    boundary faces themselves, which hold the (zero) boundary values, so no
    ghost is needed there.
    """
    g = u.grid
    hx, hy = g.hx, g.hy
    ux, uy = u.ux, u.uy
    # ux: d/dx spans every consecutive face pair (boundary faces included),
    # d/dy interior rows at full weight, wall ghost rows at half weight.
    s = float((((ux[:, 1:] - ux[:, :-1]) / hx) ** 2).sum())
    s += float((((ux[1:, :] - ux[:-1, :]) / hy) ** 2).sum())
    s += 0.5 * float(((2.0 * ux[0, :] / hy) ** 2).sum())
    s += 0.5 * float(((2.0 * ux[-1, :] / hy) ** 2).sum())
    # uy mirrored.
    s += float((((uy[1:, :] - uy[:-1, :]) / hy) ** 2).sum())
    s += float((((uy[:, 1:] - uy[:, :-1]) / hx) ** 2).sum())
    s += 0.5 * float(((2.0 * uy[:, 0] / hx) ** 2).sum())
    s += 0.5 * float(((2.0 * uy[:, -1] / hx) ** 2).sum())
    return g.vol * s


def face_inner(a, b):
    """Face-quadrature inner product of two MAC fields."""
    g = a.grid
    return g.vol * float((a.ux * b.ux).sum() + (a.uy * b.uy).sum())


def cell_inner(f, q):
    """Midpoint inner product of two cell fields."""
    return f.grid.vol * float((f.data * q.data).sum())


# ---------------------------------------------------------------------------
# snapshot files
# ---------------------------------------------------------------------------

def save_matrix(path, data):
    """Write a 2-D array as plain text, one grid row per line, 17 significant digits."""
    np.savetxt(path, np.atleast_2d(data), fmt="%.17g", delimiter=" ")


def load_matrix(path):
    return np.loadtxt(path, ndmin=2)

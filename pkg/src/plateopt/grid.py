"""Grids, quadrature and the discrete Dirichlet Laplacian.

Two grid families are provided, both cell-centred so that no unknown sits on
the boundary or at the origin:

* :class:`RadialGrid` discretises radial functions on the disk ``B(0, R)``.
  Cells are annuli ``[f_i, f_{i+1}]`` and the quadrature weight of a node is
  the exact area of its annulus.  Uniform grids have ``f_i = i R / N`` and
  therefore nodes at ``(i - 1/2) h``.  Non-uniform face sets are used to hold
  Schwarz rearrangements.
* :class:`CartesianGrid` discretises the rectangle ``[0, Lx] x [0, Ly]`` with
  the usual 5-point stencil.

In both cases the Laplacian is written in flux form.  The Dirichlet condition
is imposed on the outer face through a mirror (ghost) value ``-u``, and the
regularity condition ``u'(0) = 0`` is the vanishing flux through the face at
``r = 0``.  The resulting operator ``A = -Delta_h`` is self-adjoint for the
weighted inner product ``sum(w * u * v)`` and ``W A`` is an M-matrix.
"""

from __future__ import annotations

import functools

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import GridMismatch, InvalidArgument, NumericFailure

MIN_NODES = 16
POISSON_BACKWARD_TOL = 1e-10


class Grid:
    """Common interface of the two grid families."""

    kind = "abstract"

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def area(self) -> float:
        return float(self.weights.sum())

    @property
    def max_cell_weight(self) -> float:
        return float(self.weights.max())

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Grid):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.size))

    def function(self, values) -> "GridFunction":
        """Wrap values (array, scalar or callable of the node coordinates)."""
        if callable(values):
            values = values(*self.coordinates)
        values = np.broadcast_to(np.asarray(values, dtype=float), (self.size,))
        return GridFunction(self, values)


class RadialGrid(Grid):
    """Radial cell-centred grid on the disk of radius ``faces[-1]``.

    Parameters
    ----------
    faces : array_like
        Strictly increasing cell faces, starting at 0.
    """

    kind = "radial"

    def __init__(self, faces):
        faces = np.array(faces, dtype=float)
        if faces.ndim != 1 or faces.size < 2:
            raise InvalidArgument("radial grid needs at least one cell")
        if faces[0] != 0.0 or np.any(np.diff(faces) <= 0.0):
            raise InvalidArgument("faces must start at 0 and increase strictly")
        faces.flags.writeable = False
        self.faces = faces
        self.R = float(faces[-1])
        self.N = faces.size - 1
        r = 0.5 * (faces[1:] + faces[:-1])
        w = np.pi * (faces[1:] ** 2 - faces[:-1] ** 2)
        r.flags.writeable = False
        w.flags.writeable = False
        self.r = r
        self.weights = w
        widths = np.diff(faces)
        self.uniform = bool(np.allclose(widths, widths[0], rtol=1e-12, atol=0.0))
        self.h = float(widths.max())

    @classmethod
    def uniform_grid(cls, R: float, N: int) -> "RadialGrid":
        return cls(np.linspace(0.0, R, N + 1))

    @functools.cached_property
    def key(self):
        if self.uniform:
            return ("radial", self.R, self.N)
        return ("radial_faces", self.R, self.N, self.faces.tobytes())

    @property
    def coordinates(self):
        return (self.r,)

    @property
    def radius(self) -> np.ndarray:
        return self.r

    @functools.cached_property
    def conductances(self) -> np.ndarray:
        """Face conductances ``2 pi f / distance``; entry 0 (the origin) is zero."""
        f, r = self.faces, self.r
        g = np.zeros(self.N + 1)
        g[1:-1] = 2.0 * np.pi * f[1:-1] / np.diff(r)
        g[-1] = 2.0 * np.pi * self.R / (self.R - r[-1])
        return g

    @functools.cached_property
    def tridiagonal(self):
        """Bands ``(lower, diag, upper)`` of ``A = -Delta_h``.

        ``lower[i]`` multiplies ``u[i-1]`` and ``upper[i]`` multiplies
        ``u[i+1]``; ``lower[0]`` and ``upper[-1]`` are zero.
        """
        g, w = self.conductances, self.weights
        lower = -g[:-1] / w
        upper = -g[1:] / w
        upper[-1] = 0.0
        diag = (g[:-1] + g[1:]) / w
        for band in (lower, diag, upper):
            band.flags.writeable = False
        return lower, diag, upper

    @functools.cached_property
    def stiffness(self) -> sp.csc_matrix:
        lower, diag, upper = self.tridiagonal
        return sp.diags([lower[1:], diag, upper[:-1]], [-1, 0, 1], format="csc")

    def __repr__(self):
        tag = "" if self.uniform else ", non-uniform"
        return f"RadialGrid(R={self.R:g}, N={self.N}{tag})"


class CartesianGrid(Grid):
    """Cell-centred tensor grid on ``[0, Lx] x [0, Ly]``.

    Unknowns are ordered with ``x`` fastest: node ``(i, j)`` has index
    ``i + nx * j``.
    """

    kind = "cartesian"

    def __init__(self, Lx: float, Ly: float, nx: int, ny: int):
        self.Lx, self.Ly = float(Lx), float(Ly)
        self.nx, self.ny = int(nx), int(ny)
        self.hx, self.hy = self.Lx / self.nx, self.Ly / self.ny
        self.h = max(self.hx, self.hy)
        x1 = (np.arange(self.nx) + 0.5) * self.hx
        y1 = (np.arange(self.ny) + 0.5) * self.hy
        X, Y = np.meshgrid(x1, y1, indexing="xy")
        self.x = X.ravel()
        self.y = Y.ravel()
        w = np.full(self.nx * self.ny, self.hx * self.hy)
        for a in (self.x, self.y, w):
            a.flags.writeable = False
        self.weights = w
        self.uniform = True

    @functools.cached_property
    def key(self):
        return ("cartesian", self.Lx, self.Ly, self.nx, self.ny)

    @property
    def coordinates(self):
        return (self.x, self.y)

    @functools.cached_property
    def radius(self) -> np.ndarray:
        """Distance of each node to the centre of the rectangle."""
        r = np.hypot(self.x - 0.5 * self.Lx, self.y - 0.5 * self.Ly)
        r.flags.writeable = False
        return r

    @staticmethod
    def _second_difference(n: int, h: float) -> sp.csr_matrix:
        main = np.full(n, 2.0)
        main[0] = main[-1] = 3.0  # ghost value -u at the boundary face
        off = -np.ones(n - 1)
        return sp.diags([off, main, off], [-1, 0, 1], format="csr") / h**2

    @functools.cached_property
    def stiffness(self) -> sp.csc_matrix:
        Tx = self._second_difference(self.nx, self.hx)
        Ty = self._second_difference(self.ny, self.hy)
        A = sp.kron(sp.identity(self.ny), Tx) + sp.kron(Ty, sp.identity(self.nx))
        return A.tocsc()

    @functools.cached_property
    def _poisson_lu(self):
        # No pivoting and a symmetric ordering keep the M-matrix sign pattern
        # of the factors, so nonnegative data gives a nonnegative solution.
        return spla.splu(
            self.stiffness,
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )

    def __repr__(self):
        return f"CartesianGrid(Lx={self.Lx:g}, Ly={self.Ly:g}, nx={self.nx}, ny={self.ny})"


class GridFunction:
    """Real values attached to the unknown nodes of a grid.

    Values are stored read-only; arithmetic returns new objects and refuses
    to mix grids.
    """

    __array_priority__ = 1000

    def __init__(self, grid: Grid, values):
        values = np.array(values, dtype=float)
        if values.shape != (grid.size,):
            raise InvalidArgument(
                f"expected {grid.size} values for {grid!r}, got shape {values.shape}"
            )
        values.flags.writeable = False
        self.grid = grid
        self.values = values

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise GridMismatch(f"{self.grid!r} vs {other.grid!r}")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __pow__(self, p):
        return GridFunction(self.grid, self.values**p)

    def __len__(self):
        return self.values.size

    def __repr__(self):
        return f"GridFunction({self.grid!r}, min={self.values.min():.4g}, max={self.values.max():.4g})"


def build_radial_grid(R: float, N: int) -> RadialGrid:
    """Uniform radial grid with ``N`` cells on ``B(0, R)``."""
    if not R > 0:
        raise InvalidArgument(f"radius must be positive, got {R}")
    if int(N) != N or N < MIN_NODES:
        raise InvalidArgument(f"need at least {MIN_NODES} radial nodes, got {N}")
    return RadialGrid.uniform_grid(float(R), int(N))


def build_cartesian_grid(Lx: float, Ly: float, nx: int, ny: int) -> CartesianGrid:
    """Cell-centred ``nx x ny`` grid on the rectangle ``[0, Lx] x [0, Ly]``."""
    if not (Lx > 0 and Ly > 0):
        raise InvalidArgument(f"side lengths must be positive, got {Lx}, {Ly}")
    for n in (nx, ny):
        if int(n) != n or n < MIN_NODES:
            raise InvalidArgument(f"need at least {MIN_NODES} nodes per direction, got {n}")
    return CartesianGrid(Lx, Ly, int(nx), int(ny))


def _values_on(grid: Grid, f) -> np.ndarray:
    if isinstance(f, GridFunction):
        if f.grid != grid:
            raise GridMismatch(f"{f.grid!r} vs {grid!r}")
        return f.values
    arr = np.asarray(f, dtype=float)
    if arr.shape != (grid.size,):
        raise GridMismatch(f"expected {grid.size} values, got shape {arr.shape}")
    return arr


def integrate(grid: Grid, f) -> float:
    """Quadrature ``sum_i w_i f_i``."""
    return float(np.dot(grid.weights, _values_on(grid, f)))


def apply_laplacian(grid: Grid, f) -> GridFunction:
    """Discrete Laplacian with homogeneous Dirichlet data."""
    v = _values_on(grid, f)
    return GridFunction(grid, -(grid.stiffness @ v))


def solve_poisson(grid: Grid, rhs) -> GridFunction:
    """Solve ``-Delta u = rhs`` with ``u = 0`` on the boundary.

    Raises
    ------
    NumericFailure
        If the normwise backward error of the computed solution exceeds
        ``POISSON_BACKWARD_TOL``.
    """
    b = _values_on(grid, rhs)
    if not np.any(b):
        return grid.zeros()
    if isinstance(grid, RadialGrid):
        u = kernels.tridiag_solve(*grid.tridiagonal, b)
    else:
        u = grid._poisson_lu.solve(b)
    A = grid.stiffness
    resid = np.abs(b - A @ u).max()
    scale = (abs(A) @ np.abs(u)).max() + np.abs(b).max()
    backward = resid / scale
    if not np.isfinite(backward) or backward > POISSON_BACKWARD_TOL:
        raise NumericFailure("Poisson solve did not reach tolerance", backward)
    return GridFunction(grid, u)


def norm(grid: Grid, f) -> float:
    """Weighted L2 norm."""
    v = _values_on(grid, f)
    return float(np.sqrt(np.dot(grid.weights, v * v)))


# -- serialization -----------------------------------------------------------

def grid_header(grid: Grid) -> str:
    if isinstance(grid, CartesianGrid):
        return f"cartesian,{grid.Lx!r},{grid.Ly!r},{grid.nx},{grid.ny}"
    if grid.uniform:
        return f"radial,{grid.R!r},{grid.N}"
    return f"radial_faces,{grid.R!r},{grid.N}"


def write_csv(f: GridFunction, path) -> None:
    """Write a grid function as a header line followed by one value per line.

    Non-uniform radial grids store their ``N + 1`` faces between the header
    and the values.  Floats are written with ``repr`` so a round trip is
    bit-exact.
    """
    grid = f.grid
    lines = [grid_header(grid)]
    if isinstance(grid, RadialGrid) and not grid.uniform:
        lines.extend(repr(float(x)) for x in grid.faces)
    lines.extend(repr(float(x)) for x in f.values)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> GridFunction:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise InvalidArgument(f"{path}: empty file")
    head = lines[0].split(",")
    body = lines[1:]
    try:
        if head[0] == "radial":
            grid = RadialGrid.uniform_grid(float(head[1]), int(head[2]))
        elif head[0] == "radial_faces":
            n = int(head[2])
            grid = RadialGrid([float(x) for x in body[: n + 1]])
            body = body[n + 1:]
        elif head[0] == "cartesian":
            grid = CartesianGrid(float(head[1]), float(head[2]), int(head[3]), int(head[4]))
        else:
            raise InvalidArgument(f"{path}: unknown grid kind {head[0]!r}")
        values = [float(x) for x in body]
    except (IndexError, ValueError) as exc:
        if isinstance(exc, InvalidArgument):
            raise
        raise InvalidArgument(f"{path}: malformed grid function file ({exc})") from exc
    return GridFunction(grid, values)

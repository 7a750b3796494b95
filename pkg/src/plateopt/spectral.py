"""First eigenpairs of hinged plates with variable stiffness and density.

Three eigenvalue problems share one solver.  Writing ``A = -Delta_h`` and
``C`` for a positive stiffness coefficient, the discrete operator is

    M(C, rho) u = A (C A u) - rho u,

with Navier (hinged) conditions ``u = Delta u = 0`` built into ``A``.

* ``mu(D)``         : ``C = D``,            ``rho = 0``
* ``lambda_a(rho)`` : ``C = 1 + a rho``,    density ``rho``
* ``Lambda_a(rho)`` : ``C = J_-(rho)``,     density ``rho``

where ``J_-(rho) = (1 + a) / (1 + a (1 - rho))`` is the harmonic mean of the
two phases.  ``M`` is self-adjoint for the weighted inner product, so each
discrete eigenvalue is exactly the minimum of the discrete Rayleigh quotient.

The first eigenpair is computed by shifted inverse power iteration on the
split system ``z = C A u``, ``A z - (rho + sigma) u = f`` (see
:mod:`plateopt.kernels`).  The shift is 0 for ``mu`` and -1 for the density
problems, whose spectrum lies above -1.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import InvalidArgument, NumericFailure
from .grid import (
    CartesianGrid,
    Grid,
    GridFunction,
    RadialGrid,
    apply_laplacian,
    integrate,
    write_csv,
)

DEFAULT_TOL = 1e-10
DEFAULT_MAXITER = 500
SIGN_CLAMP = 1e-14


# -- admissible classes ------------------------------------------------------

@dataclass(frozen=True)
class ThicknessClass:
    """Thicknesses with ``1 <= D <= 1 + beta0`` and ``integral(D) = D0``."""

    beta0: float
    D0: float
    kind = "thickness"

    def __post_init__(self):
        if not self.beta0 > 0:
            raise InvalidArgument(f"beta0 must be positive, got {self.beta0}")

    @property
    def lo(self) -> float:
        return 1.0

    @property
    def hi(self) -> float:
        return 1.0 + self.beta0

    @property
    def mass(self) -> float:
        return self.D0

    def check_feasible(self, grid: Grid) -> None:
        area = grid.area
        if not (area < self.D0 < self.hi * area):
            raise InvalidArgument(
                f"thickness class degenerate: need {area:.6g} < D0={self.D0:.6g} "
                f"< {self.hi * area:.6g}"
            )

    def high_volume(self, grid: Grid) -> float:
        """Volume of the reinforced region of a bang-bang element."""
        return (self.D0 - grid.area) / self.beta0


@dataclass(frozen=True)
class DensityClass:
    """Densities with ``0 <= rho <= 1`` and ``integral(rho) = rho0``."""

    rho0: float
    kind = "density"

    lo = 0.0
    hi = 1.0

    @property
    def mass(self) -> float:
        return self.rho0

    def check_feasible(self, grid: Grid) -> None:
        if not (0.0 < self.rho0 < grid.area):
            raise InvalidArgument(
                f"density class degenerate: need 0 < rho0={self.rho0:.6g} < {grid.area:.6g}"
            )

    def high_volume(self, grid: Grid) -> float:
        return self.rho0


def mass_tolerance(grid: Grid, cls) -> float:
    """One cell of mass: the slack allowed by the strict bang-bang variant."""
    return (cls.hi - cls.lo) * grid.max_cell_weight + 1e-12 * abs(cls.mass)


class CoefficientField(GridFunction):
    """A thickness or density field, optionally tied to its admissible class.

    With ``cls=None`` only positivity-free storage is provided; this is used
    for derived coefficients such as ``J_-(rho)`` and for reference fields
    like ``D = 1`` that sit on the boundary of every class.
    """

    def __init__(self, grid: Grid, values, cls=None, check_mass: bool = True):
        super().__init__(grid, values)
        self.cls = cls
        if cls is not None:
            cls.check_feasible(grid)
            v = self.values
            if v.min() < cls.lo or v.max() > cls.hi:
                raise InvalidArgument(
                    f"{cls.kind} values must lie in [{cls.lo}, {cls.hi}], "
                    f"got [{v.min():.6g}, {v.max():.6g}]"
                )
            if check_mass:
                err = self.mass_error
                if err > mass_tolerance(grid, cls):
                    raise InvalidArgument(f"{cls.kind} mass off by {err:.3e}")

    @classmethod
    def constant(cls_, grid: Grid, value: float, cls=None) -> "CoefficientField":
        return cls_(grid, np.full(grid.size, float(value)), cls)

    @property
    def mass_error(self) -> float:
        if self.cls is None:
            return 0.0
        return abs(integrate(self.grid, self.values) - self.cls.mass)

    def with_values(self, values) -> "CoefficientField":
        return CoefficientField(self.grid, values, self.cls)

    def is_bang_bang(self) -> bool:
        if self.cls is None:
            return False
        v = self.values
        return bool(np.all((v == self.cls.lo) | (v == self.cls.hi)))


def _coefficient_values(grid: Grid, c, name: str) -> np.ndarray:
    if isinstance(c, GridFunction):
        if c.grid != grid:
            raise InvalidArgument(f"{name} lives on {c.grid!r}, expected {grid!r}")
        return c.values
    arr = np.asarray(c, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.size, float(arr))
    if arr.shape != (grid.size,):
        raise InvalidArgument(f"{name} has shape {arr.shape}, expected ({grid.size},)")
    return arr


def jminus(alpha: float, rho) -> CoefficientField:
    """Harmonic mean ``(1 + alpha) / (1 + alpha (1 - rho))`` of the two phases."""
    if alpha < 0:
        raise InvalidArgument(f"alpha must be nonnegative, got {alpha}")
    grid = rho.grid
    r = rho.values
    return CoefficientField(grid, (1.0 + alpha) / (1.0 + alpha * (1.0 - r)))


# -- eigenpairs --------------------------------------------------------------

@dataclass(frozen=True)
class EigenPair:
    """First eigenpair of one of the plate problems.

    ``u`` is L2-normalised and nonnegative; ``z = -C Delta u`` where ``C`` is
    the stiffness coefficient of the problem.
    """

    eigenvalue: float
    u: GridFunction
    z: GridFunction
    residual: float
    iterations: int
    tol: float
    problem: str
    stiffness: GridFunction
    rho: GridFunction | None = None
    alpha: float = 0.0
    shift: float = 0.0
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @property
    def laplacian_u(self) -> np.ndarray:
        """``Delta u`` recovered from the auxiliary field as ``-z / C``."""
        return -self.z.values / self.stiffness.values

    def record(self) -> dict:
        return {
            "problem": self.problem,
            "eigenvalue": self.eigenvalue,
            "residual": self.residual,
            "iterations": self.iterations,
            "alpha": self.alpha,
        }

    def export(self, out_dir, stem: str = "eigen") -> dict:
        """Write ``<stem>.json`` and CSV dumps of ``u`` and ``z``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "json": out / f"{stem}.json",
            "u": out / f"{stem}_u.csv",
            "z": out / f"{stem}_z.csv",
        }
        with open(paths["json"], "w") as fh:
            json.dump(self.record(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        write_csv(self.u, paths["u"])
        write_csv(self.z, paths["z"])
        return paths


def _cartesian_block_solver(grid: CartesianGrid, cinv, q):
    A = grid.stiffness
    B = sp.bmat([[A, -sp.diags(cinv)], [-sp.diags(q), A]], format="csc")
    lu = spla.splu(B)
    n = grid.size

    def solve(x):
        b = np.zeros(2 * n)
        b[n:] = x
        y = lu.solve(b)
        return y[:n], y[n:]

    return solve


def _first_eigenpair(grid, stiffness, rho, sigma, tol, maxiter):
    cinv = 1.0 / stiffness
    q = rho + sigma
    x0 = np.ones(grid.size)
    if isinstance(grid, RadialGrid):
        lower, diag, upper = grid.tridiagonal
        return kernels.inverse_power(
            lower, diag, upper, grid.weights, cinv, q, float(sigma), x0, float(tol), int(maxiter)
        )
    try:
        solve = _cartesian_block_solver(grid, cinv, q)
    except RuntimeError as exc:  # splu reports exact singularity this way
        raise ZeroDivisionError(str(exc)) from exc
    return kernels.power_loop(solve, grid.weights, sigma, x0, tol, maxiter)


def _eigen(grid, stiffness, rho, sigma, tol, maxiter, problem, alpha, stiffness_field, rho_field):
    if not tol > 0:
        raise InvalidArgument(f"tol must be positive, got {tol}")
    if np.any(stiffness <= 0):
        raise InvalidArgument("stiffness coefficient must be positive")
    try:
        lam, u, z, res, its, ok = _first_eigenpair(grid, stiffness, rho, sigma, tol, maxiter)
    except ZeroDivisionError:
        # Shift landed on the spectrum; nudge it below.
        sigma = sigma - 1e-6
        try:
            lam, u, z, res, its, ok = _first_eigenpair(grid, stiffness, rho, sigma, tol, maxiter)
        except ZeroDivisionError as exc:
            raise NumericFailure(f"singular shifted system for {problem}") from exc
    if not ok:
        raise NumericFailure(f"{problem} eigen-solve did not converge in {its} iterations", res)
    if np.dot(grid.weights, u) < 0:
        u, z = -u, -z
    u = np.where(np.abs(u) < SIGN_CLAMP, 0.0, u)
    z = np.where(np.abs(z) < SIGN_CLAMP, 0.0, z)
    return EigenPair(
        eigenvalue=float(lam),
        u=GridFunction(grid, u),
        z=GridFunction(grid, z),
        residual=float(res),
        iterations=int(its),
        tol=float(tol),
        problem=problem,
        stiffness=stiffness_field,
        rho=rho_field,
        alpha=float(alpha),
        shift=float(sigma),
    )


def _check_grid(grid: Grid, f: GridFunction, name: str):
    if isinstance(f, GridFunction) and f.grid != grid:
        raise InvalidArgument(f"{name} lives on {f.grid!r}, expected {grid!r}")


def eigen_mu(grid: Grid, D, tol: float = DEFAULT_TOL, maxiter: int = DEFAULT_MAXITER) -> EigenPair:
    """First eigenpair of ``Delta(D Delta u) = mu u`` with hinged edges."""
    _check_grid(grid, D, "D")
    Dv = _coefficient_values(grid, D, "D")
    field_ = D if isinstance(D, GridFunction) else CoefficientField(grid, Dv)
    return _eigen(grid, Dv, np.zeros(grid.size), 0.0, tol, maxiter, "mu", 0.0, field_, None)


def _density(grid, rho):
    _check_grid(grid, rho, "rho")
    rv = _coefficient_values(grid, rho, "rho")
    if rv.min() < 0.0 or rv.max() > 1.0:
        raise InvalidArgument("density values must lie in [0, 1]")
    field_ = rho if isinstance(rho, GridFunction) else CoefficientField(grid, rv)
    return rv, field_


def eigen_lambda(grid: Grid, alpha: float, rho, tol: float = DEFAULT_TOL,
                 maxiter: int = DEFAULT_MAXITER) -> EigenPair:
    """First eigenpair of ``Delta((1 + alpha rho) Delta u) = (lambda + rho) u``."""
    if alpha < 0:
        raise InvalidArgument(f"alpha must be nonnegative, got {alpha}")
    rv, rho_field = _density(grid, rho)
    C = CoefficientField(grid, 1.0 + alpha * rv)
    return _eigen(grid, C.values, rv, -1.0, tol, maxiter, "lambda", alpha, C, rho_field)


def eigen_Lambda(grid: Grid, alpha: float, rho, tol: float = DEFAULT_TOL,
                 maxiter: int = DEFAULT_MAXITER) -> EigenPair:
    """First eigenpair of the harmonic-mean relaxation ``Lambda_alpha(rho)``."""
    if alpha < 0:
        raise InvalidArgument(f"alpha must be nonnegative, got {alpha}")
    rv, rho_field = _density(grid, rho)
    C = jminus(alpha, CoefficientField(grid, rv))
    return _eigen(grid, C.values, rv, -1.0, tol, maxiter, "Lambda", alpha, C, rho_field)


@functools.lru_cache(maxsize=32)
def eta1(grid: Grid) -> float:
    """First eigenvalue of the homogeneous hinged plate (``D = 1``)."""
    return eigen_mu(grid, np.ones(grid.size)).eigenvalue


# -- Rayleigh quotients ------------------------------------------------------

def _rayleigh(grid, stiffness, rho, u):
    uv = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    if isinstance(u, GridFunction) and u.grid != grid:
        raise InvalidArgument("u lives on another grid")
    den = integrate(grid, uv * uv)
    if den == 0.0:
        raise InvalidArgument("Rayleigh quotient of the zero function")
    lap = apply_laplacian(grid, uv).values
    return (integrate(grid, stiffness * lap * lap) - integrate(grid, rho * uv * uv)) / den


def rayleigh_mu(grid: Grid, D, u) -> float:
    """``integral(D (Delta u)^2) / integral(u^2)``."""
    return _rayleigh(grid, _coefficient_values(grid, D, "D"), 0.0, u)


def rayleigh_lambda(grid: Grid, alpha: float, rho, u) -> float:
    """``(integral((1 + alpha rho)(Delta u)^2) - integral(rho u^2)) / integral(u^2)``."""
    rv = _coefficient_values(grid, rho, "rho")
    return _rayleigh(grid, 1.0 + alpha * rv, rv, u)


def rayleigh_Lambda(grid: Grid, alpha: float, rho, u) -> float:
    """Rayleigh quotient of the harmonic-mean relaxation."""
    rv = _coefficient_values(grid, rho, "rho")
    return _rayleigh(grid, (1.0 + alpha) / (1.0 + alpha * (1.0 - rv)), rv, u)

"""Schwarz rearrangement, majorization, the bathtub principle and Talenti checks.

A discrete nonnegative function is a step function: value ``f_i`` on a cell
of measure ``w_i``.  Its Schwarz rearrangement is again a step function,
obtained by sorting the cells by decreasing value and stacking them as
concentric annuli around the origin.  The rearranged function therefore lives
on a radial grid whose faces are ``sqrt(m_k / pi)`` for the cumulative sorted
measures ``m_k``.  This makes the discrete rearrangement exactly
equimeasurable.  For Cartesian sources every cell has the same measure, so
all rearrangements share one equal-area radial grid.  For a radial source
that is already non-increasing the source grid itself is returned.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .grid import CartesianGrid, Grid, GridFunction, RadialGrid, norm, solve_poisson
from .spectral import CoefficientField

# Tolerance constant of the discrete Talenti comparison, in units of h ||psi||_2.
TALENTI_C = 1.0


def _require_nonnegative(f: GridFunction, name: str = "f") -> None:
    if np.any(f.values < 0):
        raise InvalidArgument(f"{name} must be nonnegative (min {f.values.min():.3e})")


@functools.lru_cache(maxsize=16)
def _equal_area_grid(grid: CartesianGrid) -> RadialGrid:
    n = grid.size
    w = grid.weights[0]
    faces = np.sqrt(np.arange(n + 1) * w / np.pi)
    faces[-1] = np.sqrt(grid.area / np.pi)
    return RadialGrid(faces)


def _target_grid(grid: Grid, order: np.ndarray) -> RadialGrid:
    if isinstance(grid, CartesianGrid):
        return _equal_area_grid(grid)
    if np.array_equal(order, np.arange(grid.size)):
        return grid
    m = np.concatenate([[0.0], np.cumsum(grid.weights[order])])
    faces = np.sqrt(m / np.pi)
    faces[-1] = grid.R
    return RadialGrid(faces)


def schwarz(f: GridFunction) -> GridFunction:
    """Schwarz (decreasing) rearrangement of a nonnegative grid function."""
    _require_nonnegative(f)
    order = np.argsort(-f.values, kind="stable")
    return GridFunction(_target_grid(f.grid, order), f.values[order])


@dataclass(frozen=True)
class RearrangementReport:
    original_norm: float
    rearranged_norm: float
    monotone: bool
    target_grid: RadialGrid
    rearranged: GridFunction


def rearrangement_report(f: GridFunction) -> RearrangementReport:
    fs = schwarz(f)
    return RearrangementReport(
        original_norm=norm(f.grid, f),
        rearranged_norm=norm(fs.grid, fs),
        monotone=bool(np.all(np.diff(fs.values) <= 0)),
        target_grid=fs.grid,
        rearranged=fs,
    )


def distribution(f: GridFunction, t: float) -> float:
    """Measure of the superlevel set ``{f > t}``."""
    return float(f.grid.weights[f.values > t].sum())


def _cumulative(fs: GridFunction):
    """Breakpoints (in measure) and values of ``m -> integral of f# over B(m)``."""
    edges = np.concatenate([[0.0], np.cumsum(fs.grid.weights)])
    F = np.concatenate([[0.0], np.cumsum(fs.grid.weights * fs.values)])
    return edges, F


def rearranged_inner(f: GridFunction, g: GridFunction) -> float:
    """``integral(f# g#)`` computed exactly on the merged measure breakpoints."""
    _require_nonnegative(f)
    _require_nonnegative(g)
    fs, gs = schwarz(f), schwarz(g)
    ef = np.concatenate([[0.0], np.cumsum(fs.grid.weights)])
    eg = np.concatenate([[0.0], np.cumsum(gs.grid.weights)])
    top = min(ef[-1], eg[-1])
    edges = np.union1d(ef[ef <= top], eg[eg <= top])
    mid = 0.5 * (edges[1:] + edges[:-1])
    vf = fs.values[np.clip(np.searchsorted(ef, mid, side="right") - 1, 0, fs.values.size - 1)]
    vg = gs.values[np.clip(np.searchsorted(eg, mid, side="right") - 1, 0, gs.values.size - 1)]
    return float(np.sum(np.diff(edges) * vf * vg))


@dataclass(frozen=True)
class MajorizationResult:
    holds: bool
    mass_gap: float
    max_excess: float


def majorization(f: GridFunction, g: GridFunction, rtol: float = 1e-9) -> MajorizationResult:
    """Compare cumulative radial integrals of ``f#`` and ``g#``.

    ``max_excess`` is the largest amount by which the partial integral of
    ``f#`` exceeds that of ``g#``; ``mass_gap`` is the difference of totals.
    """
    _require_nonnegative(f)
    _require_nonnegative(g)
    if not np.isclose(f.grid.area, g.grid.area, rtol=1e-12, atol=0.0):
        raise InvalidArgument("majorization needs domains of equal area")
    ef, Ff = _cumulative(schwarz(f))
    eg, Fg = _cumulative(schwarz(g))
    edges = np.union1d(ef, eg)
    diff = np.interp(edges, ef, Ff) - np.interp(edges, eg, Fg)
    tol = rtol * max(Ff[-1], Fg[-1], np.finfo(float).tiny)
    mass_gap = float(Ff[-1] - Fg[-1])
    max_excess = float(diff.max())
    holds = max_excess <= tol and abs(mass_gap) <= tol
    return MajorizationResult(holds, mass_gap, max_excess)


def majorizes(f: GridFunction, g: GridFunction, rtol: float = 1e-9) -> bool:
    """``True`` iff ``f`` precedes ``g`` in the rearrangement order."""
    return majorization(f, g, rtol).holds


def bathtub(switch: GridFunction, mass: float, lo: float, hi: float, cls=None,
            prefer_outer: bool = False, strict: bool = False) -> CoefficientField:
    """Minimise ``integral(switch * c)`` over ``lo <= c <= hi``, ``integral(c) = mass``.

    Cells are filled at ``hi`` in increasing order of ``switch``; ties are
    broken by radius (innermost first, or outermost with ``prefer_outer``)
    and then by node index.  One cell may carry an intermediate value so the
    mass is met exactly.  With ``strict=True`` that cell is rounded to
    ``lo`` or ``hi``, whichever is closer in mass.
    """
    if not lo < hi:
        raise InvalidArgument(f"need lo < hi, got {lo}, {hi}")
    grid = switch.grid
    w = grid.weights
    area = grid.area
    eps = 1e-12 * max(area, abs(mass))
    if mass < lo * area - eps or mass > hi * area + eps:
        raise InvalidArgument(
            f"mass {mass:.6g} infeasible for bounds [{lo}, {hi}] on area {area:.6g}"
        )
    radius = grid.radius
    order = np.lexsort((np.arange(grid.size), -radius if prefer_outer else radius, switch.values))
    budget = (mass - lo * area) / (hi - lo)
    cum = np.cumsum(w[order])
    full = int(np.searchsorted(cum, budget + eps, side="right"))
    values = np.full(grid.size, float(lo))
    values[order[:full]] = hi
    if full < grid.size:
        rem = budget - (cum[full - 1] if full > 0 else 0.0)
        k = order[full]
        if rem > eps:
            frac = min(rem / w[k], 1.0)
            if strict:
                values[k] = hi if frac >= 0.5 else lo
            else:
                values[k] = lo + (hi - lo) * frac
    return CoefficientField(grid, values, cls)


@dataclass(frozen=True)
class TalentiResult:
    """Outcome of a discrete Talenti comparison.

    ``lhs`` is ``phi#`` and ``rhs`` is ``phi~`` sampled at the nodes of
    ``lhs.grid``.
    """

    lhs: GridFunction
    rhs: GridFunction
    ok: bool
    max_violation: float
    tol: float

    def write_csv(self, path) -> None:
        data = np.column_stack([self.lhs.grid.r, self.lhs.values, self.rhs.values])
        np.savetxt(path, data, delimiter=",", header="r,phi_sharp,phi_tilde", comments="",
                   fmt="%.17g")


def _sample_radial(f: GridFunction, r: np.ndarray) -> np.ndarray:
    grid = f.grid
    if np.array_equal(grid.r, r):
        return f.values
    rr = np.concatenate([grid.r, [grid.R]])
    vv = np.concatenate([f.values, [0.0]])
    return np.interp(r, rr, vv)


def talenti_check(psi: GridFunction, C: float = TALENTI_C) -> TalentiResult:
    """Check ``phi# <= phi~`` node-wise up to ``C h ||psi||_2``.

    ``phi`` solves ``-Delta phi = psi`` on the grid of ``psi``; ``phi~`` solves
    ``-Delta phi~ = psi#`` on the disk of the same area.
    """
    _require_nonnegative(psi, "psi")
    phi = solve_poisson(psi.grid, psi)
    lhs = schwarz(phi)
    psi_s = schwarz(psi)
    phi_t = solve_poisson(psi_s.grid, psi_s)
    rhs = GridFunction(lhs.grid, _sample_radial(phi_t, lhs.grid.r))
    tol = C * psi.grid.h * norm(psi.grid, psi)
    violation = float(np.max(lhs.values - rhs.values))
    return TalentiResult(lhs, rhs, violation <= tol, violation, tol)

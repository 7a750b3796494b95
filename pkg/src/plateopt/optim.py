"""Bang-bang descent for thickness and density.

Each step linearises the eigenvalue around the current coefficient,

    d eigenvalue [h] = integral(switch * h),

and replaces the coefficient by the minimiser of the linearisation over the
admissible class (:func:`plateopt.rearrange.bathtub`).  Every eigenvalue
handled here is concave in its coefficient, so the linearisation lies above
the eigenvalue and the step can never increase it.

Switch functions
----------------
thickness  ``(Delta u_D)^2``
density    ``a/(1+a) J_-(rho)^2 (Delta v)^2 - v^2``  (harmonic-mean relaxation)
lambda     ``a (Delta u)^2 - u^2``                   (plain density problem)
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidArgument
from .grid import Grid, GridFunction, integrate, write_csv
from .rearrange import bathtub
from .spectral import (
    DEFAULT_TOL,
    CoefficientField,
    DensityClass,
    EigenPair,
    ThicknessClass,
    eigen_lambda,
    eigen_Lambda,
    eigen_mu,
)

logger = logging.getLogger(__name__)

DESCENT_SLACK = 1e-9


class SwitchField(GridFunction):
    """Integrand of an eigenvalue's directional derivative."""

    def __init__(self, grid: Grid, values, kind: str):
        super().__init__(grid, values)
        self.kind = kind


def _check_pair(grid, pair: EigenPair, problem: str, coefficient: GridFunction, alpha=None):
    if pair.problem != problem:
        raise InvalidArgument(f"expected a {problem} eigenpair, got {pair.problem}")
    if pair.grid != grid:
        raise InvalidArgument("eigenpair lives on another grid")
    if pair.residual > pair.tol * max(1.0, abs(pair.eigenvalue)):
        raise InvalidArgument(f"stale eigenpair (residual {pair.residual:.3e})")
    source = pair.stiffness if problem == "mu" else pair.rho
    if source is None or not np.array_equal(source.values, coefficient.values):
        raise InvalidArgument("eigenpair was computed for a different coefficient")
    if alpha is not None and pair.alpha != alpha:
        raise InvalidArgument(f"eigenpair computed at alpha={pair.alpha}, not {alpha}")


def switch_mu(grid: Grid, D: GridFunction, pair: EigenPair) -> SwitchField:
    """Thickness switch ``(Delta u_D)^2``."""
    _check_pair(grid, pair, "mu", D)
    lap = pair.laplacian_u
    return SwitchField(grid, lap * lap, "mu_thickness")


def switch_lambda(grid: Grid, alpha: float, rho: GridFunction, pair: EigenPair) -> SwitchField:
    """Relaxed density switch, from a ``Lambda`` eigenpair.

    Uses ``J_-(rho) Delta v = -z`` so the first term is ``a/(1+a) z^2``.
    """
    _check_pair(grid, pair, "Lambda", rho, alpha)
    v, z = pair.u.values, pair.z.values
    return SwitchField(grid, alpha / (1.0 + alpha) * z * z - v * v, "lambda_density")


def switch_lambda_plain(grid: Grid, alpha: float, rho: GridFunction, pair: EigenPair) -> SwitchField:
    """Switch ``alpha (Delta u)^2 - u^2`` of the unrelaxed problem."""
    _check_pair(grid, pair, "lambda", rho, alpha)
    u, lap = pair.u.values, pair.laplacian_u
    return SwitchField(grid, alpha * lap * lap - u * u, "lambda_plain")


# -- configuration and traces -------------------------------------------------

@dataclass
class OptimizerConfig:
    max_iterations: int = 200
    stop_sym_diff: float = 1e-12
    eigen_tol: float = DEFAULT_TOL
    strict_bang_bang: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 0:
            raise InvalidArgument("max_iterations must be nonnegative")
        if not (self.stop_sym_diff > 0 and self.eigen_tol > 0):
            raise InvalidArgument("tolerances must be positive")


@dataclass
class Iterate:
    eigenvalue: float
    coefficient: CoefficientField
    switch: SwitchField
    sym_diff_volume: float
    mass_error: float


@dataclass
class OptimizationTrace:
    kind: str
    alpha: float
    iterates: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.iterates) - 1

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([it.eigenvalue for it in self.iterates])

    @property
    def final(self) -> CoefficientField:
        return self.iterates[-1].coefficient

    def max_increase(self) -> float:
        e = self.eigenvalues
        return float(np.max(np.diff(e))) if e.size > 1 else 0.0

    def is_monotone(self, slack: float = DESCENT_SLACK) -> bool:
        return self.max_increase() <= slack

    def records(self):
        for k, it in enumerate(self.iterates):
            sd = it.sym_diff_volume
            yield {
                "iter": k,
                "eigenvalue": it.eigenvalue,
                "sym_diff": None if math.isnan(sd) else sd,
                "mass_error": it.mass_error,
            }

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.records():
                fh.write(json.dumps(rec) + "\n")

    def write_final_csv(self, path) -> None:
        write_csv(self.final, path)


def sym_diff_volume(a: CoefficientField, b: CoefficientField) -> float:
    """Volume of the symmetric difference, measured as ``integral|a - b| / (hi - lo)``."""
    cls = a.cls or b.cls
    span = (cls.hi - cls.lo) if cls is not None else 1.0
    return integrate(a.grid, np.abs(a.values - b.values)) / span


def _evaluate(kind: str, c: CoefficientField, alpha: float, tol: float):
    if kind == "thickness":
        pair = eigen_mu(c.grid, c, tol)
        return pair, switch_mu(c.grid, c, pair)
    pair = eigen_Lambda(c.grid, alpha, c, tol)
    return pair, switch_lambda(c.grid, alpha, c, pair)


def _descend(kind: str, c: CoefficientField, sw: SwitchField, config: OptimizerConfig):
    cls = c.cls
    return bathtub(
        sw, cls.mass, cls.lo, cls.hi, cls,
        prefer_outer=(kind == "thickness"),
        strict=config.strict_bang_bang,
    )


def _require_class(c: CoefficientField, expected):
    if not isinstance(c, CoefficientField) or not isinstance(c.cls, expected):
        raise InvalidArgument(f"need a CoefficientField in a {expected.__name__}")


def step_thickness(D: CoefficientField, config: OptimizerConfig | None = None) -> CoefficientField:
    """One bathtub step for the thickness problem."""
    config = config or OptimizerConfig()
    _require_class(D, ThicknessClass)
    pair, sw = _evaluate("thickness", D, 0.0, config.eigen_tol)
    return _descend("thickness", D, sw, config)


def step_density(alpha: float, rho: CoefficientField,
                 config: OptimizerConfig | None = None) -> CoefficientField:
    """One bathtub step for the density problem, on the relaxed eigenvalue."""
    config = config or OptimizerConfig()
    _require_class(rho, DensityClass)
    pair, sw = _evaluate("density", rho, alpha, config.eigen_tol)
    return _descend("density", rho, sw, config)


def optimize(kind: str, init: CoefficientField, config: OptimizerConfig | None = None,
             alpha: float = 0.0) -> OptimizationTrace:
    """Iterate bathtub steps until the field stops moving.

    ``kind`` is ``"thickness"`` (minimise ``mu``) or ``"density"`` (minimise
    the relaxed ``Lambda_alpha``, which equals ``lambda_alpha`` on bang-bang
    fields).  Non-convergence is reported through ``trace.converged``.
    """
    config = config or OptimizerConfig()
    if kind not in ("thickness", "density"):
        raise InvalidArgument(f"unknown optimisation kind {kind!r}")
    _require_class(init, ThicknessClass if kind == "thickness" else DensityClass)
    if alpha < 0:
        raise InvalidArgument("alpha must be nonnegative")

    trace = OptimizationTrace(kind=kind, alpha=float(alpha))
    pair, sw = _evaluate(kind, init, alpha, config.eigen_tol)
    trace.iterates.append(Iterate(pair.eigenvalue, init, sw, float("nan"), init.mass_error))
    current = init
    for k in range(config.max_iterations):
        new = _descend(kind, current, sw, config)
        sd = sym_diff_volume(new, current)
        pair, sw = _evaluate(kind, new, alpha, config.eigen_tol)
        prev = trace.iterates[-1].eigenvalue
        if pair.eigenvalue > prev + DESCENT_SLACK:
            logger.warning("eigenvalue rose by %.3e at step %d", pair.eigenvalue - prev, k + 1)
        trace.iterates.append(Iterate(pair.eigenvalue, new, sw, sd, new.mass_error))
        current = new
        if sd <= config.stop_sym_diff:
            trace.converged = True
            break
    return trace


# -- derivative validation --------------------------------------------------

def _eigenvalue(kind: str, values: np.ndarray, grid: Grid, alpha: float, tol: float) -> float:
    if kind == "thickness":
        return eigen_mu(grid, values, tol).eigenvalue
    if kind == "density":
        return eigen_Lambda(grid, alpha, values, tol).eigenvalue
    return eigen_lambda(grid, alpha, values, tol).eigenvalue


def _analytic_derivative(kind, point, direction, alpha, tol):
    grid = point.grid
    if kind == "thickness":
        pair = eigen_mu(grid, point, tol)
        sw = switch_mu(grid, point, pair)
    elif kind == "density":
        pair = eigen_Lambda(grid, alpha, point, tol)
        sw = switch_lambda(grid, alpha, point, pair)
    else:
        pair = eigen_lambda(grid, alpha, point, tol)
        sw = switch_lambda_plain(grid, alpha, point, pair)
    return integrate(grid, sw.values * direction)


def fd_check(kind: str, point: CoefficientField, direction, t_values=(1e-3, 1e-4, 1e-5),
             alpha: float = 0.0, tol: float = DEFAULT_TOL) -> float:
    """Relative gap between a switch-based derivative and centred differences.

    ``kind`` is ``"thickness"`` (``mu``), ``"density"`` (relaxed ``Lambda``)
    or ``"lambda"`` (plain ``lambda``).  The error is evaluated for each step
    in ``t_values`` and the smallest one is returned, which is the step that
    best balances truncation against solver error.
    """
    if kind not in ("thickness", "density", "lambda"):
        raise InvalidArgument(f"unknown kind {kind!r}")
    grid = point.grid
    h = direction.values if isinstance(direction, GridFunction) else np.asarray(direction, float)
    if h.shape != (grid.size,):
        raise InvalidArgument("direction has the wrong shape")
    if not t_values:
        raise InvalidArgument("need at least one step size")
    scale = integrate(grid, np.abs(h))
    if abs(integrate(grid, h)) > 1e-10 * max(scale, 1e-300):
        raise InvalidArgument("direction must have zero mean")
    lo, hi = (1.0, np.inf) if point.cls is None and kind == "thickness" else (0.0, 1.0)
    if point.cls is not None:
        lo, hi = point.cls.lo, point.cls.hi
    tmax = max(abs(t) for t in t_values)
    p = point.values
    if np.any(p + tmax * np.abs(h) > hi) or np.any(p - tmax * np.abs(h) < lo):
        raise InvalidArgument("direction leaves the admissible class")

    exact = _analytic_derivative(kind, point, h, alpha, tol)
    errors = []
    for t in t_values:
        fp = _eigenvalue(kind, p + t * h, grid, alpha, tol)
        fm = _eigenvalue(kind, p - t * h, grid, alpha, tol)
        fd = (fp - fm) / (2.0 * t)
        denom = max(abs(exact), abs(fd))
        errors.append(0.0 if denom == 0.0 else abs(fd - exact) / denom)
    return float(min(errors))


# -- reference and random fields ---------------------------------------------

def centered_ball(grid: Grid, cls: DensityClass, strict: bool = False) -> CoefficientField:
    """Indicator of the centred ball of volume ``rho0``."""
    return bathtub(grid.function(grid.radius), cls.mass, cls.lo, cls.hi, cls, strict=strict)


def boundary_annulus(grid: Grid, cls: ThicknessClass, strict: bool = False) -> CoefficientField:
    """``1 + beta0`` on the outer annulus of volume ``(D0 - |Omega|) / beta0``, 1 inside."""
    return bathtub(grid.function(-grid.radius), cls.mass, cls.lo, cls.hi, cls,
                   prefer_outer=True, strict=strict)


def _smooth_noise(grid: Grid, rng: np.random.Generator, modes: int,
                  decay: bool = True) -> np.ndarray:
    coords = grid.coordinates
    if len(coords) == 1:
        s = coords[0] / grid.R
        k = np.arange(modes)
        a = rng.normal(size=modes) / ((1.0 + k) if decay else 1.0)
        ph = rng.uniform(0, 2 * np.pi, size=modes)
        return np.cos(np.pi * np.outer(s, k) + ph) @ a
    x, y = coords[0] / grid.Lx, coords[1] / grid.Ly
    out = np.zeros(grid.size)
    for i in range(modes):
        for j in range(modes):
            a = rng.normal() / ((1.0 + i + j) if decay else 1.0)
            out += a * np.cos(np.pi * i * x + rng.uniform(0, 2 * np.pi)) * np.cos(
                np.pi * j * y + rng.uniform(0, 2 * np.pi))
    return out


def project_to_class(grid: Grid, values: np.ndarray, cls) -> CoefficientField:
    """Shift and clip ``values`` so they meet the bounds and the mass of ``cls``."""
    w = grid.weights

    def excess(s):
        return float(np.dot(w, np.clip(values + s, cls.lo, cls.hi))) - cls.mass

    span = cls.hi - cls.lo
    a = cls.lo - values.max() - span
    b = cls.hi - values.min() + span
    s = brentq(excess, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    v = np.clip(values + s, cls.lo, cls.hi)
    # Put the residual mass error on the node with the most room.
    err = cls.mass - float(np.dot(w, v))
    room = (cls.hi - v) if err > 0 else (v - cls.lo)
    k = int(np.argmax(room * w))
    v[k] = np.clip(v[k] + err / w[k], cls.lo, cls.hi)
    return CoefficientField(grid, v, cls)


def random_admissible(grid: Grid, cls, rng: np.random.Generator, modes: int = 6,
                      smooth: bool = True) -> CoefficientField:
    """A random element of the class (smooth random profile, projected)."""
    span = cls.hi - cls.lo
    if smooth:
        noise = _smooth_noise(grid, rng, modes)
        noise = noise / max(np.abs(noise).max(), 1e-300)
    else:
        noise = rng.uniform(-1.0, 1.0, size=grid.size)
    base = cls.mass / grid.area
    return project_to_class(grid, base + 0.6 * span * noise, cls)


def random_bang_bang(grid: Grid, cls, rng: np.random.Generator, modes: int = 6,
                     smooth: bool = True, strict: bool = False) -> CoefficientField:
    """A random bang-bang element, as a sublevel set of a random profile.

    Without ``strict`` one mixed node keeps the mass exact, so competitors
    are compared at exactly the class mass.
    """
    if smooth:
        sw = _smooth_noise(grid, rng, modes, decay=False)
    else:
        sw = rng.normal(size=grid.size)
    return bathtub(grid.function(sw), cls.mass, cls.lo, cls.hi, cls, strict=strict)


def random_direction(point: CoefficientField, rng: np.random.Generator, modes: int = 4,
                     margin: float = 0.5, min_room: float = 0.05) -> np.ndarray:
    """Smooth zero-mean direction supported where ``point`` is off its bounds.

    The support is the set of nodes with at least ``min_room`` (relative to
    the bound span) on both sides; the result is scaled so that
    ``point +- t h`` stays admissible for ``|t| <= margin``.
    """
    grid = point.grid
    cls = point.cls
    span = cls.hi - cls.lo
    room = np.minimum(point.values - cls.lo, cls.hi - point.values)
    support = room >= min_room * span
    if not support.any():
        return np.zeros(grid.size)
    h = _smooth_noise(grid, rng, modes, decay=False) * support
    h -= integrate(grid, h) / integrate(grid, support.astype(float)) * support
    peak = np.max(np.abs(h[support]) / room[support])
    return h * (margin / peak) if peak > 0 else h


# -- stability probe ---------------------------------------------------------

@dataclass
class StabilityRow:
    alpha: float
    distances: list
    converged: list

    @property
    def max_distance(self) -> float:
        return max(self.distances)


def stability_probe(grid: Grid, cls: DensityClass, alphas, seeds, config: OptimizerConfig | None = None,
                    threshold: float | None = None, traces: list | None = None):
    """Optimise the density from several random radial starts for each ``alpha``.

    Returns ``(rows, break_alpha)`` where ``break_alpha`` is the first
    ``alpha`` whose optimiser lands farther than ``threshold`` (default one
    cell) in L1 from the centred ball, or ``None`` if none does.
    """
    config = config or OptimizerConfig()
    target = centered_ball(grid, cls)
    threshold = grid.max_cell_weight if threshold is None else threshold
    rows = []
    broke = None
    for alpha in alphas:
        dists, conv = [], []
        for seed in seeds:
            rng = np.random.default_rng(seed)
            init = random_admissible(grid, cls, rng)
            tr = optimize("density", init, config, alpha=alpha)
            if traces is not None:
                traces.append(tr)
            dists.append(integrate(grid, np.abs(tr.final.values - target.values)))
            conv.append(tr.converged)
        row = StabilityRow(float(alpha), dists, conv)
        rows.append(row)
        if broke is None and row.max_distance > threshold:
            broke = float(alpha)
    return rows, broke


def bisect_break_alpha(grid: Grid, cls: DensityClass, alpha_ok: float, alpha_broken: float,
                       seeds, config: OptimizerConfig | None = None,
                       threshold: float | None = None, steps: int = 8):
    """Narrow ``[alpha_ok, alpha_broken]`` around the loss of the centred-ball fixed point.

    ``alpha_ok`` must keep every seed within ``threshold`` of the ball and
    ``alpha_broken`` must not.  Returns the final bracket.
    """
    lo, hi = float(alpha_ok), float(alpha_broken)
    if not lo < hi:
        raise InvalidArgument("need alpha_ok < alpha_broken")
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        _, broke = stability_probe(grid, cls, [mid], seeds, config, threshold)
        if broke is None:
            lo = mid
        else:
            hi = mid
    return lo, hi

"""Randomised property suites.

Each suite returns a :class:`SuiteResult` with pass/fail counts per check
and the worst observed value of the checked quantity, so callers (CLI,
acceptance tests) can print a one-line summary or inspect details.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, GridFunction, build_cartesian_grid, build_radial_grid, integrate, norm
from .optim import fd_check, random_admissible, random_bang_bang, random_direction
from .rearrange import bathtub, distribution, rearranged_inner, schwarz, talenti_check
from .spectral import (
    DensityClass,
    ThicknessClass,
    eigen_lambda,
    eigen_Lambda,
    eigen_mu,
    eta1,
)

SUITES = ("talenti", "concavity", "positivity", "derivative", "rearrange")


@dataclass
class Check:
    passed: int = 0
    failed: int = 0
    worst: float = -np.inf

    def record(self, ok: bool, value: float) -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
        self.worst = max(self.worst, float(value))


@dataclass
class SuiteResult:
    name: str
    checks: dict = field(default_factory=dict)

    def check(self, key: str) -> Check:
        return self.checks.setdefault(key, Check())

    @property
    def passed(self) -> int:
        return sum(c.passed for c in self.checks.values())

    @property
    def failed(self) -> int:
        return sum(c.failed for c in self.checks.values())

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def lines(self):
        for key, c in self.checks.items():
            yield f"{self.name}.{key}: passed={c.passed} failed={c.failed} worst={c.worst:.3e}"


def default_grids(radial_nodes: int = 200, square_nodes: int = 40):
    return build_radial_grid(1.0, radial_nodes), build_cartesian_grid(1.0, 1.0, square_nodes, square_nodes)


def _random_nonnegative(grid: Grid, rng: np.random.Generator) -> GridFunction:
    kind = rng.integers(3)
    if kind == 0:
        v = rng.uniform(0.0, 1.0, grid.size)
    elif kind == 1:
        v = rng.exponential(1.0, grid.size) * (rng.uniform(size=grid.size) < 0.3)
    else:
        # smooth bump at a random centre
        c = [rng.uniform(-0.5, 0.5) * grid.radius.max() for _ in grid.coordinates]
        if len(grid.coordinates) == 1:
            d2 = (grid.coordinates[0] - abs(c[0])) ** 2
        else:
            x, y = grid.coordinates
            d2 = (x - grid.Lx / 2 - c[0]) ** 2 + (y - grid.Ly / 2 - c[1]) ** 2
        v = np.exp(-d2 / rng.uniform(0.005, 0.1))
    if not np.any(v > 0):
        v[rng.integers(grid.size)] = 1.0
    return grid.function(v)


# -- suites --------------------------------------------------------------------

def talenti_suite(grids, trials: int, rng: np.random.Generator) -> SuiteResult:
    """``phi# <= phi~ + C h ||psi||`` for random nonnegative data on each grid."""
    res = SuiteResult("talenti")
    for grid in grids:
        key = type(grid).__name__
        for _ in range(trials):
            t = talenti_check(_random_nonnegative(grid, rng))
            res.check(key).record(t.ok, t.max_violation / t.tol)
    return res


def concavity_suite(grid: Grid, trials: int, rng: np.random.Generator, alpha: float = 1.0,
                    beta0: float = 1.0, tol: float = 1e-8) -> SuiteResult:
    """Midpoint-type concavity along random segments for ``mu``, ``lambda`` and ``Lambda``."""
    res = SuiteResult("concavity")
    tc = ThicknessClass(beta0, (1.0 + 0.5 * beta0) * grid.area)
    dc = DensityClass(0.25 * grid.area)
    problems = (
        ("mu", tc, lambda c: eigen_mu(grid, c).eigenvalue),
        ("lambda", dc, lambda c: eigen_lambda(grid, alpha, c).eigenvalue),
        ("Lambda", dc, lambda c: eigen_Lambda(grid, alpha, c).eigenvalue),
    )
    for name, cls, f in problems:
        for k in range(trials):
            gen = random_bang_bang if k % 2 else random_admissible
            a, b = gen(grid, cls, rng), gen(grid, cls, rng)
            t = rng.uniform()
            mid = a.with_values(t * a.values + (1 - t) * b.values)
            violation = t * f(a) + (1 - t) * f(b) - f(mid)
            res.check(name).record(violation <= tol, violation)
    return res


def positivity_suite(grid: Grid, trials: int, rng: np.random.Generator, alpha: float = 1.0,
                     beta0: float = 1.0, bang_bang_trials: int = 50) -> SuiteResult:
    """Sign of ``u`` and ``z``, eigenvalue bounds and bang-bang agreement."""
    res = SuiteResult("positivity")
    tc = ThicknessClass(beta0, (1.0 + 0.5 * beta0) * grid.area)
    dc = DensityClass(0.25 * grid.area)
    e1 = eta1(grid)
    for _ in range(trials):
        D = random_admissible(grid, tc, rng)
        rho = random_admissible(grid, dc, rng)
        a = rng.uniform(0.0, 2.0 * alpha)
        pm = eigen_mu(grid, D)
        pl = eigen_lambda(grid, a, rho)
        pL = eigen_Lambda(grid, a, rho)
        for p in (pm, pl, pL):
            low = min(p.u.values.min(), p.z.values.min())
            res.check("sign").record(low >= -1e-12, -low)
        excess = max(-pm.eigenvalue, pm.eigenvalue - (1 + beta0) * e1)
        res.check("mu_bounds").record(excess <= 1e-9 * e1, excess)
        res.check("lambda_lower").record(pl.eigenvalue >= -1.0, -1.0 - pl.eigenvalue)
    for _ in range(bang_bang_trials):
        rho = random_bang_bang(grid, dc, rng, strict=True)
        a = rng.uniform(0.0, 2.0 * alpha)
        lam = eigen_lambda(grid, a, rho).eigenvalue
        Lam = eigen_Lambda(grid, a, rho).eigenvalue
        rel = abs(lam - Lam) / max(1.0, abs(lam))
        res.check("bang_bang_agreement").record(rel <= 1e-9, rel)
    return res


def derivative_suite(grid: Grid, trials: int, rng: np.random.Generator, alpha: float = 0.5,
                     t_values=(1e-2, 1e-3, 1e-4), tol: float = 1e-3) -> SuiteResult:
    """``fd_check`` for the thickness switch and the relaxed density switch at ``alpha`` and 0."""
    res = SuiteResult("derivative")
    tc = ThicknessClass(1.0, 1.5 * grid.area)
    dc = DensityClass(0.25 * grid.area)
    cases = (("mu", "thickness", tc, 0.0), ("Psi_alpha", "density", dc, alpha),
             ("Psi_zero", "density", dc, 0.0))
    for name, kind, cls, a in cases:
        for _ in range(trials):
            p = random_admissible(grid, cls, rng)
            h = random_direction(p, rng, margin=1.0)
            err = fd_check(kind, p, h, t_values, alpha=a)
            res.check(name).record(err < tol, err)
    return res


def _sharp_oracle(values: np.ndarray, weights: np.ndarray, measures: np.ndarray) -> np.ndarray:
    """Value of the decreasing rearrangement at each measure level, by a plain sort."""
    pairs = sorted(zip(values.tolist(), weights.tolist()), key=lambda p: -p[0])
    out = np.empty(measures.size)
    for j, m in enumerate(measures):
        acc = 0.0
        for v, w in pairs:
            acc += w
            if acc > m:
                out[j] = v
                break
        else:
            out[j] = pairs[-1][0]
    return out


def rearrange_suite(grids, trials: int, rng: np.random.Generator, competitors: int = 1000,
                    bathtub_trials: int = 10, rtol: float = 1e-6) -> SuiteResult:
    """Schwarz against a sort oracle, Hardy-Littlewood, equimeasurability and the bathtub."""
    res = SuiteResult("rearrange")
    for k in range(trials):
        grid = grids[k % len(grids)]
        f = _random_nonnegative(grid, rng)
        g = _random_nonnegative(grid, rng)
        fs = schwarz(f)

        # sort oracle, sampled at the rearranged cell centres in measure
        edges = np.concatenate([[0.0], np.cumsum(fs.grid.weights)])
        mids = 0.5 * (edges[1:] + edges[:-1])
        oracle = _sharp_oracle(f.values, grid.weights, mids)
        # allow a one-cell shift of the sampling index
        lo = np.minimum(oracle, np.concatenate([oracle[1:], oracle[-1:]]))
        hi = np.maximum(oracle, np.concatenate([oracle[:1], oracle[:-1]]))
        lo = np.minimum(lo, np.concatenate([oracle[:1], oracle[:-1]]))
        hi = np.maximum(hi, np.concatenate([oracle[1:], oracle[-1:]]))
        miss = np.maximum(lo - fs.values, fs.values - hi).max()
        res.check("sort_oracle").record(miss <= 0.0, miss)

        lhs = integrate(grid, f.values * g.values)
        rhs = rearranged_inner(f, g)
        excess = (lhs - rhs) / max(rhs, 1e-300)
        res.check("hardy_littlewood").record(excess <= rtol, excess)

        gap = abs(norm(fs.grid, fs) - norm(grid, f)) / norm(grid, f)
        ts = np.quantile(f.values, [0.1, 0.5, 0.9])
        dgap = max(abs(distribution(f, t) - distribution(fs, t)) for t in ts)
        res.check("equimeasurability").record(gap <= rtol and dgap <= 2 * grid.max_cell_weight,
                                              gap)

    for k in range(bathtub_trials):
        grid = grids[k % len(grids)]
        cls = DensityClass(rng.uniform(0.1, 0.9) * grid.area)
        sw = grid.function(rng.normal(size=grid.size))
        best = integrate(grid, sw.values * bathtub(sw, cls.mass, cls.lo, cls.hi, cls).values)
        worst_gap = -np.inf
        for _ in range(competitors):
            c = random_admissible(grid, cls, rng, smooth=bool(rng.integers(2)))
            worst_gap = max(worst_gap, best - integrate(grid, sw.values * c.values))
        res.check("bathtub").record(worst_gap <= 1e-9, worst_gap)
    return res


def run_suite(name: str, seed: int = 0, trials: int | None = None, alpha: float | None = None,
              radial_nodes: int = 200, square_nodes: int = 40) -> SuiteResult:
    """Run a named suite with the default grids."""
    if name not in SUITES:
        raise KeyError(name)
    rng = np.random.default_rng(seed)
    disk, square = default_grids(radial_nodes, square_nodes)
    if name == "talenti":
        return talenti_suite((square, disk), trials or 100, rng)
    if name == "concavity":
        return concavity_suite(disk, trials or 100, rng, alpha=1.0 if alpha is None else alpha)
    if name == "positivity":
        return positivity_suite(disk, trials or 100, rng, alpha=1.0 if alpha is None else alpha)
    if name == "derivative":
        return derivative_suite(disk, trials or 20, rng, alpha=0.5 if alpha is None else alpha)
    return rearrange_suite((square, disk), trials or 100, rng)

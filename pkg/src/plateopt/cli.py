"""Command-line front end.

Usage::

    plateopt eig --config scenario.yaml
    plateopt optimize --config scenario.yaml --out run1
    plateopt verify talenti --seed 3
    plateopt stability-sweep --config sweep.yaml
    plateopt rearrange --config rearr.yaml

Exit codes: 0 success, 1 a check failed, 2 bad arguments or config,
3 solver failure, 4 optimizer did not converge.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import optim
from .errors import InvalidArgument, NumericFailure
from .grid import build_cartesian_grid, build_radial_grid, read_csv, write_csv
from .rearrange import bathtub, schwarz, talenti_check
from .spectral import (
    CoefficientField,
    DensityClass,
    ThicknessClass,
    eigen_lambda,
    eigen_Lambda,
    eigen_mu,
)
from .verify import SUITES, run_suite

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_SOLVER, EXIT_NOCONV = 0, 1, 2, 3, 4

logger = logging.getLogger("plateopt")


class ConfigError(Exception):
    pass


_KEYS = {
    "domain", "resolution", "problem", "thickness", "density", "coefficient", "init",
    "optimizer", "alphas", "seeds", "suite", "trials", "out", "seed", "rearrange",
}


@dataclass
class Scenario:
    domain: dict = field(default_factory=lambda: {"type": "disk", "R": 1.0})
    resolution: object = 200
    problem: str | None = None
    thickness: dict = field(default_factory=dict)
    density: dict = field(default_factory=dict)
    coefficient: object = None
    init: object = "random"
    optimizer: dict = field(default_factory=dict)
    alphas: list | None = None
    seeds: int = 5
    suite: str | None = None
    trials: int | None = None
    out: str = "out"
    seed: int = 0
    rearrange: dict = field(default_factory=dict)

    # -- derived objects ---------------------------------------------------
    def grid(self):
        kind = self.domain.get("type", "disk")
        if kind == "disk":
            R = float(self.domain.get("R", 1.0))
            if not isinstance(self.resolution, int):
                raise ConfigError("disk resolution must be one integer")
            return build_radial_grid(R, self.resolution)
        if kind == "rectangle":
            Lx = float(self.domain.get("Lx", 1.0))
            Ly = float(self.domain.get("Ly", 1.0))
            res = self.resolution
            if isinstance(res, int):
                nx, ny = res, max(1, round(res * Ly / Lx))
            elif isinstance(res, (list, tuple)) and len(res) == 2:
                nx, ny = (int(v) for v in res)
            else:
                raise ConfigError("rectangle resolution must be an integer or [nx, ny]")
            return build_cartesian_grid(Lx, Ly, nx, ny)
        raise ConfigError(f"unknown domain type {kind!r}")

    def thickness_class(self, grid):
        beta0 = float(self.thickness.get("beta0", 1.0))
        D0 = float(self.thickness.get("D0", (1.0 + 0.5 * beta0) * grid.area))
        cls = ThicknessClass(beta0, D0)
        cls.check_feasible(grid)
        return cls

    def density_class(self, grid):
        rho0 = float(self.density.get("rho0", 0.25 * grid.area))
        cls = DensityClass(rho0)
        cls.check_feasible(grid)
        return cls

    @property
    def alpha(self) -> float:
        a = float(self.density.get("alpha", 0.0))
        if a < 0:
            raise ConfigError("alpha must be nonnegative")
        return a

    def optimizer_config(self):
        try:
            return optim.OptimizerConfig(seed=self.seed, **self.optimizer)
        except TypeError as exc:
            raise ConfigError(f"bad optimizer section: {exc}") from None


def load_scenario(path: str | None) -> Scenario:
    if path is None:
        return Scenario()
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - _KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    sc = Scenario(**raw)
    for name in ("domain", "thickness", "density", "optimizer", "rearrange"):
        if not isinstance(getattr(sc, name), dict):
            raise ConfigError(f"section {name!r} must be a mapping")
    return sc


# -- coefficient construction ------------------------------------------------

def _field(entry, grid, cls, kind: str, rng) -> CoefficientField:
    """Build a coefficient from a config entry.

    ``entry`` is ``"random"``, ``"optimum"`` (annulus / centred ball),
    ``{"constant": value}`` or a CSV path.
    """
    if entry in (None, "uniform"):
        return CoefficientField(grid, np.full(grid.size, cls.mass / grid.area), cls)
    if entry == "random":
        return optim.random_admissible(grid, cls, rng)
    if entry == "random_bang_bang":
        return optim.random_bang_bang(grid, cls, rng)
    if entry == "optimum":
        return optim.boundary_annulus(grid, cls) if kind == "thickness" else optim.centered_ball(grid, cls)
    if isinstance(entry, dict) and "constant" in entry:
        return CoefficientField(grid, np.full(grid.size, float(entry["constant"])), None)
    if isinstance(entry, str):
        f = read_csv(entry)
        if f.grid != grid:
            raise ConfigError(f"{entry}: field lives on a different grid")
        return CoefficientField(grid, f.values, cls)
    raise ConfigError(f"cannot build a coefficient from {entry!r}")


# -- subcommands ---------------------------------------------------------------

def _say(args, msg):
    if not args.quiet:
        print(msg)


def cmd_eig(sc: Scenario, args) -> int:
    grid = sc.grid()
    problem = {"thickness": "mu", "density": "lambda"}.get(sc.problem, sc.problem or "mu")
    rng = np.random.default_rng(sc.seed)
    tol = float(sc.optimizer.get("eigen_tol", 1e-10))
    if problem == "mu":
        entry = sc.coefficient if sc.coefficient is not None else {"constant": 1.0}
        cls = None if isinstance(entry, dict) else sc.thickness_class(grid)
        D = _field(entry, grid, cls, "thickness", rng)
        pair = eigen_mu(grid, D, tol)
    elif problem in ("lambda", "Lambda"):
        entry = sc.coefficient if sc.coefficient is not None else "optimum"
        cls = None if isinstance(entry, dict) else sc.density_class(grid)
        rho = _field(entry, grid, cls, "density", rng)
        solver = eigen_lambda if problem == "lambda" else eigen_Lambda
        pair = solver(grid, sc.alpha, rho, tol)
    else:
        raise ConfigError(f"unknown eigenproblem {problem!r}")
    out = Path(sc.out)
    out.mkdir(parents=True, exist_ok=True)
    pair.export(out, "eig")
    print(f"{pair.eigenvalue:.12g}")
    return EXIT_OK


def cmd_optimize(sc: Scenario, args) -> int:
    grid = sc.grid()
    kind = sc.problem or "thickness"
    if kind not in ("thickness", "density"):
        raise ConfigError(f"unknown optimisation problem {kind!r}")
    cls = sc.thickness_class(grid) if kind == "thickness" else sc.density_class(grid)
    rng = np.random.default_rng(sc.seed)
    init = _field(sc.init, grid, cls, kind, rng)
    if init.cls is None:
        init = CoefficientField(grid, init.values, cls)
    trace = optim.optimize(kind, init, sc.optimizer_config(), alpha=sc.alpha)
    out = Path(sc.out)
    out.mkdir(parents=True, exist_ok=True)
    trace.write_jsonl(out / "trace.jsonl")
    trace.write_final_csv(out / "final.csv")
    _say(args, f"eigenvalue {trace.eigenvalues[-1]:.12g} after {trace.iterations} steps "
               f"({'converged' if trace.converged else 'not converged'})")
    return EXIT_OK if trace.converged else EXIT_NOCONV


def cmd_verify(sc: Scenario, args) -> int:
    suite = args.suite or sc.suite
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    kwargs = {}
    if isinstance(sc.resolution, int):
        kwargs["radial_nodes"] = sc.resolution
    alpha = sc.density.get("alpha")
    res = run_suite(suite, seed=sc.seed, trials=sc.trials,
                    alpha=None if alpha is None else float(alpha), **kwargs)
    for line in res.lines():
        _say(args, line)
    print(f"{suite}: passed={res.passed} failed={res.failed}")
    out = Path(sc.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"verify_{suite}.json", "w") as fh:
        json.dump({k: vars(c) for k, c in res.checks.items()}, fh, indent=2)
    return EXIT_OK if res.ok else EXIT_CHECK


def cmd_stability_sweep(sc: Scenario, args) -> int:
    if sc.domain.get("type", "disk") != "disk":
        raise ConfigError("stability sweeps need a disk domain")
    if not sc.alphas:
        raise ConfigError("stability sweeps need a nonempty 'alphas' list")
    alphas = sorted(float(a) for a in sc.alphas)
    if alphas[0] < 0:
        raise ConfigError("alpha must be nonnegative")
    grid = sc.grid()
    cls = sc.density_class(grid)
    seeds = [sc.seed + k for k in range(int(sc.seeds))]
    rows, broke = optim.stability_probe(grid, cls, alphas, seeds, sc.optimizer_config())
    out = Path(sc.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "stability.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "max_distance"])
        for row in rows:
            w.writerow([repr(row.alpha), repr(row.max_distance)])
    cell = grid.max_cell_weight
    persists = [row.max_distance <= cell for row in rows]
    for row, ok in zip(rows, persists):
        _say(args, f"alpha={row.alpha:g} max_distance={row.max_distance:.3e} "
                   f"{'ball' if ok else 'moved'}")
    print(f"break alpha: {'none observed' if broke is None else repr(broke)}")
    # persistence must hold on an initial segment of the sorted alphas
    first_bad = persists.index(False) if False in persists else len(persists)
    monotone = not any(persists[first_bad:])
    return EXIT_OK if monotone and first_bad > 0 else EXIT_CHECK


def cmd_rearrange(sc: Scenario, args) -> int:
    entry = sc.rearrange
    op = entry.get("operation")
    src = entry.get("input")
    if op not in ("schwarz", "bathtub", "talenti") or not src:
        raise ConfigError("rearrange needs 'operation' (schwarz|bathtub|talenti) and 'input'")
    f = read_csv(src)
    out = Path(sc.out)
    out.mkdir(parents=True, exist_ok=True)
    if op == "schwarz":
        write_csv(schwarz(f), out / "schwarz.csv")
    elif op == "bathtub":
        try:
            mass, lo, hi = float(entry["mass"]), float(entry.get("lo", 0.0)), float(entry.get("hi", 1.0))
        except KeyError:
            raise ConfigError("bathtub needs 'mass'") from None
        c = bathtub(f, mass, lo, hi, prefer_outer=bool(entry.get("prefer_outer", False)))
        write_csv(c, out / "bathtub.csv")
    else:
        res = talenti_check(f)
        res.write_csv(out / "talenti.csv")
        print(f"talenti: {'ok' if res.ok else 'violated'} max_violation={res.max_violation:.3e} "
              f"tol={res.tol:.3e}")
        return EXIT_OK if res.ok else EXIT_CHECK
    _say(args, f"wrote {op} output to {out}")
    return EXIT_OK


COMMANDS = {
    "eig": cmd_eig,
    "optimize": cmd_optimize,
    "verify": cmd_verify,
    "stability-sweep": cmd_stability_sweep,
    "rearrange": cmd_rearrange,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML scenario file")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--resolution", type=int, help="override the grid resolution")
    common.add_argument("--quiet", action="store_true", help="only print the main result")

    parser = argparse.ArgumentParser(prog="plateopt", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "verify":
            p.add_argument("suite", nargs="?", help=f"one of {', '.join(SUITES)}")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.command != "verify":
        args.suite = None
    try:
        sc = load_scenario(args.config)
        if args.seed is not None:
            sc.seed = args.seed
        if args.out is not None:
            sc.out = args.out
        if args.resolution is not None:
            sc.resolution = args.resolution
        return COMMANDS[args.command](sc, args)
    except (ConfigError, InvalidArgument, TypeError, ValueError) as exc:
        if isinstance(exc, (TypeError, ValueError)) and not isinstance(exc, InvalidArgument):
            # unexpected-typed config values surface here
            print(f"plateopt: invalid configuration: {exc}", file=sys.stderr)
        else:
            print(f"plateopt: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailure as exc:
        print(f"plateopt: solver failure: {exc} (residual {exc.residual:.3e})", file=sys.stderr)
        return EXIT_SOLVER
    except ZeroDivisionError as exc:
        print(f"plateopt: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

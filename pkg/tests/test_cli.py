import csv
import json
import math

import numpy as np
import pytest
import yaml

from plateopt.cli import main
from plateopt.grid import build_radial_grid, read_csv, write_csv
from plateopt.optim import boundary_annulus, centered_ball
from plateopt.spectral import DensityClass, ThicknessClass


def run(tmp_path, capsys, config, *argv):
    path = tmp_path / "scenario.yaml"
    path.write_text(yaml.safe_dump(config) if isinstance(config, dict) else config)
    code = main([*argv, "--config", str(path), "--out", str(tmp_path / "out")])
    return code, capsys.readouterr()


def test_eig_disk(tmp_path, capsys):
    code, out = run(tmp_path, capsys, {"resolution": 2000}, "eig")
    assert code == 0
    value = float(out.out.strip())
    assert value == pytest.approx(33.4452, abs=1e-3)
    assert len(out.out.strip().replace(".", "")) == 12
    assert json.loads((tmp_path / "out" / "eig.json").read_text())["eigenvalue"] == pytest.approx(value)
    assert (tmp_path / "out" / "eig_u.csv").exists()


def test_eig_rectangle(tmp_path, capsys):
    cfg = {"domain": {"type": "rectangle", "Lx": 1.0, "Ly": 1.0}, "resolution": 64}
    code, out = run(tmp_path, capsys, cfg, "eig")
    assert code == 0
    assert float(out.out) == pytest.approx(389.636, rel=1e-3)


def test_eig_density_problem(tmp_path, capsys):
    cfg = {"problem": "lambda", "density": {"rho0": math.pi / 4, "alpha": 0.0}, "resolution": 200}
    code, out = run(tmp_path, capsys, cfg, "eig")
    assert code == 0 and float(out.out) < 33.4


@pytest.mark.parametrize("text", [
    "domain: [unclosed\n",
    "- just\n- a list\n",
    "bogus_key: 1\n",
    "domain: {type: hexagon}\n",
    "resolution: 4\n",
    "problem: nonsense\n",
    "problem: mu\ncoefficient: optimum\nthickness: {D0: 1.0}\n",
    "density: 3\n",
])
def test_eig_bad_config(tmp_path, capsys, text):
    code, out = run(tmp_path, capsys, text, "eig")
    assert code == 2
    assert out.err.startswith("plateopt:")


def test_missing_config_file(tmp_path, capsys):
    assert main(["eig", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["eig", "--frobnicate"])
    assert info.value.code == 2


def test_solver_failure_exit_3(tmp_path, capsys):
    code, out = run(tmp_path, capsys, {"optimizer": {"eigen_tol": 1e-300}}, "eig")
    assert code == 3 and "solver failure" in out.err


def test_optimize_thickness(tmp_path, capsys):
    cfg = {"problem": "thickness", "resolution": 300,
           "thickness": {"beta0": 1.0, "D0": 1.5 * math.pi}}
    code, _ = run(tmp_path, capsys, cfg, "optimize")
    assert code == 0
    final = read_csv(tmp_path / "out" / "final.csv")
    g = build_radial_grid(1.0, 300)
    ann = boundary_annulus(g, ThicknessClass(1.0, 1.5 * math.pi))
    assert np.sum(g.weights * np.abs(final.values - ann.values)) <= g.max_cell_weight
    lines = (tmp_path / "out" / "trace.jsonl").read_text().splitlines()
    assert json.loads(lines[-1])["sym_diff"] == 0.0


def test_optimize_density(tmp_path, capsys):
    cfg = {"problem": "density", "resolution": 300, "density": {"rho0": math.pi / 4, "alpha": 0.0}}
    code, _ = run(tmp_path, capsys, cfg, "optimize")
    assert code == 0
    g = build_radial_grid(1.0, 300)
    ball = centered_ball(g, DensityClass(math.pi / 4))
    final = read_csv(tmp_path / "out" / "final.csv")
    assert np.sum(g.weights * np.abs(final.values - ball.values)) <= g.max_cell_weight


def test_optimize_non_convergence_exit_4(tmp_path, capsys):
    cfg = {"problem": "thickness", "optimizer": {"max_iterations": 1}}
    code, _ = run(tmp_path, capsys, cfg, "optimize")
    assert code == 4


def test_optimize_bad_optimizer_section(tmp_path, capsys):
    code, _ = run(tmp_path, capsys, {"optimizer": {"speed": 3}}, "optimize")
    assert code == 2


def test_optimize_is_deterministic(tmp_path, capsys):
    cfg = {"problem": "density", "density": {"alpha": 0.01}, "seed": 9}
    outputs = []
    for k in range(2):
        path = tmp_path / "s.yaml"
        path.write_text(yaml.safe_dump(cfg))
        assert main(["optimize", "--config", str(path), "--out", str(tmp_path / f"o{k}"), "--quiet"]) == 0
        outputs.append(((tmp_path / f"o{k}" / "trace.jsonl").read_bytes(),
                        (tmp_path / f"o{k}" / "final.csv").read_bytes()))
    assert outputs[0] == outputs[1]
    capsys.readouterr()


def test_verify(tmp_path, capsys):
    code, out = run(tmp_path, capsys, {"trials": 3, "resolution": 64}, "verify", "derivative")
    assert code == 0 and "derivative: passed=9 failed=0" in out.out
    assert (tmp_path / "out" / "verify_derivative.json").exists()


def test_verify_failing_suite_exit_1(tmp_path, capsys):
    code, out = run(tmp_path, capsys, {"trials": 6, "resolution": 64, "density": {"alpha": 1.0}},
                    "verify", "concavity")
    assert code == 1


def test_verify_unknown_suite(tmp_path, capsys):
    code, _ = run(tmp_path, capsys, {}, "verify", "astrology")
    assert code == 2


def test_stability_sweep(tmp_path, capsys):
    cfg = {"alphas": [0.0, 0.01, 0.05], "resolution": 300, "seeds": 2,
           "density": {"rho0": math.pi / 4}}
    code, out = run(tmp_path, capsys, cfg, "stability-sweep")
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "out" / "stability.csv")))
    cell = build_radial_grid(1.0, 300).max_cell_weight
    assert [float(r["alpha"]) for r in rows] == [0.0, 0.01, 0.05]
    assert float(rows[0]["max_distance"]) == 0.0
    assert float(rows[1]["max_distance"]) < cell
    assert "break alpha: 0.05" in out.out


@pytest.mark.parametrize("cfg", [{"alphas": []}, {"alphas": [0.1], "domain": {"type": "rectangle"}},
                                 {"alphas": [-1.0]}])
def test_stability_sweep_bad(tmp_path, capsys, cfg):
    code, _ = run(tmp_path, capsys, cfg, "stability-sweep")
    assert code == 2


def test_rearrange_operations(tmp_path, capsys):
    g = build_radial_grid(1.0, 64)
    rng = np.random.default_rng(0)
    write_csv(g.function(rng.uniform(size=64)), tmp_path / "f.csv")
    for op, extra in (("schwarz", {}), ("bathtub", {"mass": 1.0}), ("talenti", {})):
        cfg = {"rearrange": {"operation": op, "input": str(tmp_path / "f.csv"), **extra}}
        code, _ = run(tmp_path, capsys, cfg, "rearrange")
        assert code == 0
        assert (tmp_path / "out" / f"{op}.csv").exists()
    s = read_csv(tmp_path / "out" / "schwarz.csv")
    assert np.all(np.diff(s.values) <= 0)


@pytest.mark.parametrize("cfg", [{}, {"rearrange": {"operation": "fold", "input": "x"}},
                                 {"rearrange": {"operation": "bathtub", "input": "MISSING"}}])
def test_rearrange_bad(tmp_path, capsys, cfg):
    if cfg.get("rearrange", {}).get("input") == "MISSING":
        write_csv(build_radial_grid(1.0, 20).zeros(), tmp_path / "z.csv")
        cfg["rearrange"]["input"] = str(tmp_path / "z.csv")
    code, _ = run(tmp_path, capsys, cfg, "rearrange")
    assert code == 2

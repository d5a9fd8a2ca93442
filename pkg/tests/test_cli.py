import json
import subprocess
import sys

import numpy as np
import pytest

from markovcopula.cli import halton, parse_copula, run
from markovcopula.copulas import M, Frechet, LTheta
from markovcopula.grid import discretize, read_grid, write_grid
from markovcopula.simulate import read_paths


def test_product_w_w_is_m(tmp_path):
    out = tmp_path / "g.csv"
    assert run(["product", "--left", "W", "--right", "W", "--grid", "256", "--out", str(out)]) == 0
    assert np.abs(read_grid(out).mass - discretize(M, 256).mass).max() <= 1e-12


def test_product_reads_grid_files(tmp_path):
    a = tmp_path / "a.csv"
    write_grid(discretize(Frechet(0.2, 0.3), 16), a)
    out = tmp_path / "p.csv"
    assert run(["product", "--left", str(a), "--right", "M", "--grid", "16", "--out", str(out)]) == 0
    assert read_grid(out) == read_grid(a)


def test_gap_example(capsys):
    assert run(["gap", "--generator", "clayton", "--theta", "1"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["max_gap"] == pytest.approx(0.0396, abs=5e-5)
    assert d["argmax"] == [2.0, 0.5, 2.0]


def test_verify_semigroup_exit_codes(capsys):
    argv = ["verify", "semigroup", "--family", "hom-frechet", "--lambda", "1", "--mu", "1", "--pairs", "100"]
    assert run(argv + ["--tol", "1e-12"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] and rep["defect"] <= 1e-12
    assert run(argv + ["--tol", "0"]) == 2


@pytest.mark.parametrize(
    "argv, code",
    [
        (["verify", "identities", "--grid", "64", "--tol", "1e-12"], 0),
        (["verify", "idempotent", "--copula", "M", "--grid", "64", "--tol", "1e-12"], 0),
        (["verify", "idempotent", "--copula", "Frechet:0.2,0.3", "--grid", "64", "--tol", "1e-3"], 2),
        (["verify", "inverse", "--copula", "LTheta:0.5", "--grid", "128", "--tol", str(2 / 128)], 0),
        (["verify", "two-time", "--lambda", "1", "--mu", "2", "--tol", "1e-12"], 0),
        (["verify", "bm-chapman-kolmogorov", "--grid", "32", "--t", "0.1", "--tol", "5e-3"], 0),
    ],
)
def test_verify_suites(argv, code, capsys):
    assert run(argv) == code
    json.loads(capsys.readouterr().out)


@pytest.mark.parametrize(
    "argv",
    [
        ["product", "--left", "W"],
        ["product", "--left", "W", "--right", "W"],  # no grid size
        ["simulate", "chain", "--copula", "Pi"],  # no seed
        ["simulate", "chain", "--copula", "Pi", "--seed", "-3"],
        ["simulate", "chain", "--copula", "Pi", "--seed", str(2**64)],
        ["discretize", "--copula", "Nope", "--grid", "4"],
        ["discretize", "--copula", "Frechet:0.8,0.8", "--grid", "4"],
        ["discretize", "--copula", "Pi", "--grid", "0"],
        ["verify", "semigroup"],
        ["frobnicate"],
        ["gap", "--generator", "clayton", "--lattice", "0,1"],
        ["family", "--t", "1", "--lambda", "-1"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert run(argv) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("markovcopula: error:")


def test_malformed_grid_and_mismatch(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("# gridcopula n=2\n0.6,0\n0,0.4\n")
    out = tmp_path / "out.csv"
    assert run(["product", "--left", str(bad), "--right", "M", "--grid", "2", "--out", str(out)]) == 1
    assert "row sums" in capsys.readouterr().err
    good = tmp_path / "g8.csv"
    write_grid(discretize(M, 8), good)
    assert run(["product", "--left", str(good), "--right", "M", "--grid", "16", "--out", str(out)]) == 1
    assert "n=8" in capsys.readouterr().err
    g16 = tmp_path / "g16.csv"
    write_grid(discretize(M, 16), g16)
    assert run(["product", "--left", str(good), "--right", str(g16), "--out", str(out)]) == 1
    assert "differ" in capsys.readouterr().err
    assert not out.exists()
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".tmp")] == []


def test_simulate_outputs_byte_identical(tmp_path):
    outs = []
    for k, workers in enumerate(["1", "3"]):
        out = tmp_path / f"p{k}.csv"
        argv = ["simulate", "frechet", "--lambda", "1", "--mu", "1", "--times", "0,0.5,1",
                "--seed", "42", "--paths", "50", "--workers", workers, "--out", str(out)]
        assert run(argv) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    paths = read_paths(tmp_path / "p0.csv")
    assert len(paths) == 50 and list(paths[0].times) == [0.0, 0.5, 1.0]


def test_simulate_variants(tmp_path):
    for argv in (
        ["simulate", "chain", "--copula", "BinaryScaling", "--steps", "5"],
        ["simulate", "reflected-bm", "--times", "0,0.1,0.2"],
    ):
        out = tmp_path / "p.csv"
        assert run(argv + ["--seed", "7", "--paths", "10", "--out", str(out)]) == 0
        assert len(read_paths(out)) == 10


def test_family_outputs(tmp_path, capsys):
    assert run(["family", "--lambda", "1", "--mu", "1", "--t", str(np.log(2))]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["alpha"] == pytest.approx(0.1875) and d["beta"] == pytest.approx(0.3125)
    base = tmp_path / "base.csv"
    write_grid(discretize(parse_copula('{"variant": "Frechet", "params": {"alpha": 0.5, "beta": 0.0}}'), 32), base)
    spec = tmp_path / "fam.json"
    spec.write_text(json.dumps({"type": "poisson-jump", "a": 2.0, "base": "base.csv"}))
    out = tmp_path / "c.csv"
    assert run(["family", "--spec", str(spec), "--t", str(np.log(2)), "--out", str(out)]) == 0
    assert read_grid(out).n == 32


def test_parse_copula_forms(tmp_path):
    assert parse_copula("LTheta:0.25") == LTheta(0.25)
    assert parse_copula("frechet:0.2,0.3") == Frechet(0.2, 0.3)
    p = tmp_path / "c.json"
    p.write_text(LTheta(0.4).to_json())
    assert parse_copula(str(p)) == LTheta(0.4)


def test_halton_points():
    assert [halton(k, 2) for k in range(1, 5)] == [0.5, 0.25, 0.75, 0.125]


def test_console_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "markovcopula", "gap", "--generator", "exponential", "--c", "2"],
        capture_output=True, text=True,
    )
    assert r.returncode == 0
    assert json.loads(r.stdout)["max_gap"] <= 1e-15

import struct
import subprocess
import sys

import numpy as np
import pytest

from layerflow.corpus import random_field
from layerflow.forms import FormField
from layerflow.geometry import GridSpec
from layerflow.io import (ConfigError, FieldFormatError, format_value, parse_config,
                          read_field, write_csv, write_field)


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "layerflow.cli", *map(str, args)],
                          capture_output=True, text=True, cwd=cwd)


# -- field format -------------------------------------------------------------


@pytest.mark.parametrize("degree,td", [(0, False), (1, False), (1, True), (2, True)])
def test_field_roundtrip_bit_exact(tmp_path, grid2_coarse, degree, td):
    f = random_field(grid2_coarse, degree, seed=degree + 10 * td, time_dependent=td)
    path = tmp_path / "field.lff"
    write_field(path, f)
    back = read_field(path, grid2_coarse)
    assert back.degree == f.degree
    assert back.time_dependent == f.time_dependent
    assert np.array_equal(back.data, f.data)


def test_field_header_layout(tmp_path, grid2_coarse):
    f = random_field(grid2_coarse, 1, 0)
    path = tmp_path / "f.lff"
    write_field(path, f)
    raw = path.read_bytes()
    assert raw[:4] == b"LFF1"
    version, n, q, N, m1 = struct.unpack("<5I", raw[4:24])
    L, T = struct.unpack("<2d", raw[24:40])
    assert (version, n, q, N, m1) == (1, 2, 1, 32, 1)
    assert (L, T) == (6.0, 0.5)


def test_field_errors_name_offending_header(tmp_path, grid2_coarse):
    f = random_field(grid2_coarse, 1, 0)
    good = tmp_path / "good.lff"
    write_field(good, f)
    raw = bytearray(good.read_bytes())

    bad_magic = tmp_path / "magic.lff"
    bad_magic.write_bytes(b"XYZ1" + bytes(raw[4:]))
    with pytest.raises(FieldFormatError, match="magic"):
        read_field(bad_magic)

    bad_version = tmp_path / "ver.lff"
    corrupted = bytearray(raw)
    corrupted[4:8] = struct.pack("<I", 9)
    bad_version.write_bytes(bytes(corrupted))
    with pytest.raises(FieldFormatError, match="version"):
        read_field(bad_version)

    truncated = tmp_path / "tr.lff"
    truncated.write_bytes(bytes(raw[:-16]))
    with pytest.raises(FieldFormatError, match="payload"):
        read_field(truncated)

    other = GridSpec(n=2, N=64, L=6.0, M=8, T=0.5)
    with pytest.raises(FieldFormatError, match="N"):
        read_field(good, other)


# -- config -------------------------------------------------------------------


def test_parse_config_defaults_and_file(tmp_path):
    cfg = parse_config(None)
    assert cfg.grid.n == 2 and cfg.grid.N == 64
    path = tmp_path / "run.cfg"
    path.write_text("# comment\ngrid.N = 32\nsolver.mode = newton\nnorms.delta = 2.0\nseed = 5\n")
    cfg2 = parse_config(path)
    assert cfg2.grid.N == 32
    assert cfg2.solver.mode == "newton"
    assert cfg2.norms.delta == 2.0
    assert cfg2.seed == 5


def test_parse_config_rejects_unknown_and_malformed(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("grid.Q = 3\n")
    with pytest.raises(ConfigError, match="grid.Q"):
        parse_config(bad)
    bad2 = tmp_path / "bad2.cfg"
    bad2.write_text("just some text\n")
    with pytest.raises(ConfigError):
        parse_config(bad2)
    bad3 = tmp_path / "bad3.cfg"
    bad3.write_text("grid.N = lots\n")
    with pytest.raises(ConfigError, match="grid.N"):
        parse_config(bad3)


def test_csv_formatting(tmp_path):
    assert format_value(1.0) == "1.0000000000000000e+00"
    assert format_value(3) == "3"
    assert len(format_value(np.pi).split("e")[0].replace("-", "").replace(".", "")) == 17
    out = tmp_path / "t.csv"
    write_csv(out, ("a", "b"), [(1, 2.0), ("x,y", 3.5)])
    raw = out.read_bytes()
    assert raw.startswith(b"a,b\r\n")
    assert b'"x,y"' in raw


# -- CLI ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def cli_workspace(tmp_path_factory):
    ws = tmp_path_factory.mktemp("cli")
    grid = GridSpec(n=2, N=32, L=6.0, M=8, T=0.5)
    x, y = grid.mesh()
    env = np.exp(-grid.radius2() / 1.6)
    u0 = FormField.from_components(grid, 1, (y * env, -x * env))
    f = FormField.zero(grid, 1, time_dependent=True)
    write_field(ws / "u0.lff", u0)
    write_field(ws / "f.lff", f)
    (ws / "run.cfg").write_text("grid.N = 32\ngrid.M = 8\nsolver.tol = 1e-8\n")
    return ws


def test_cli_solve_and_outputs(cli_workspace):
    ws = cli_workspace
    res = run_cli("--config", ws / "run.cfg", "--out", ws / "out", "solve",
                  ws / "f.lff", ws / "u0.lff")
    assert res.returncode == 0, res.stderr
    for name in ("u.lff", "p.lff", "g.lff", "residuals.csv", "energy.csv", "iterations.csv"):
        assert (ws / "out" / name).exists()
    u = read_field(ws / "out" / "u.lff")
    assert u.time_dependent and u.degree == 1
    lines = (ws / "out" / "iterations.csv").read_text().strip().splitlines()
    assert lines[0] == "iteration,residual,damping"
    # the workspace data is the radial vortex with stream function
    # 0.8 e^{-r^2/1.6}; its heat evolution is the widened closed form
    grid = GridSpec(n=2, N=32, L=6.0, M=8, T=0.5)
    mu, s2 = 0.1, 0.8
    a = s2 + 2.0 * mu * grid.T
    x, y = grid.mesh()
    env = np.exp(-grid.radius2() / (2.0 * a)) * s2 ** 2 / a ** 2
    exact = FormField.from_components(grid, 1, (y * env, -x * env))
    got = u.slice_at(grid.M)
    assert (got - exact).sup_norm() / exact.sup_norm() < 1e-4


def test_cli_solve_zero_data(cli_workspace, tmp_path):
    ws = cli_workspace
    grid = GridSpec(n=2, N=32, L=6.0, M=8, T=0.5)
    write_field(tmp_path / "z1.lff", FormField.zero(grid, 1, time_dependent=True))
    write_field(tmp_path / "z0.lff", FormField.zero(grid, 1))
    res = run_cli("--config", ws / "run.cfg", "--out", tmp_path / "out", "solve",
                  tmp_path / "z1.lff", tmp_path / "z0.lff")
    assert res.returncode == 0
    u = read_field(tmp_path / "out" / "u.lff")
    assert u.sup_norm() == 0.0
    first_iter = (tmp_path / "out" / "iterations.csv").read_text().splitlines()[1]
    assert first_iter.split(",")[0] == "0"


def test_cli_solve_bad_magic(cli_workspace, tmp_path):
    bad = tmp_path / "bad.lff"
    bad.write_bytes(b"nope")
    res = run_cli("--config", cli_workspace / "run.cfg", "solve", bad,
                  cli_workspace / "u0.lff")
    assert res.returncode == 1
    assert "magic" in res.stderr


def test_cli_solve_nonconvergence_exit_2(cli_workspace, tmp_path):
    cfg = tmp_path / "hard.cfg"
    cfg.write_text("grid.N = 32\ngrid.M = 8\nsolver.tol = 1e-30\nsolver.max_iter = 2\n")
    res = run_cli("--config", cfg, "--out", tmp_path / "out2", "solve",
                  cli_workspace / "f.lff", cli_workspace / "u0.lff")
    assert res.returncode == 2
    assert (tmp_path / "out2" / "residuals.csv").exists()
    assert (tmp_path / "out2" / "u.lff").exists()


def test_cli_norm(cli_workspace, tmp_path):
    res = run_cli("--config", cli_workspace / "run.cfg", "--out", tmp_path / "n",
                  "norm", cli_workspace / "u0.lff")
    assert res.returncode == 0
    text = (tmp_path / "n" / "norm.csv").read_text()
    assert text.splitlines()[0] == "term,value"
    assert "total" in text
    # gaussian with known sup part: sup (1+r^2)^{delta/2} e^{-r^2} = 1 at the origin
    grid = GridSpec(n=2, N=32, L=6.0, M=8, T=0.5)
    gauss = FormField(grid, 0, np.exp(-grid.radius2())[None])
    write_field(tmp_path / "gauss.lff", gauss)
    cfg = tmp_path / "gauss.cfg"
    cfg.write_text("grid.N = 32\ngrid.M = 8\nnorms.delta = 2.0\n"
                   "norms.lambda = 0.5\nnorms.lambda_prime = 0.75\n")
    resg = run_cli("--config", cfg, "--out", tmp_path / "ng", "norm", tmp_path / "gauss.lff")
    assert resg.returncode == 0
    sup_line = [l for l in (tmp_path / "ng" / "norm.csv").read_text().splitlines()
                if l.startswith("sup[")][0]
    assert float(sup_line.split(",")[1]) == pytest.approx(1.0)
    # doubling the field doubles the total
    grid = GridSpec(n=2, N=32, L=6.0, M=8, T=0.5)
    u0 = read_field(cli_workspace / "u0.lff", grid)
    write_field(tmp_path / "u2.lff", 2.0 * u0)
    res2 = run_cli("--config", cli_workspace / "run.cfg", "--out", tmp_path / "n2",
                   "norm", tmp_path / "u2.lff")
    t1 = [l for l in (tmp_path / "n" / "norm.csv").read_text().splitlines() if l.startswith("total")]
    t2 = [l for l in (tmp_path / "n2" / "norm.csv").read_text().splitlines() if l.startswith("total")]
    v1 = float(t1[0].split(",")[1])
    v2 = float(t2[0].split(",")[1])
    assert v2 == pytest.approx(2.0 * v1, rel=1e-12)


def test_cli_series(tmp_path):
    res = run_cli("--out", tmp_path, "series", "--n", "3", "--delta", "1.5", "--K", "8")
    assert res.returncode == 0
    first = res.stdout.splitlines()[0].split(",")
    assert first[0] == "a" and first[1] == "0"
    assert float(first[2]) == pytest.approx(4.0 / 3.0)
    residuals = [float(l.split(",")[2]) for l in res.stdout.splitlines()
                 if l.startswith("residual")]
    assert residuals and max(residuals) < 1.0  # K = 8: truncation visible near r = 1
    res_bad = run_cli("series", "--n", "3", "--delta", "1.0", "--K", "4")
    assert res_bad.returncode == 1
    assert "prohibited" in res_bad.stderr


def test_cli_series_residual_monotone_in_K(tmp_path):
    worst = []
    for K in (10, 20, 40):
        res = run_cli("--out", tmp_path / f"k{K}", "series", "--n", "2", "--delta", "1.5",
                      "--K", str(K))
        vals = [float(l.split(",")[2]) for l in res.stdout.splitlines()
                if l.startswith("residual")]
        worst.append(max(vals))
    assert worst[0] >= worst[1] >= worst[2]


def test_cli_verify_determinism(tmp_path):
    cfg = tmp_path / "v.cfg"
    cfg.write_text("grid.N = 32\ngrid.M = 8\n")
    a = run_cli("--config", cfg, "verify")
    b = run_cli("--config", cfg, "verify")
    assert a.stdout == b.stdout  # identical config and seed: byte-identical report


def test_cli_verify_default_passes_and_mutation_fails():
    base = run_cli("verify")
    assert base.returncode == 0, base.stdout + base.stderr
    assert all("PASS" in l for l in base.stdout.strip().splitlines())
    flipped = run_cli("verify", "--debug-flip-codifferential")
    assert flipped.returncode != 0
    assert any("deRham_laplacian" in l and "FAIL" in l for l in flipped.stdout.splitlines())


def test_cli_potentials_selftest_default():
    res = run_cli("potentials-selftest")
    assert res.returncode == 0, res.stdout + res.stderr
    assert all("PASS" in l for l in res.stdout.strip().splitlines())


def test_cli_solve_outputs_byte_identical(cli_workspace, tmp_path):
    ws = cli_workspace
    for d in ("r1", "r2"):
        res = run_cli("--config", ws / "run.cfg", "--out", tmp_path / d, "solve",
                      ws / "f.lff", ws / "u0.lff")
        assert res.returncode == 0
    for name in ("residuals.csv", "energy.csv", "iterations.csv", "u.lff", "p.lff", "g.lff"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_cli_threads_flag_does_not_change_results(cli_workspace, tmp_path):
    ws = cli_workspace
    res1 = run_cli("--config", ws / "run.cfg", "--out", tmp_path / "t1", "--threads", "1",
                   "solve", ws / "f.lff", ws / "u0.lff")
    res2 = run_cli("--config", ws / "run.cfg", "--out", tmp_path / "t2", "--threads", "2",
                   "solve", ws / "f.lff", ws / "u0.lff")
    assert res1.returncode == 0 and res2.returncode == 0
    a = (tmp_path / "t1" / "residuals.csv").read_bytes()
    b = (tmp_path / "t2" / "residuals.csv").read_bytes()
    assert a == b

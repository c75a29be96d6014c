import csv
import io
import json
from importlib.resources import files

import numpy as np
import pytest

from dbrinterp import __version__
from dbrinterp.cli import (
    EXIT_FAIL,
    EXIT_INPUT,
    EXIT_OK,
    dec_complex,
    dec_realization,
    dumps,
    enc_realization,
    grid_points,
    main,
    parse_grid,
    SpecError,
)
from dbrinterp.rational import evaluate

SPECS = files("dbrinterp") / "specs"
BUNDLED = sorted(p.name for p in SPECS.iterdir() if p.name.endswith(".json"))


def spec_path(name):
    return str(SPECS / name)


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# --- encoding ---------------------------------------------------------------------


def test_dumps_round_trips_floats():
    text = dumps({"b": [1.0, 2], "a": float("nan"), "c": "x"})
    assert json.loads(text) == {"a": None, "b": [1.0, 2], "c": "x"}
    assert dumps(0.1) == "0.10000000000000001" and dumps(3.0) == "3.0"


def test_complex_forms():
    assert dec_complex(0.5) == 0.5
    assert dec_complex([0.5, -1]) == 0.5 - 1j
    with pytest.raises(SpecError):
        dec_complex("1+2j", "x")


def test_realization_round_trip():
    r = dec_realization({"blaschke": {"zeros": [0.5, [0, -0.3]], "phase": [0, 1]}})
    r2 = dec_realization(json.loads(dumps(enc_realization(r))))
    for z in (0.0, 0.3 + 0.4j):
        assert evaluate(r2, z)[0, 0] == evaluate(r, z)[0, 0]


def test_grid_order():
    assert parse_grid("2x4") == (2, 4)
    pts = grid_points(2, 4)
    np.testing.assert_allclose(pts[:4], [0.5, 0.5j, -0.5, -0.5j], atol=1e-15)
    np.testing.assert_allclose(pts[4], 1.0)
    for bad in ("3", "0x4", "ax2"):
        with pytest.raises(SpecError):
            parse_grid(bad)


# --- commands -------------------------------------------------------------------


def test_version(capsys):
    code, out, _ = run(["version"], capsys)
    assert code == EXIT_OK and out.strip() == f"dbrinterp {__version__}"


def test_check_szego(capsys):
    code, out, err = run(["check", spec_path("szego_np.json")], capsys)
    rep = json.loads(out)
    assert code == EXIT_OK and rep["status"] == "solvable"
    assert rep["margin"] == pytest.approx(1 / 3)
    assert dec_complex(rep["P"][0][0]) == pytest.approx(4 / 3, abs=1e-12)
    assert err.startswith("solvable, margin")


def test_check_quiet_and_unsolvable(tmp_path, capsys):
    path = write(tmp_path, "bad.json", {"schema": 1, "kind": "np", "nodes": [0.5], "targets": [2.0]})
    code, out, err = run(["check", "-q", path], capsys)
    assert code == EXIT_FAIL and json.loads(out)["status"] == "unsolvable" and err == ""


def test_check_intersection(capsys):
    code, out, _ = run(["check", spec_path("intersection_monomial.json")], capsys)
    assert code == EXIT_OK and json.loads(out)["parameter_space_dim"] == 2


def test_solve_central_szego(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, _ = run(["solve", spec_path("szego_np.json"), "--central", "--out", str(out)], capsys)
    res = json.loads(out.read_text())
    assert code == EXIT_OK and res["status"] == "solved" and res["kind"] == "np"
    f = dec_realization(res["realization"])
    for z in (0.0, 0.3, -0.2 + 0.6j):
        assert evaluate(f, z)[0, 0] == pytest.approx(0.75 / (1 - z / 2), abs=1e-12)
    assert res["verification"]["interp_residual"] <= 1e-12
    assert res["verification"]["norm"] ** 2 == pytest.approx(0.75)


@pytest.mark.parametrize("name", [n for n in BUNDLED if "intersection" not in n])
def test_solve_bundled_verifies(name, tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, _ = run(["solve", spec_path(name), "--out", str(out)], capsys)
    assert code == EXIT_OK
    res = json.loads(out.read_text())
    assert res["problem"] == json.loads((SPECS / name).read_text())
    assert res["verification"]["interp_residual"] <= 1e-8
    if res["kind"] == "boundary":
        assert res["verification"]["max_radial_error"] <= 1e-5


def test_solve_with_param(tmp_path, capsys):
    h = write(tmp_path, "h.json", {"schema": 1, "h": {"A": [], "B": [], "C": [], "D": [[0.2]]}})
    out = tmp_path / "r.json"
    code, _, _ = run(["solve", spec_path("szego_np.json"), "--param", h, "--out", str(out)], capsys)
    res = json.loads(out.read_text())
    assert code == EXIT_OK and res["verification"]["interp_residual"] <= 1e-12
    assert res["verification"]["h_norm"] == pytest.approx(0.2)


def test_solve_budget_exceeded(tmp_path, capsys):
    h = write(tmp_path, "h.json", {"schema": 1, "h": {"A": [], "B": [], "C": [], "D": [[0.9]]}})
    code, _, err = run(["solve", spec_path("szego_np.json"), "--param", h], capsys)
    assert code == EXIT_FAIL and "budget" in err


def test_param_unsupported_for_boundary(tmp_path, capsys):
    h = write(tmp_path, "h.json", {"schema": 1, "h": {"A": [], "B": [], "C": [], "D": [[0.0]]}})
    code, _, _ = run(["solve", spec_path("boundary_two_nodes.json"), "--param", h], capsys)
    assert code == EXIT_INPUT


def test_solve_unsolvable_exit(tmp_path, capsys):
    path = write(tmp_path, "bad.json", {"schema": 1, "kind": "np", "nodes": [0.5], "targets": [2.0]})
    code, out, err = run(["solve", path], capsys)
    assert code == EXIT_FAIL and out == "" and "margin" in err


@pytest.mark.parametrize(
    "spec",
    [
        {"schema": 2, "kind": "np", "nodes": [0.5], "targets": [1.0]},
        {"schema": 1, "kind": "nope"},
        {"schema": 1, "kind": "np", "nodes": [0.5]},
        {"schema": 1, "kind": "np", "nodes": [1.5], "targets": [0.1]},
        {"schema": 1, "kind": "np", "nodes": [0.5, 0.5], "targets": [0.1, 0.1]},
        {"schema": 1, "kind": "np", "nodes": ["x"], "targets": [0.1]},
    ],
)
def test_malformed_specs_exit_2(spec, tmp_path, capsys):
    code, _, err = run(["solve", write(tmp_path, "s.json", spec)], capsys)
    assert code == EXIT_INPUT and err.startswith("input error")


def test_missing_file_and_bad_args(capsys):
    assert run(["solve", "/nonexistent/spec.json"], capsys)[0] == EXIT_INPUT
    assert run(["frobnicate"], capsys)[0] == EXIT_INPUT


# --- tolerances -------------------------------------------------------------------


def solved_tolerances(argv, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run(["solve", spec_path("szego_np.json"), "--out", str(out)] + argv, capsys)[0] == EXIT_OK
    return json.loads(out.read_text())["tolerances"]


def test_tolerance_layering(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("DBRINTERP_CONFIG", raising=False)
    assert solved_tolerances([], tmp_path, capsys) == {"rank_tol": 1e-10, "psd_tol": 1e-9, "residual_tol": 1e-9}
    cfg = tmp_path / "c.toml"
    cfg.write_text("[tolerances]\nrank_tol = 1e-11\npsd_tol = 1e-8\n")
    monkeypatch.setenv("DBRINTERP_CONFIG", str(cfg))
    assert solved_tolerances([], tmp_path, capsys)["rank_tol"] == 1e-11
    tol = solved_tolerances(["--tol-psd", "1e-7"], tmp_path, capsys)
    assert tol == {"rank_tol": 1e-11, "psd_tol": 1e-7, "residual_tol": 1e-9}
    cfg2 = tmp_path / "c2.toml"
    cfg2.write_text("[tolerances]\nresidual_tol = 1e-10\n")
    assert solved_tolerances(["--config", str(cfg2)], tmp_path, capsys)["residual_tol"] == 1e-10


def test_bad_config(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[tolerances]\nrank = 1\n")
    monkeypatch.setenv("DBRINTERP_CONFIG", str(cfg))
    assert run(["check", spec_path("szego_np.json")], capsys)[0] == EXIT_INPUT
    cfg.write_text("not toml [")
    assert run(["check", spec_path("szego_np.json")], capsys)[0] == EXIT_INPUT


# --- eval -------------------------------------------------------------------------


def test_eval_csv(tmp_path, capsys):
    res = tmp_path / "r.json"
    run(["solve", spec_path("szego_np.json"), "--out", str(res)], capsys)
    code, out, _ = run(["eval", str(res), "--grid", "2x3"], capsys)
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["z_re", "z_im", "f_re", "f_im", "f_abs"]
    assert len(rows) == 1 + 6
    for row, z in zip(rows[1:], grid_points(2, 3)):
        zr, zi, fr, fi, fa = map(float, row)
        assert complex(zr, zi) == pytest.approx(z, abs=1e-15)
        ref = 0.75 / (1 - z / 2)
        assert complex(fr, fi) == pytest.approx(ref, abs=1e-12) and fa == pytest.approx(abs(ref))


def test_eval_intersection_has_nothing_to_sample(tmp_path, capsys):
    res = tmp_path / "r.json"
    assert run(["solve", spec_path("intersection_monomial.json"), "--out", str(res)], capsys)[0] == EXIT_OK
    assert run(["eval", str(res)], capsys)[0] == EXIT_INPUT


def test_solve_is_deterministic(tmp_path, capsys):
    for name in BUNDLED:
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(["solve", spec_path(name), "--out", str(a)], capsys)
        run(["solve", spec_path(name), "--out", str(b)], capsys)
        assert a.read_bytes() == b.read_bytes()

"""Command-line front end: ``dbrinterp check|solve|eval|version``.

Problem specs are JSON documents with ``"schema": 1`` and a ``"kind"`` among
``aip``, ``np``, ``cf``, ``h2``, ``boundary`` and ``intersection``.  Complex
entries are numbers or ``[re, im]`` pairs; matrices are row-major nested lists.

Exit codes: 0 solved or verified, 1 unsolvable or constraint violation,
2 input error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .aipdata import AipDataSet, check_admissible, interp_functional, solvability
from .boundary import BoundaryDataSet, compute_P_boundary, kernel_vectors, solve_boundary, build_boundary_data
from .errors import (
    BudgetExceededError,
    DbrInterpError,
    DimensionError,
    DomainError,
    InconsistencyError,
    NotAdmissibleError,
    NumericalError,
    PreconditionError,
    RecoveryError,
    RouteUnavailableError,
    UnsolvableError,
)
from .homint import intersection_space
from .numlin import Tolerances, fro, psd_check
from .oap import cf_data, h2_solve, np_data
from .rational import Realization, blaschke, constant, evaluate, h2_inner_product, h2_norm, parallel, series
from .solve import _param_constant, aip_solve, pointwise_parameter, solve_problem
from .redheffer import build_colligation

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA = 1
KINDS = ("aip", "np", "cf", "h2", "boundary", "intersection")
CONFIG_ENV = "DBRINTERP_CONFIG"

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class SpecError(ValueError):
    """Malformed problem spec or result file; ``where`` locates the offending field."""

    def __init__(self, msg, where=""):
        super().__init__(f"{where}: {msg}" if where else msg)
        self.where = where


# --- JSON encoding -------------------------------------------------------------


def _fmt_float(v: float) -> str:
    if math.isnan(v) or math.isinf(v):
        return "null"
    s = "%.17g" % v
    return s if any(ch in s for ch in ".en") else s + ".0"


def dumps(obj, indent: int = 0) -> str:
    """Deterministic JSON with every float written to 17 significant digits."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, tuple, dict)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def enc_complex(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def enc_matrix(m) -> list:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[enc_complex(v) for v in row] for row in m]


def enc_vector(v) -> list:
    return [enc_complex(z) for z in np.asarray(v, dtype=complex).ravel()]


def enc_realization(r: Realization) -> dict:
    return {"A": enc_matrix(r.A), "B": enc_matrix(r.B), "C": enc_matrix(r.C), "D": enc_matrix(r.D)}


# --- JSON decoding -------------------------------------------------------------


def dec_complex(v, where="") -> complex:
    if isinstance(v, bool):
        raise SpecError("expected a number or [re, im]", where)
    if isinstance(v, (int, float)):
        return complex(float(v))
    if isinstance(v, list) and len(v) == 2 and all(isinstance(a, (int, float)) and not isinstance(a, bool) for a in v):
        return complex(float(v[0]), float(v[1]))
    raise SpecError("expected a number or [re, im]", where)


def dec_vector(v, where="") -> np.ndarray:
    if not isinstance(v, list):
        raise SpecError("expected a list", where)
    return np.array([dec_complex(a, f"{where}[{i}]") for i, a in enumerate(v)], dtype=complex)


def dec_matrix(v, where="", rows=None, cols=None) -> np.ndarray:
    if not isinstance(v, list) or any(not isinstance(r, list) for r in v):
        raise SpecError("expected a list of rows", where)
    if not v:
        return np.zeros((rows or 0, cols or 0), dtype=complex)
    rs = [dec_vector(r, f"{where}[{i}]") for i, r in enumerate(v)]
    widths = {r.size for r in rs}
    if len(widths) != 1:
        raise SpecError("rows have different lengths", where)
    return np.vstack(rs) if rs[0].size else np.zeros((len(rs), 0), dtype=complex)


def _field(obj: dict, key: str, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise SpecError(f"missing field {key!r}", where)
    return obj[key]


def dec_realization(obj, where="") -> Realization:
    """A realization ``{"A","B","C","D"}`` or a Blaschke product ``{"blaschke": {"zeros", "phase"}}``."""
    if isinstance(obj, dict) and "blaschke" in obj:
        b = obj["blaschke"]
        zeros = dec_vector(_field(b, "zeros", f"{where}.blaschke"), f"{where}.blaschke.zeros")
        phase = dec_complex(b.get("phase", 1.0), f"{where}.blaschke.phase")
        return blaschke(zeros, phase).realization
    d = dec_matrix(_field(obj, "D", where), f"{where}.D")
    a = dec_matrix(obj.get("A", []), f"{where}.A")
    n = a.shape[0]
    b = dec_matrix(obj.get("B", []), f"{where}.B")
    c = dec_matrix(obj.get("C", []), f"{where}.C")
    if n == 0:
        a = np.zeros((0, 0), dtype=complex)
        b = np.zeros((0, d.shape[1]), dtype=complex)
        c = np.zeros((d.shape[0], 0), dtype=complex)
    try:
        return Realization(a, b, c, d)
    except (ValueError, DimensionError) as exc:
        raise SpecError(str(exc), where) from exc


def load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read file: {exc.strerror}", str(path)) from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})", str(path)) from exc
    if not isinstance(obj, dict):
        raise SpecError("top level must be an object", str(path))
    if obj.get("schema") != SCHEMA:
        raise SpecError(f"unsupported schema {obj.get('schema')!r}, expected {SCHEMA}", f"{path}.schema")
    return obj


# --- configuration -------------------------------------------------------------


def load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read config: {exc.strerror}", str(path)) from exc
    except tomllib.TOMLDecodeError as exc:
        raise SpecError(f"invalid TOML: {exc}", str(path)) from exc
    return cfg


def resolve_tolerances(args) -> Tolerances:
    """Defaults, then the config file (``[tolerances]`` table), then ``--tol-*`` flags."""
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    cfg = load_config(path)
    vals = dict(cfg.get("tolerances", {}))
    unknown = set(vals) - {"rank_tol", "psd_tol", "residual_tol"}
    if unknown:
        raise SpecError(f"unknown tolerance keys {sorted(unknown)}", f"{path}.tolerances")
    for key in ("rank_tol", "psd_tol", "residual_tol"):
        flag = getattr(args, key, None)
        if flag is not None:
            vals[key] = flag
    try:
        return Tolerances.from_mapping(vals)
    except (TypeError, ValueError) as exc:
        raise SpecError(str(exc), "tolerances") from exc


def tol_dict(tol: Tolerances) -> dict:
    return {"rank_tol": tol.rank_tol, "psd_tol": tol.psd_tol, "residual_tol": tol.residual_tol}


# --- problem construction ------------------------------------------------------


def _h2_triple(spec):
    kind = spec["kind"]
    if kind == "np":
        nodes = dec_vector(_field(spec, "nodes", "spec"), "spec.nodes")
        targets = dec_vector(_field(spec, "targets", "spec"), "spec.targets")
        dirs = spec.get("directions")
        dirs = None if dirs is None else dec_matrix(dirs, "spec.directions")
        return np_data(nodes, targets, dirs)
    if kind == "cf":
        point = dec_complex(_field(spec, "point", "spec"), "spec.point")
        coeffs = dec_vector(_field(spec, "coeffs", "spec"), "spec.coeffs")
        return cf_data(point, coeffs)
    e = dec_matrix(_field(spec, "E", "spec"), "spec.E")
    t = dec_matrix(_field(spec, "T", "spec"), "spec.T")
    x = dec_vector(_field(spec, "x", "spec"), "spec.x")
    return e, t, x


def _h2_dataset(e, t, x, tol) -> AipDataSet:
    zero = constant(np.zeros((e.shape[0], 1), dtype=complex))
    return AipDataSet(zero, t, e, np.zeros((1, t.shape[0]), dtype=complex), x, tol=tol)


def _aip_dataset(spec, tol) -> AipDataSet:
    s = dec_realization(_field(spec, "S", "spec"), "spec.S")
    t = dec_matrix(_field(spec, "T", "spec"), "spec.T")
    e = dec_matrix(_field(spec, "E", "spec"), "spec.E")
    n = dec_matrix(_field(spec, "N", "spec"), "spec.N")
    x = dec_vector(_field(spec, "x", "spec"), "spec.x")
    return AipDataSet(s, t, e, n, x, tol=tol)


def _boundary_dataset(spec) -> BoundaryDataSet:
    zeros = dec_vector(_field(spec, "zeros", "spec"), "spec.zeros")
    phase = dec_complex(spec.get("phase", 1.0), "spec.phase")
    angles = _field(spec, "angles", "spec")
    orders = _field(spec, "orders", "spec")
    if not isinstance(angles, list) or not all(isinstance(a, (int, float)) and not isinstance(a, bool) for a in angles):
        raise SpecError("expected a list of real angles", "spec.angles")
    if not isinstance(orders, list) or not all(isinstance(a, int) and not isinstance(a, bool) for a in orders):
        raise SpecError("expected a list of integer orders", "spec.orders")
    targets = _field(spec, "targets", "spec")
    if not isinstance(targets, list):
        raise SpecError("expected a list of target lists", "spec.targets")
    tv = [dec_vector(f, f"spec.targets[{i}]") for i, f in enumerate(targets)]
    return BoundaryDataSet(zeros, phase, angles, orders, tv)


def _problem_spec(spec) -> str:
    kind = spec.get("kind")
    if kind not in KINDS:
        raise SpecError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}", "spec.kind")
    return kind


# --- verification ----------------------------------------------------------------


def _interp_residual(data: AipDataSet, f: Realization, tol) -> float:
    return fro(interp_functional(data, f, tol) - data.x)


def verify(spec: dict, f: Realization, tol: Tolerances) -> dict:
    """Verification block recomputed from the spec and the returned realization only."""
    kind = spec["kind"]
    out = {}
    if kind in ("np", "cf", "h2"):
        data = _h2_dataset(*_h2_triple(spec), tol)
        out["interp_residual"] = _interp_residual(data, f, tol)
        out["norm"] = h2_norm(f, tol) if f.stable else None
    elif kind == "aip":
        data = _aip_dataset(spec, tol)
        out["interp_residual"] = _interp_residual(data, f, tol) if f.stable and data.rho < 1.0 else None
    elif kind == "boundary":
        bd = _boundary_dataset(spec)
        r = bd.inner(tol).realization
        v = kernel_vectors(bd, tol)
        vals = [h2_inner_product(f, Realization(r.A, r.A @ v[:, [a]], r.C, r.C @ v[:, [a]]), tol) for a in range(v.shape[1])]
        out["interp_residual"] = fro(np.array(vals).reshape(-1, 1) - bd.x())
        out["norm"] = h2_norm(f, tol)
    return out


# --- commands ----------------------------------------------------------------------


def _emit(obj, out: Optional[str]):
    text = dumps(obj) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_check(args) -> int:
    tol = resolve_tolerances(args)
    spec = load_json(args.spec)
    kind = _problem_spec(spec)
    rep = {"schema": SCHEMA, "kind": kind}
    if kind == "intersection":
        s = dec_realization(_field(spec, "S", "spec"), "spec.S")
        b = dec_realization(_field(spec, "B", "spec"), "spec.B")
        sp = intersection_space(s, b, tol, check_isometry=False)
        verdict = psd_check(sp.P, tol)
        rep.update(status="admissible", psd=verdict.is_psd, min_eig_P=verdict.min_eigenvalue,
                   parameter_space_dim=sp.parameter_space_dim)
        _emit(rep, None)
        return EXIT_OK
    if kind == "boundary":
        bd = _boundary_dataset(spec)
        t, e, n, x = build_boundary_data(bd, tol)
        data = AipDataSet(bd.inner(tol), t, e, n, x, P_injected=compute_P_boundary(bd, tol), tol=tol)
    elif kind == "aip":
        data = _aip_dataset(spec, tol)
    else:
        data = _h2_dataset(*_h2_triple(spec), tol)
    adm = check_admissible(data, tol=tol)
    sol = solvability(adm.P, data.x, tol)
    rep.update(
        status="solvable" if (adm.admissible and sol.solvable) else ("unsolvable" if adm.admissible else "not_admissible"),
        margin=sol.margin,
        admissible=adm.admissible,
        stein_residual=adm.stein_residual,
        stein_ok=adm.stein_ok,
        obs_pairs_ok=adm.obs_pairs_ok,
        fs_membership_residual=adm.fs_membership_residual,
        membership_ok=adm.membership_ok,
        psd_ok=adm.psd_ok,
        min_eig_P=adm.min_eig_P,
        P=enc_matrix(adm.P),
    )
    _emit(rep, None)
    if not args.quiet:
        print(f"{rep['status']}, margin {_fmt_float(sol.margin)}", file=sys.stderr)
    return EXIT_OK if rep["status"] == "solvable" else EXIT_FAIL


def _load_h(path) -> Realization:
    obj = load_json(path)
    return dec_realization(_field(obj, "h", str(path)), f"{path}.h")


def _solve_h2(spec, h, tol):
    e, t, x = _h2_triple(spec)
    sol = h2_solve(e, t, x, tol)
    f = sol.f_min
    block = {"budget": sol.budget, "margin": sol.margin, "uniqueness": "unique_by_budget" if sol.budget <= tol.psd_tol else "non_unique",
             "dims": {"state": t.shape[0], "q": e.shape[0], "inner_state": sol.B.realization.n}}
    if h is not None:
        if h.D.shape != (e.shape[0], e.shape[0]) and h.D.shape != (sol.B.q, 1):
            raise DimensionError(f"h must be a {sol.B.p}-vector function, got {h.D.shape}")
        hn = h2_norm(h, tol)
        if hn > sol.budget + tol.psd_tol:
            raise BudgetExceededError(f"budget exceeded: ||h|| = {hn:.6g} > {sol.budget:.6g}", norm=hn, budget=sol.budget)
        f = parallel(f, series(sol.B.realization, h))
        block["h_norm"] = hn
    return f, block


def _solve_aip(spec, h, tol):
    data = _aip_dataset(spec, tol)
    if h is None:
        fam = solve_problem(data, tol)
    else:
        p = data.gram()
        col = build_colligation(p, data.T, data.E, data.N, tol)
        param = pointwise_parameter(col, data.S.realization, tol)
        c = _param_constant(param, col, tol)
        if c is None:
            raise PreconditionError("--param needs a constant Redheffer parameter; the parameter of S is not constant")
        fam = aip_solve(data, col, c, h=h, tol=tol)
        if fam.h_norm is None:
            raise PreconditionError("the norm of h in H(K_E) is not computable for this parameter")
    col = fam.colligation
    block = {"budget": fam.budget, "margin": fam.extras.get("margin"), "uniqueness": fam.uniqueness,
             "case_tag": fam.case_tag, "dims": {k: int(v) for k, v in col.dims.items()}}
    if fam.h_norm is not None:
        block["h_norm"] = fam.h_norm
    return fam.f_real, block


def _solve_boundary(spec, h, tol):
    if h is not None:
        raise PreconditionError("--param is not supported for boundary problems")
    sol = solve_boundary(_boundary_dataset(spec), tol)
    fam = sol.family
    block = {"budget": fam.budget, "margin": sol.margin, "uniqueness": fam.uniqueness, "case_tag": fam.case_tag,
             "dims": {k: int(v) for k, v in fam.colligation.dims.items()},
             "stein_residual": sol.stein_residual, "recovery_residual": sol.recovery_residual,
             "max_radial_error": sol.max_radial_error,
             "radial": [{"node": i, "order": j, "target": enc_complex(tg), "limit": enc_complex(lim), "error": err}
                        for i, j, tg, lim, err in sol.radial]}
    return sol.f_min, block


def _solve_intersection(spec, tol):
    s = dec_realization(_field(spec, "S", "spec"), "spec.S")
    b = dec_realization(_field(spec, "B", "spec"), "spec.B")
    sp = intersection_space(s, b, tol)
    col = sp.colligation
    return {"parameter_space_dim": sp.parameter_space_dim, "s_inner": sp.s_inner,
            "isometry_residual": sp.isometry_residual, "P": enc_matrix(sp.P),
            "dims": {k: int(v) for k, v in col.dims.items()}}


def cmd_solve(args) -> int:
    tol = resolve_tolerances(args)
    spec = load_json(args.spec)
    kind = _problem_spec(spec)
    h = _load_h(args.param) if args.param else None
    result = {"schema": SCHEMA, "kind": kind, "status": "solved", "tolerances": tol_dict(tol), "problem": spec}
    if kind == "intersection":
        if h is not None:
            raise PreconditionError("--param is not supported for intersection problems")
        result["realization"] = None
        result["verification"] = _solve_intersection(spec, tol)
    else:
        solver = {"np": _solve_h2, "cf": _solve_h2, "h2": _solve_h2, "aip": _solve_aip, "boundary": _solve_boundary}[kind]
        f, block = solver(spec, h, tol)
        block.update(verify(spec, f, tol))
        result["realization"] = enc_realization(f)
        result["verification"] = block
    _emit(result, args.out)
    return EXIT_OK


def parse_grid(text: str):
    try:
        r, m = (int(v) for v in text.lower().split("x"))
    except ValueError as exc:
        raise SpecError(f"grid must look like RxM, got {text!r}", "--grid") from exc
    if r < 1 or m < 1:
        raise SpecError("grid sizes must be positive", "--grid")
    return r, m


def grid_points(r: int, m: int) -> list:
    """Radius-major, angle-minor: radii ``k/r`` (``k = 1..r``), angles ``2 pi j / m``."""
    return [(k / r) * complex(math.cos(2 * math.pi * j / m), math.sin(2 * math.pi * j / m))
            for k in range(1, r + 1) for j in range(m)]


def cmd_eval(args) -> int:
    tol = resolve_tolerances(args)
    res = load_json(args.result)
    real = res.get("realization")
    if real is None:
        raise SpecError("result has no realization to evaluate", f"{args.result}.realization")
    f = dec_realization(real, f"{args.result}.realization")
    r, m = parse_grid(args.grid)
    q, p = f.D.shape
    if p != 1:
        raise SpecError("only vector-valued (single column) results can be sampled", f"{args.result}.realization.D")
    if q == 1:
        header = ["z_re", "z_im", "f_re", "f_im", "f_abs"]
    else:
        header = ["z_re", "z_im"] + [f"f{i}_{c}" for i in range(q) for c in ("re", "im", "abs")]
    lines = [",".join(header)]
    for z in grid_points(r, m):
        try:
            v = evaluate(f, z, tol)[:, 0]
        except DbrInterpError:
            v = np.full(q, np.nan + 0j)
        cells = [z.real, z.imag]
        for a in v:
            cells += [a.real, a.imag, abs(a)]
        lines.append(",".join("nan" if math.isnan(c) else "%.17g" % c for c in cells))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_version(args) -> int:
    print(f"dbrinterp {__version__}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dbrinterp", description="Schur-class and Hardy-space interpolation solver.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_tol(p):
        p.add_argument("--config", help=f"TOML config file (default: ${CONFIG_ENV})")
        p.add_argument("--tol-rank", dest="rank_tol", type=float)
        p.add_argument("--tol-psd", dest="psd_tol", type=float)
        p.add_argument("--tol-residual", dest="residual_tol", type=float)

    pc = sub.add_parser("check", help="admissibility and solvability report")
    pc.add_argument("spec")
    pc.add_argument("-q", "--quiet", action="store_true")
    add_tol(pc)
    pc.set_defaults(func=cmd_check)

    ps = sub.add_parser("solve", help="solve and write the result JSON")
    ps.add_argument("spec")
    g = ps.add_mutually_exclusive_group()
    g.add_argument("--param", help="JSON file with the free function h: {\"schema\": 1, \"h\": {A,B,C,D}}")
    g.add_argument("--central", action="store_true", help="minimal-norm solution (default)")
    ps.add_argument("--out", help="output path (default: stdout)")
    add_tol(ps)
    ps.set_defaults(func=cmd_solve)

    pe = sub.add_parser("eval", help="sample a solved function on a polar grid")
    pe.add_argument("result")
    pe.add_argument("--grid", default="4x8", help="RxM: radii k/R (k=1..R), M angles")
    pe.add_argument("--out", help="CSV path (default: stdout)")
    add_tol(pe)
    pe.set_defaults(func=cmd_eval)

    pv = sub.add_parser("version")
    pv.set_defaults(func=cmd_version)
    return ap


_FAIL = (UnsolvableError, BudgetExceededError, NotAdmissibleError, InconsistencyError, RecoveryError,
         NumericalError, RouteUnavailableError)
_INPUT = (SpecError, DimensionError, DomainError, PreconditionError)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except _FAIL as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except _INPUT as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DbrInterpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL

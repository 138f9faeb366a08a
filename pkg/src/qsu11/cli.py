"""Command-line front end: spectra, orthogonality, deficiency, q -> 1 limits and the full check suite.

Every subcommand prints one ``PASS``/``FAIL`` line per tolerance check and
exits 0 only if all of them pass.  Reports go to ``--out`` (written
atomically) or, without ``--out``, to stdout with the check lines moved to
stderr.  Exit status 2 signals invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np

from .operators import build_operator, definition_matrix, reconstruct_basis
from .ortho import PAIRINGS, RELATIONS, MeasureSpec, fk_k_range, gram_matrix, unitarity_check
from .qcore import QBase
from .qpolys import PolyFamily, RepParams, eval_poly
from .spectral import deficiency_test, eigen_truncated, ladder_point, spectrum_report

COMMANDS = ("spectrum", "ortho", "deficiency", "limits", "verify-all")
OP_ALIASES = {"I2": "I2_psi", "I4": "I4_psi"}
LIMIT_CHECKS = ("eigenvalue-map", "cont-q-laguerre", "matrix")
DEFAULT_Q_SEQ = tuple(1 - 2.0 ** -j for j in range(1, 7))

DEFAULTS = {
    "op": "I1",
    "q": 0.5,
    "l": 1.0,
    "psi": 0.0,
    "c": 1.0,
    "dim": 300,
    "nmax": 8,
    "kmax": 200,
    "relation": "cont_qL_313",
    "check": "eigenvalue-map",
    "mu": 1.0,
    "q_seq": None,
    "out": None,
    "format": "json",
    "tol_spectrum": 1e-10,
    "tol_gram": 1e-8,
}
FLOAT_KEYS = ("q", "l", "psi", "c", "mu", "tol_spectrum", "tol_gram")
INT_KEYS = ("dim", "nmax", "kmax")

# Fixed thresholds of the named checks in verify-all.
TOL_LADDER = 1e-9
TOL_RECONSTRUCT = 1e-9
TOL_DUALITY = 1e-9
EDGE_GAP = 1e-3
LADDER_RATIO_TOL = 1e-3


class ConfigError(ValueError):
    """Invalid command-line or config-file input (exit status 2)."""


# ---------------------------------------------------------------- reports

def check(name: str, value, tol, passed: bool) -> dict:
    return {"name": name, "value": value, "tol": tol, "pass": bool(passed)}


def _clean(obj):
    """Convert numpy values to JSON types; NaN and infinities become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def to_json(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, allow_nan=False) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qsu11-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def spectrum_csv(eigs, predicted) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "eigenvalue", "predicted", "abs_error"])
    for i, lam in enumerate(eigs):
        p = predicted[i] if i < len(predicted) else None
        err = "" if p is None else repr(abs(float(lam) - p))
        w.writerow([i, repr(float(lam)), "" if p is None else repr(float(p)), err])
    return buf.getvalue()


def _params_dict(cfg: dict) -> dict:
    return {k: cfg[k] for k in ("q", "l", "psi", "c")}


def _rep(cfg: dict) -> RepParams:
    return RepParams(QBase(cfg["q"]), cfg["l"], cfg["psi"], cfg["c"])


# ---------------------------------------------------------------- config

def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; keys match the long flags."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {num}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"config line {num}: unknown key {key!r}")
        out[key] = value
    return out


def _coerce(cfg: dict) -> dict:
    try:
        for k in FLOAT_KEYS:
            if cfg[k] is not None:
                cfg[k] = float(cfg[k])
        for k in INT_KEYS:
            if cfg[k] is not None:
                cfg[k] = int(cfg[k])
        if isinstance(cfg["q_seq"], str):
            cfg["q_seq"] = tuple(float(s) for s in cfg["q_seq"].split(",") if s.strip())
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def validate(cfg: dict) -> dict:
    q = cfg["q"]
    if not (0.0 < q < 1.0):
        raise ConfigError("q must lie in (0,1)")
    if not cfg["l"] > 0:
        raise ConfigError("l must be positive")
    if not 0.0 <= cfg["psi"] < 2 * math.pi:
        raise ConfigError("psi must lie in [0, 2*pi)")
    if cfg["c"] is not None and not cfg["c"] > 0:
        raise ConfigError("c must be positive")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    if cfg["nmax"] < 0:
        raise ConfigError("nmax must be nonnegative")
    if cfg["tol_spectrum"] <= 0 or cfg["tol_gram"] <= 0:
        raise ConfigError("tolerances must be positive")
    if cfg["q_seq"] is not None and not all(0 < v < 1 for v in cfg["q_seq"]):
        raise ConfigError("q must lie in (0,1)")
    cfg["op"] = OP_ALIASES.get(cfg["op"], cfg["op"])
    return cfg


def thread_count() -> int:
    raw = os.environ.get("QSU11_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigError("QSU11_THREADS must be a positive integer")
    return n


# ---------------------------------------------------------------- commands

def run_spectrum(cfg: dict):
    kind = cfg["op"]
    params = _rep(cfg)
    try:
        rep = spectrum_report(kind, params, cfg["dim"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    eigs = rep.eigenvalues
    tol = cfg["tol_spectrum"]
    checks = []
    predicted: list = []
    if rep.prediction["type"] == "interval":
        lo, hi = rep.prediction["interval"]
        checks.append(check("max_violation", rep.max_violation, tol, rep.max_violation <= tol))
        checks.append(check("lambda_min_near_lower_edge", float(eigs[0] - lo), EDGE_GAP,
                            eigs[0] - lo < EDGE_GAP))
        checks.append(check("lambda_max_near_upper_edge", float(hi - eigs[-1]), EDGE_GAP,
                            hi - eigs[-1] < EDGE_GAP))
    elif rep.prediction["type"] == "point_set":
        by_eig = {m[1]: m[0] for m in rep.matched_points}
        predicted = [by_eig.get(float(v)) for v in eigs]
        expected = [ladder_point(n, params) for n in range(8)]
        matched = sorted(rep.matched_points, key=lambda m: -abs(m[0]))[:8]
        errs = [abs(m[1] - e) for m, e in zip(matched, expected)]
        ok = len(errs) == 8 and all(abs(m[0] - e) == 0 for m, e in zip(matched, expected))
        worst = max(errs) if errs else float("inf")
        checks.append(check("ladder_points_0_7", worst, TOL_LADDER, ok and worst <= TOL_LADDER))
    else:
        q = params.q
        checks.append(check("ladder_ratio_vs_q", abs(rep.ratio_estimate - q), LADDER_RATIO_TOL,
                            abs(rep.ratio_estimate - q) <= LADDER_RATIO_TOL))
    report = {
        "command": "spectrum",
        "op": kind,
        "dim": cfg["dim"],
        "params": _params_dict(cfg),
        "prediction": rep.prediction,
        "ratio_estimate": rep.ratio_estimate,
        "notes": list(rep.notes),
        "eigenvalues": eigs,
        "checks": checks,
    }
    text = spectrum_csv(eigs, predicted) if cfg["format"] == "csv" else to_json(report)
    return checks, text


def _gram_checks(rep, tol: float) -> list:
    out = [check("max_offdiag", rep.max_offdiag, tol, rep.max_offdiag < tol),
           check("max_diag_dev", rep.max_diag_dev, tol, rep.max_diag_dev < tol)]
    if rep.quadrature_change is not None:
        out.append(check("quadrature_change", rep.quadrature_change, 1e-10,
                         rep.quadrature_change < 1e-10))
    return out


def run_ortho(cfg: dict):
    relation = cfg["relation"]
    params = _rep(cfg)
    tol = cfg["tol_gram"]
    if relation in PAIRINGS:
        rep = unitarity_check(relation, params, cfg["nmax"], cfg["nmax"])
        checks = [check("row_residual", rep.row_residual, tol, rep.row_residual < tol),
                  check("col_residual", rep.col_residual, tol, rep.col_residual < tol)]
        report = {"command": "ortho", "relation": relation, "params": _params_dict(cfg),
                  "nmax": cfg["nmax"], "rows_used": rep.rows_used, "cols_used": rep.cols_used,
                  "checks": checks}
        return checks, to_json(report)
    if relation not in RELATIONS:
        raise ConfigError(f"unknown relation {relation!r}")
    try:
        spec = MeasureSpec(relation, params,
                           k_range=fk_k_range(cfg["nmax"]) if relation == "fk_719" else None)
        rep = gram_matrix(spec, cfg["nmax"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    checks = _gram_checks(rep, tol)
    report = {
        "command": "ortho",
        "relation": relation,
        "params": _params_dict(cfg),
        "nmax": rep.n_max,
        "index_labels": list(rep.index_labels),
        "gram": rep.gram,
        "predicted_diag": rep.predicted_diag,
        "max_offdiag": rep.max_offdiag,
        "max_diag_dev": rep.max_diag_dev,
        "fitted_constant": rep.fitted_constant,
        "truncation_terms_used": rep.truncation_terms_used,
        "checks": checks,
    }
    return checks, to_json(report)


EXPECTED_VERDICT = {"I1": "bounded_selfadjoint", "I1_phi": "bounded_selfadjoint",
                    "I2_psi": "bounded_selfadjoint", "I3": "indices_1_1",
                    "I3_psi": "indices_1_1", "I4_psi": "indices_1_1"}


def run_deficiency(cfg: dict):
    kind = cfg["op"]
    params = _rep(cfg)
    try:
        v = deficiency_test(kind, params, cfg["kmax"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    checks = []
    if kind in EXPECTED_VERDICT:
        want = EXPECTED_VERDICT[kind]
        checks.append(check("verdict_" + want, v.verdict, want, v.verdict == want))
    if v.verdict == "indices_1_1" or kind in ("I3", "I3_psi", "I4_psi"):
        checks.append(check("logconcave", v.logconcave_ok, True, v.logconcave_ok))
        gap = abs(v.ratio_limit - params.q)
        checks.append(check("ratio_limit_vs_q", gap, 1e-6, gap < 1e-6))
    report = {"command": "deficiency", "op": kind, "params": _params_dict(cfg), "K": v.K,
              "verdict": v.verdict, "logconcave_ok": v.logconcave_ok,
              "carleman_sum": v.carleman_sum, "ratio_limit": v.ratio_limit,
              "bounded": v.bounded, "checks": checks}
    return checks, to_json(report)


def limit_table(which: str, q_seq, mu: float = 1.0, l: float = 1.0, n: int = 3,
                dim: int = 20) -> list:
    """Rows (q, error) of a q -> 1 limit.

    ``eigenvalue-map``: |(1 - q^mu)/(q^{-1/2} - q^{1/2}) - mu|.
    ``cont-q-laguerre``: |P_n^{(2l-1)}(q^mu | q) - L_n^{(2l-1)}(2 mu)|.
    ``matrix``: max entrywise distance between the I1 section and the classical J0 - J1 section.
    """
    rows = []
    for q in q_seq:
        if which == "eigenvalue-map":
            err = abs((1 - q ** mu) / (q ** -0.5 - q ** 0.5) - mu)
        elif which == "cont-q-laguerre":
            alpha = 2 * l - 1
            qv = eval_poly(PolyFamily("cont_q_laguerre", alpha), n, q ** mu, q)
            cl = eval_poly(PolyFamily("laguerre_classical", alpha), n, 2 * mu, q)
            err = abs(float(np.real(qv)) - float(np.real(cl)))
        elif which == "matrix":
            p = RepParams(QBase(q), l)
            err = float(np.max(np.abs(build_operator("I1", p, dim).dense()
                                      - build_operator("classical", p, dim).dense())))
        else:
            raise ConfigError(f"unknown limit check {which!r}")
        rows.append((float(q), float(err)))
    return rows


def strictly_decreasing(errs) -> bool:
    return all(b < a for a, b in zip(errs, errs[1:]))


def run_limits(cfg: dict):
    which = cfg["check"]
    if which not in LIMIT_CHECKS:
        raise ConfigError(f"check must be one of {', '.join(LIMIT_CHECKS)}")
    q_seq = cfg["q_seq"] or DEFAULT_Q_SEQ
    if len(q_seq) < 2:
        raise ConfigError("q-seq needs at least two values")
    n = cfg["nmax"] if cfg.get("_nmax_given") else 3
    dim = min(cfg["dim"], 20) if not cfg.get("_dim_given") else cfg["dim"]
    table = limit_table(which, q_seq, cfg["mu"], cfg["l"], n, dim)
    errs = [e for _, e in table]
    checks = [check(which + "_errors_decreasing", errs[-1], None, strictly_decreasing(errs))]
    if cfg["format"] == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "abs_error"])
        for q, e in table:
            w.writerow([repr(q), repr(e)])
        return checks, buf.getvalue()
    report = {"command": "limits", "check": which, "mu": cfg["mu"], "l": cfg["l"],
              "table": [{"q": q, "abs_error": e} for q, e in table], "checks": checks}
    return checks, to_json(report)


# ---------------------------------------------------------------- verify-all

def _check_interval(params: RepParams) -> dict:
    eigs = eigen_truncated(build_operator("I1", params, 300))
    hi = 2 * math.sqrt(params.q) / (1 - params.q)
    ok = (eigs[0] >= -1e-10 and eigs[-1] <= hi + 1e-10
          and eigs[0] < EDGE_GAP and eigs[-1] > hi - EDGE_GAP)
    viol = max(-eigs[0], eigs[-1] - hi, 0.0)
    return check("I1_spectrum_interval", viol, 1e-10, ok)


def _check_isospectral(params: RepParams) -> dict:
    base = eigen_truncated(build_operator("I1", params, 200))
    worst = 0.0
    for phi in (0.0, 1.0, math.pi):
        p = RepParams(params.base, params.l, phi, params.c)
        w = np.linalg.eigvalsh(definition_matrix("I1_phi", p, 200))
        worst = max(worst, float(np.max(np.abs(np.sort(w) - base))))
    return check("I1_phi_isospectral", worst, 1e-10, worst < 1e-10)


def _check_ladder(params: RepParams) -> dict:
    rep = spectrum_report("I2_psi", params, 200)
    expected = [ladder_point(n, params) for n in range(8)]
    matched = sorted(rep.matched_points, key=lambda m: -abs(m[0]))[:8]
    errs = [abs(m[1] - e) for m, e in zip(matched, expected)]
    ok = all(m[0] == e for m, e in zip(matched, expected)) and max(errs) < TOL_LADDER
    return check("I2_point_spectrum", max(errs), TOL_LADDER, ok)


def _check_reconstruct(kind: str, name: str, params: RepParams) -> dict:
    worst = max(reconstruct_basis(kind, n, params, n + 6) for n in range(11))
    return check(name, worst, TOL_RECONSTRUCT, worst < TOL_RECONSTRUCT)


def _check_asc_dual(params: RepParams) -> dict:
    g = gram_matrix(MeasureSpec("asc_dual_514", params), 8)
    u = unitarity_check("little_qL_vs_asc", params, 8, 8)
    worst = max(g.max_offdiag, u.col_residual)
    return check("asc_dual_orthogonality", worst, TOL_DUALITY, worst < TOL_DUALITY)


def _check_fk(params: RepParams) -> dict:
    g = gram_matrix(MeasureSpec("fk_719", params, k_range=fk_k_range(8)), 8)
    return check("fk_dual_orthogonality", g.max_offdiag, 1e-8, g.max_offdiag < 1e-8)


def _check_indices(kind: str, name: str, params: RepParams) -> dict:
    v = deficiency_test(kind, params, 200)
    return check(name, v.verdict, "indices_1_1", v.verdict == "indices_1_1")


def verify_all_checks(params: RepParams) -> list:
    """The nine named checks, in report order, as zero-argument callables."""
    return [
        lambda: _check_interval(params),
        lambda: _check_isospectral(params),
        lambda: _check_ladder(params),
        lambda: _check_reconstruct("I1", "I1_basis_reconstruction", params),
        lambda: _check_asc_dual(params),
        lambda: _check_reconstruct("I2_psi", "I2_basis_reconstruction", params),
        lambda: _check_indices("I3", "I3_deficiency_indices", params),
        lambda: _check_fk(params),
        lambda: _check_indices("I4_psi", "I4_deficiency_indices", params),
    ]


def _guarded(fn: Callable[[], dict], name: str) -> dict:
    try:
        return fn()
    except Exception as exc:  # a crashing sub-check is a failed check
        return check(name, f"{type(exc).__name__}: {exc}", None, False)


VERIFY_NAMES = ("I1_spectrum_interval", "I1_phi_isospectral", "I2_point_spectrum",
                "I1_basis_reconstruction", "asc_dual_orthogonality", "I2_basis_reconstruction",
                "I3_deficiency_indices", "fk_dual_orthogonality", "I4_deficiency_indices")


def run_verify_all(cfg: dict):
    params = _rep(cfg)
    fns = verify_all_checks(params)
    workers = thread_count()
    if workers == 1:
        checks = [_guarded(f, n) for f, n in zip(fns, VERIFY_NAMES)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            checks = list(pool.map(_guarded, fns, VERIFY_NAMES))
    report = {"command": "verify-all", "params": _params_dict(cfg), "checks": checks}
    return checks, to_json(report)


RUNNERS = {"spectrum": run_spectrum, "ortho": run_ortho, "deficiency": run_deficiency,
           "limits": run_limits, "verify-all": run_verify_all}


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsu11", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="file of key = value defaults")
        p.add_argument("--op", help="operator kind (I1, I1_phi, I2, I3, I3_psi, I4)")
        p.add_argument("--q", type=float)
        p.add_argument("--l", type=float)
        p.add_argument("--psi", type=float)
        p.add_argument("--c", type=float)
        p.add_argument("--dim", type=int)
        p.add_argument("--nmax", type=int)
        p.add_argument("--kmax", type=int)
        p.add_argument("--relation", help="relation or pairing id")
        p.add_argument("--check", help="limit check: " + ", ".join(LIMIT_CHECKS))
        p.add_argument("--mu", type=float)
        p.add_argument("--q-seq", dest="q_seq", help="comma-separated q values")
        p.add_argument("--out", help="report path")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--tol-spectrum", dest="tol_spectrum", type=float)
        p.add_argument("--tol-gram", dest="tol_gram", type=float)
    return parser


def resolve_config(ns: argparse.Namespace) -> dict:
    """Merge flags over the config file over built-in defaults, then validate."""
    cfg = dict(DEFAULTS)
    filed = read_config_file(ns.config) if ns.config else {}
    cfg.update(filed)
    flags = {k: v for k, v in vars(ns).items() if k in DEFAULTS and v is not None}
    cfg.update(flags)
    cfg = _coerce(cfg)
    given = set(filed) | set(flags)
    cfg["_nmax_given"] = "nmax" in given
    cfg["_dim_given"] = "dim" in given
    if ns.command == "spectrum" and cfg["op"] not in ("I1", "I1_phi") and "dim" not in given:
        cfg["dim"] = 200
    return validate(cfg)


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(ns)
        checks, text = RUNNERS[ns.command](cfg)
    except (ConfigError, ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    stream = sys.stdout if cfg["out"] else sys.stderr
    for c in checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['name']} value={c['value']} tol={c['tol']}",
              file=stream, flush=True)
    if cfg["out"]:
        write_atomic(cfg["out"], text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()
    failed = [c["name"] for c in checks if not c["pass"]]
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0

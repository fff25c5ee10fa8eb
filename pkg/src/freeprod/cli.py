"""Experiment specs, orchestration and report files.

A spec is a JSON document::

    {"command": "certify",
     "algebras": [{"id": "a", "kind": "integer"}, {"id": "b", "kind": "integer"}],
     "operands": [[{"word": [["a", 1]], "re": "1"}, {"word": [["b", 1]], "re": "1"}]],
     "mode": "exact",
     "params": {"epsilon": 0.1}}

Each run writes ``<name>.csv`` (one row per reported number, with an
``operation`` column naming the producing function) and ``<name>.json``
(summary and verdicts) into the output directory.
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
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import avitzour
from .algebra import table_from_spec, validate_table
from .bounds import (PowerIdentityError, certified_radius, f2_word_bound,
                     haagerup_bound, haagerup_homogeneous_bound, level_norms, opnorm_lower)
from .coeffs import MODES, format_coeff
from .element import FreeProduct, project_level
from .stable_rank import build_conjugators, distance_certificate

OK, SPEC_ERROR, VERIFICATION_FAILED, BUDGET_EXHAUSTED = 0, 2, 3, 4
OUT_ENV = "FREEPROD_OUT"

COMMANDS = ("validate", "mul", "project", "bound", "radius", "certify",
            "avitzour-check", "four-point-scan", "window-scan")
NEEDS_ALGEBRAS = {"validate", "mul", "project", "bound", "radius", "certify"}
OPERANDS = {"mul": 2, "project": 1, "bound": 1, "radius": 1, "certify": 1}

# name -> (default, check, description of the allowed range)
PARAMS = {
    "epsilon": (0.1, lambda x: x > 0, "> 0"),
    "m_max": (10_000, lambda x: isinstance(x, int) and 1 <= x <= 10 ** 7, "integer in [1, 1e7]"),
    "verify_cap": (3, lambda x: isinstance(x, int) and 1 <= x <= 8, "integer in [1, 8]"),
    "target": (None, lambda x: x is None or x > 0, "> 0 or null"),
    "shortcut": ("auto", lambda x: x in ("auto", "never", "only"), "auto | never | only"),
    "levels": (None, lambda x: x is None or all(isinstance(n, int) and n >= 0 for n in x),
               "list of non-negative integers or null"),
    "trials": (4, lambda x: isinstance(x, int) and x >= 1, "integer >= 1"),
    "sample_depth": (3, lambda x: isinstance(x, int) and x >= 1, "integer >= 1"),
    "n": (3, lambda x: isinstance(x, int) and x >= 2, "integer >= 2"),
    "atom": (0.4, lambda x: 0 < x < 1, "in (0, 1)"),
    "betas": ([0.0, 0.25, 1 / 3], lambda x: len(x) > 0 and all(0 <= b <= 1 / 3 + 1e-15 for b in x),
              "non-empty list in [0, 1/3]"),
    "alphas": ([0.45, 0.49, 0.5], lambda x: len(x) > 0 and all(0 < a <= 0.5 for a in x),
               "non-empty list in (0, 1/2]"),
    "grid": (20_000, lambda x: isinstance(x, int) and x >= 16, "integer >= 16"),
    "restarts": (200, lambda x: isinstance(x, int) and x >= 1, "integer >= 1"),
    "seed": (0, lambda x: isinstance(x, int) and 0 <= x < 2 ** 64, "integer in [0, 2^64)"),
    "tol": (1e-12, lambda x: x > 0, "> 0"),
}
LIST_PARAMS = {"betas", "alphas", "levels"}
INT_PARAMS = {"m_max", "verify_cap", "trials", "sample_depth", "n", "grid", "restarts", "seed"}


class SpecError(ValueError):
    """Schema violation; ``where`` names the field path or the source line."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass
class ExperimentSpec:
    command: str
    algebras: list = field(default_factory=list)
    operands: list = field(default_factory=list)
    mode: str | None = None
    params: dict = field(default_factory=dict)
    name: str = ""

    def family(self) -> FreeProduct:
        return FreeProduct([table_from_spec(a) for a in self.algebras], self.mode)


def _number(value, where):
    if isinstance(value, bool):
        raise SpecError(where, "expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return value
    if isinstance(value, str):
        try:
            return float(Fraction(value))
        except (ValueError, ZeroDivisionError):
            pass
    raise SpecError(where, f"expected a number, got {value!r}")


def _param(name, value):
    where = f"params.{name}"
    default, check, allowed = PARAMS[name]
    if value is None:
        return None if default is None else _param(name, default)
    if name == "shortcut":
        parsed = value
    elif name in LIST_PARAMS:
        if not isinstance(value, list):
            raise SpecError(where, "expected a list")
        parsed = [_number(v, f"{where}[{i}]") for i, v in enumerate(value)]
        if name == "levels":
            parsed = [int(v) if float(v).is_integer() else v for v in parsed]
        else:
            parsed = [float(v) for v in parsed]
    else:
        parsed = _number(value, where)
        if name in INT_PARAMS:
            if float(parsed) != int(parsed):
                raise SpecError(where, f"expected an integer, got {value!r}")
            parsed = int(parsed)
        else:
            parsed = float(parsed)
    try:
        good = check(parsed)
    except TypeError:
        good = False
    if not good:
        raise SpecError(where, f"{value!r} is out of range ({allowed})")
    return parsed


def _check_operand(term_list, ids, where):
    if not isinstance(term_list, list) or not term_list:
        raise SpecError(where, "expected a non-empty list of terms")
    for i, term in enumerate(term_list):
        tw = f"{where}[{i}]"
        if not isinstance(term, dict):
            raise SpecError(tw, "expected an object")
        extra = set(term) - {"word", "re", "im"}
        if extra:
            raise SpecError(tw, f"unknown fields {sorted(extra)}")
        if "word" not in term:
            raise SpecError(tw, "missing 'word'")
        for j, letter in enumerate(term["word"]):
            if not (isinstance(letter, list) and len(letter) == 2):
                raise SpecError(f"{tw}.word[{j}]", "expected [algebra id, label]")
            if letter[0] not in ids:
                raise SpecError(f"{tw}.word[{j}]", f"undefined algebra id {letter[0]!r}")
        for key in ("re", "im"):
            if key in term:
                try:
                    Fraction(str(term[key]))
                except (ValueError, ZeroDivisionError):
                    raise SpecError(f"{tw}.{key}", f"not a rational or decimal: {term[key]!r}") from None


def _line_of(text: str, key: str) -> str:
    for n, line in enumerate(text.splitlines(), 1):
        if f'"{key}"' in line:
            return f"line {n}"
    return "document"


def spec_from_dict(raw: dict, text: str = "") -> ExperimentSpec:
    if not isinstance(raw, dict):
        raise SpecError("document", "top level must be an object")
    extra = set(raw) - {"command", "algebras", "operands", "mode", "params", "name"}
    if extra:
        key = sorted(extra)[0]
        raise SpecError(f"{_line_of(text, key)}, field {key!r}", "unknown top-level field")
    command = raw.get("command")
    if command not in COMMANDS:
        raise SpecError("command", f"expected one of {', '.join(COMMANDS)}, got {command!r}")
    mode = raw.get("mode")
    if mode is not None and mode not in MODES:
        raise SpecError("mode", f"expected exact or float, got {mode!r}")
    algebras = raw.get("algebras", [])
    if not isinstance(algebras, list):
        raise SpecError("algebras", "expected a list")
    ids = []
    for i, a in enumerate(algebras):
        if not isinstance(a, dict) or "id" not in a or "kind" not in a:
            raise SpecError(f"algebras[{i}]", "needs 'id' and 'kind'")
        if a["id"] in ids:
            raise SpecError(f"algebras[{i}].id", f"duplicate algebra id {a['id']!r}")
        ids.append(a["id"])
    if command in NEEDS_ALGEBRAS and not algebras:
        raise SpecError("algebras", f"command {command!r} needs at least one algebra")
    operands = raw.get("operands", [])
    if not isinstance(operands, list):
        raise SpecError("operands", "expected a list")
    want = OPERANDS.get(command, 0)
    if len(operands) != want:
        raise SpecError("operands", f"command {command!r} takes {want} operand(s), got {len(operands)}")
    for i, op in enumerate(operands):
        _check_operand(op, ids, f"operands[{i}]")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise SpecError("params", "expected an object")
    unknown = set(params) - set(PARAMS)
    if unknown:
        key = sorted(unknown)[0]
        raise SpecError(f"params.{key}", f"unknown parameter ({_line_of(text, key)})")
    full = {k: _param(k, params.get(k)) for k in sorted(PARAMS)}
    name = raw.get("name") or command
    if not isinstance(name, str) or not name.replace("-", "").replace("_", "").isalnum():
        raise SpecError("name", f"must be alphanumeric with - or _, got {name!r}")
    return ExperimentSpec(command, [dict(a) for a in algebras], operands, mode, full, name)


def parse_spec(text: str) -> ExperimentSpec:
    """Parse and validate a JSON spec; every default is filled in."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    return spec_from_dict(raw, text)


def emit_spec(spec: ExperimentSpec) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(asdict(spec), indent=2, sort_keys=True) + "\n"


# -- running ---------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _word_text(w) -> str:
    return " ".join(f"{aid}:{x}" for aid, x in w) or "1"


def _element_rows(op, a, **extra):
    rows = []
    for w, c in a.items():
        re_, im_ = format_coeff(c)
        rows.append({"operation": op, **extra, "word": _word_text(w), "re": re_, "im": im_})
    return rows


def _operands(spec, family):
    return [family.from_literal(op, spec.mode) for op in spec.operands]


def _run_validate(spec, family):
    rows, reports = [], []
    for aid in sorted(family.tables):
        t = family.tables[aid]
        tol = 0.0 if t.exact else spec.params["tol"]
        rep = validate_table(t, spec.params["sample_depth"], tol)
        reports.append(rep)
        failed = rep.checks_failed()
        for check in ("star/unit closure", "unitarity", "product closure", "trace property",
                      "orthonormality", "associativity"):
            rows.append({"operation": "validate_table", "algebra": aid, "check": check,
                         "passed": check not in failed, "max_residual": rep.max_residual})
    summary = {"passed": all(r.passed for r in reports),
               "violations": [asdict(v) for r in reports for v in r.violations]}
    status = OK if summary["passed"] else VERIFICATION_FAILED
    return rows, summary, status


def _run_mul(spec, family):
    a, b = _operands(spec, family)
    prod = a * b
    return _element_rows("multiply", prod), {"terms": len(prod), "norm2": prod.norm2(),
                                            "product": prod.to_literal()}, OK


def _run_project(spec, family):
    (a,) = _operands(spec, family)
    levels = spec.params["levels"]
    if levels is None:
        levels = list(range(a.max_level + 1))
    rows = []
    for n in levels:
        rows += _element_rows("project_level", project_level(a, n), level=n)
    return rows, {"level_norms": level_norms(a)}, OK


def _run_bound(spec, family):
    (a,) = _operands(spec, family)
    rows = [{"operation": "haagerup_bound", "value": haagerup_bound(a)}]
    if a.is_homogeneous():
        rows.append({"operation": "haagerup_homogeneous_bound", "value": haagerup_homogeneous_bound(a)})
    if all(t.kind == "integer" for t in family.tables.values()):
        rows.append({"operation": "f2_word_bound", "value": f2_word_bound(a)})
    rows.append({"operation": "opnorm_lower",
                 "value": opnorm_lower(a, spec.params["trials"], spec.params["seed"])})
    lower = rows[-1]["value"]
    upper = min(r["value"] for r in rows[:-1])
    return rows, {"lower": lower, "upper": upper, "consistent": lower <= upper + 1e-9}, OK


def _trail_rows(op, cert):
    return [{"operation": op, "m": e.m, "degree_bound": e.degree_bound, "bound": e.bound}
            for e in cert.trail]


def _run_radius(spec, family):
    (a,) = _operands(spec, family)
    conj = build_conjugators(a, shortcut=spec.params["shortcut"])
    p = spec.params
    cert = certified_radius(a, conj.u, conj.v, p["m_max"], p["verify_cap"], p["target"])
    summary = {"best_bound": cert.best_bound, "best_m": cert.best.m, "method": conj.method,
               "two_norm": cert.two_norm, "k_squared": cert.k_squared,
               "identity_verified": cert.identity_verified}
    status = OK
    if p["target"] is not None and cert.best_bound > p["target"]:
        status = BUDGET_EXHAUSTED
    return _trail_rows("certified_radius", cert), summary, status


def _run_certify(spec, family):
    (a,) = _operands(spec, family)
    p = spec.params
    cert = distance_certificate(a, p["epsilon"], m_budget=p["m_max"], shortcut=p["shortcut"],
                                verify_cap=p["verify_cap"])
    rows = _trail_rows("certified_radius", cert.radius)
    rows.append({"operation": "distance_certificate", "m": cert.m, "bound": cert.claimed_distance})
    summary = {k: v for k, v in cert.to_dict().items() if k not in ("radius", "approximant", "element")}
    summary["best_bound"] = cert.radius.best_bound
    if not cert.difference_is_scaled_unitary or not cert.radius.identity_verified:
        return rows, summary, VERIFICATION_FAILED
    return rows, summary, OK if cert.target_reached else BUDGET_EXHAUSTED


def _run_avitzour_check(spec, family):
    n, atom = spec.params["n"], spec.params["atom"]
    v = avitzour.atom_obstruction(n, atom)
    u, w = avitzour.matrix_avitzour_pair(n)
    resid = avitzour.orthonormality_residual([np.eye(n), u, w])
    moments = avitzour.unitary_trace_powers(avitzour.root_of_unity_unitary(n), [1 / n] * n)
    rows = [
        {"operation": "atom_obstruction", "n": n, "parameter": atom, "value": v.min_eigenvalue,
         "verdict": "feasible" if v.feasible else "infeasible"},
        {"operation": "matrix_avitzour_pair", "n": n, "parameter": "", "value": resid, "verdict": ""},
        {"operation": "root_of_unity_unitary", "n": n, "parameter": "",
         "value": max(abs(m) for m in moments), "verdict": ""},
    ]
    summary = {"n": n, "atom": atom, "alpha": v.alpha, "min_eigenvalue": v.min_eigenvalue,
               "closed_form": v.closed_form, "feasible": v.feasible, "matrix_residual": resid}
    return rows, summary, OK


def _run_four_point(spec, family):
    p = spec.params
    rows = []
    for beta in p["betas"]:
        r = avitzour.four_point_infeasibility(beta, p["restarts"], p["seed"])
        rows.append({"operation": "four_point_infeasibility", "beta": beta, "residual": r.residual,
                     "restart": r.restart})
    res = [r["residual"] for r in rows]
    lo, hi = min(res), max(res)
    span = math.log10(hi / lo) if lo > 0 else math.inf
    return rows, {"min_residual": lo, "max_residual": hi, "orders_of_magnitude": span,
                  "evidence_only": True}, OK


def _run_window(spec, family):
    rows = []
    for alpha in spec.params["alphas"]:
        w = avitzour.phase_window_scan(alpha, spec.params["grid"])
        rows.append({"operation": "phase_window_scan", "alpha": alpha, "beta": w.beta,
                     "gamma": w.gamma, "im_min": w.im_min, "im_max": w.im_max, "inside": w.inside})
    escaped = [r["alpha"] for r in rows if not r["inside"]]
    return rows, {"largest_escape": max(escaped) if escaped else None, "empirical": True}, OK


RUNNERS = {
    "validate": _run_validate, "mul": _run_mul, "project": _run_project, "bound": _run_bound,
    "radius": _run_radius, "certify": _run_certify, "avitzour-check": _run_avitzour_check,
    "four-point-scan": _run_four_point, "window-scan": _run_window,
}


def _csv_text(rows) -> str:
    cols = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols or ["operation"], lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


@dataclass
class RunResult:
    status: int
    csv_path: Path | None
    json_path: Path
    summary: dict


def run_experiment(spec: ExperimentSpec, out_dir) -> RunResult:
    """Run one spec and write its CSV and JSON reports atomically."""
    out = Path(out_dir)
    csv_path, json_path = out / f"{spec.name}.csv", out / f"{spec.name}.json"
    try:
        family = spec.family() if spec.algebras else None
        rows, summary, status = RUNNERS[spec.command](spec, family)
    except ValueError as exc:
        # every input error of the package derives from ValueError
        return _fail(spec, json_path, SPEC_ERROR, type(exc).__name__, exc)
    except PowerIdentityError as exc:
        return _fail(spec, json_path, VERIFICATION_FAILED, type(exc).__name__, exc)
    _write_atomic(csv_path, _csv_text(rows))
    report = {"command": spec.command, "name": spec.name, "status": status,
              "rows": len(rows), "summary": summary}
    _write_atomic(json_path, json.dumps(_json_safe(report), indent=2, sort_keys=True) + "\n")
    return RunResult(status, csv_path, json_path, summary)


def _fail(spec, json_path, status, code, exc):
    report = {"command": spec.command, "name": spec.name, "status": status,
              "error": {"code": code, "message": str(exc)}}
    _write_atomic(json_path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return RunResult(status, None, json_path, report)


def run_batch(specs, out_dir, workers: int = 4) -> list:
    """Independent experiments in parallel; results keep the input order."""
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise SpecError("batch", "experiment names must be unique")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: run_experiment(s, out_dir), specs))


# -- command line ----------------------------------------------------------


def default_spec(command: str) -> dict:
    """Free group on ``a, b`` with the element ``lambda_a + lambda_b``."""
    raw = {"command": command, "params": {}}
    if command in NEEDS_ALGEBRAS:
        raw["algebras"] = [{"id": "a", "kind": "integer"}, {"id": "b", "kind": "integer"}]
        ab = [{"word": [["a", 1]], "re": "1"}, {"word": [["b", 1]], "re": "1"}]
        raw["operands"] = [ab] * OPERANDS.get(command, 0)
    return raw


def _assignment(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise SpecError(text, "expected key=value")
    key = key.strip()
    if key in LIST_PARAMS:
        return key, [v.strip() for v in value.split(",") if v.strip()]
    return key, value.strip()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freeprod", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS + ("batch",):
        p = sub.add_parser(name)
        if name == "batch":
            p.add_argument("specs", nargs="+", help="spec files")
            p.add_argument("--workers", type=int, default=4)
        else:
            p.add_argument("--spec", help="JSON spec file; its command must match")
            p.add_argument("assignments", nargs="*", metavar="key=value", help="parameter overrides")
        p.add_argument("--out", default=os.environ.get(OUT_ENV, "freeprod-out"))
        p.add_argument("--seed", type=int)
        p.add_argument("--mode", choices=MODES)
        p.add_argument("--tol", type=float)
    return parser


def _load(path, command, assignments, args) -> ExperimentSpec:
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise SpecError(str(path), exc.strerror or str(exc)) from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: line {exc.lineno}, column {exc.colno}", exc.msg) from None
        if command and raw.get("command", command) != command:
            raise SpecError("command", f"spec says {raw.get('command')!r} but {command!r} was requested")
        raw.setdefault("command", command)
    else:
        text, raw = "", default_spec(command)
    raw.setdefault("params", {})
    for item in assignments:
        key, value = _assignment(item)
        raw["params"][key] = value
    if args.seed is not None:
        raw["params"]["seed"] = args.seed
    if args.tol is not None:
        raw["params"]["tol"] = args.tol
    if args.mode is not None:
        raw["mode"] = args.mode
    return spec_from_dict(raw, text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "batch":
            specs = [_load(p, None, [], args) for p in args.specs]
        else:
            specs = [_load(args.spec, args.command, args.assignments, args)]
    except SpecError as exc:
        print(json.dumps({"error": "spec_error", "where": exc.where, "message": str(exc)}), file=sys.stderr)
        return SPEC_ERROR
    results = run_batch(specs, args.out, getattr(args, "workers", 1))
    for spec, res in zip(specs, results):
        print(f"{spec.name}: status {res.status} -> {res.json_path}")
    return max(r.status for r in results)


if __name__ == "__main__":
    sys.exit(main())

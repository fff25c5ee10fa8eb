import csv
import json
import math

import pytest

from freeprod import cli
from freeprod.cli import (BUDGET_EXHAUSTED, OK, SPEC_ERROR, VERIFICATION_FAILED, SpecError, emit_spec,
                          main, parse_spec, run_batch, run_experiment)

F2 = [{"id": "a", "kind": "integer"}, {"id": "b", "kind": "integer"}]
AB = [{"word": [["a", 1]], "re": "1"}, {"word": [["b", 1]], "re": "1"}]


def spec_text(**over):
    raw = {"command": "certify", "algebras": F2, "operands": [AB], "params": {"epsilon": 0.1}}
    raw.update(over)
    return json.dumps(raw, indent=2)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_minimal_spec_is_valid():
    spec = parse_spec(spec_text())
    assert spec.command == "certify" and spec.params["epsilon"] == 0.1
    assert spec.params["seed"] == 0 and spec.name == "certify"


def test_undefined_algebra_id_is_named():
    bad = [{"word": [["c", 1]], "re": "1"}]
    with pytest.raises(SpecError, match="undefined algebra id 'c'") as exc:
        parse_spec(spec_text(operands=[bad]))
    assert exc.value.where == "operands[0][0].word[0]"


@pytest.mark.parametrize("over", [
    {},
    {"command": "four-point-scan", "algebras": [], "operands": [], "params": {"betas": ["1/3", 0]}},
    {"command": "mul", "operands": [AB, AB], "mode": "float", "name": "prod"},
])
def test_emit_parse_round_trip(over):
    spec = parse_spec(spec_text(**over))
    assert parse_spec(emit_spec(spec)) == spec
    assert emit_spec(parse_spec(emit_spec(spec))) == emit_spec(spec)


def test_syntax_error_reports_line():
    with pytest.raises(SpecError, match="line 3"):
        parse_spec('{\n "command": "mul",\n oops\n}')


@pytest.mark.parametrize("over, where", [
    ({"params": {"epsilon": -1}}, "params.epsilon"),
    ({"params": {"speed": 1}}, "params.speed"),
    ({"params": {"m_max": 2.5}}, "params.m_max"),
    ({"command": "frobnicate"}, "command"),
    ({"operands": []}, "operands"),
    ({"mode": "fuzzy"}, "mode"),
    ({"algebras": [F2[0], F2[0]]}, "algebras[1].id"),
])
def test_field_diagnostics(over, where):
    with pytest.raises(SpecError) as exc:
        parse_spec(spec_text(**over))
    assert exc.value.where == where


def test_certify_trail_decreases_toward_sqrt2(tmp_path):
    res = run_experiment(parse_spec(spec_text()), tmp_path)
    assert res.status == OK
    rows = read_csv(res.csv_path)
    assert {r["operation"] for r in rows} == {"certified_radius", "distance_certificate"}
    trail = [float(r["bound"]) for r in rows if r["operation"] == "certified_radius"]
    assert trail[-1] < trail[0] and min(trail) >= math.sqrt(2)
    assert trail[-1] <= math.sqrt(2) + 0.05 + 1e-12
    summary = json.loads(res.json_path.read_text())
    assert summary["summary"]["target_reached"]


def test_avitzour_check_infeasible(tmp_path):
    spec = parse_spec(json.dumps({"command": "avitzour-check", "params": {"n": 3, "atom": 0.4}}))
    res = run_experiment(spec, tmp_path)
    row = read_csv(res.csv_path)[0]
    assert row["verdict"] == "infeasible" and float(row["value"]) < 0
    assert not res.summary["feasible"]


def test_four_point_scan_spans_orders(tmp_path):
    spec = parse_spec(json.dumps({"command": "four-point-scan",
                                  "params": {"betas": [0, 0.25, "1/3"], "restarts": 40}}))
    res = run_experiment(spec, tmp_path)
    assert res.summary["orders_of_magnitude"] >= 6


@pytest.mark.parametrize("command", ["validate", "mul", "project", "bound", "radius", "window-scan"])
def test_every_command_runs(tmp_path, command):
    argv = [command, "--out", str(tmp_path)]
    if command == "window-scan":
        argv.append("grid=500")
    assert main(argv) == OK
    rows = read_csv(tmp_path / f"{command}.csv")
    assert rows and all(r["operation"] for r in rows)


def test_exit_code_spec_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(spec_text(operands=[[{"word": [["z", 1]]}]]))
    assert main(["certify", "--spec", str(path), "--out", str(tmp_path)]) == SPEC_ERROR
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "spec_error" and "'z'" in err["message"]
    assert main(["mul", "--spec", str(tmp_path / "missing.json")]) == SPEC_ERROR


def test_exit_code_command_mismatch(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(spec_text())
    assert main(["mul", "--spec", str(path), "--out", str(tmp_path)]) == SPEC_ERROR


def test_exit_code_budget(tmp_path):
    assert main(["certify", "epsilon=0.001", "m_max=10", "--out", str(tmp_path)]) == BUDGET_EXHAUSTED


def test_exit_code_verification(tmp_path, monkeypatch):
    from freeprod import stable_rank

    real = stable_rank.verify_power_identity

    def broken(a, u, v, m_cap):
        rep = real(a, u, v, m_cap)
        rep.first_failure = 1
        return rep

    monkeypatch.setattr(stable_rank, "verify_power_identity", broken)
    assert main(["radius", "m_max=5", "--out", str(tmp_path)]) == VERIFICATION_FAILED
    report = json.loads((tmp_path / "radius.json").read_text())
    assert report["error"]["code"] == "PowerIdentityError"


def test_flags_override_spec(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(spec_text(command="bound", params={}))
    assert main(["bound", "--spec", str(path), "--seed", "9", "--mode", "float", "--out", str(tmp_path)]) == OK
    assert cli._load(str(path), "bound", [], cli.build_parser().parse_args(
        ["bound", "--seed", "9", "--mode", "float"])).params["seed"] == 9


def test_default_output_dir_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env-out"))
    assert main(["avitzour-check", "n=2", "atom=0.3"]) == OK
    assert (tmp_path / "env-out" / "avitzour-check.csv").exists()


def test_batch_is_deterministic(tmp_path):
    specs = [parse_spec(spec_text(name="cert")),
             parse_spec(json.dumps({"command": "four-point-scan", "name": "fp",
                                    "params": {"betas": [0, 0.3], "restarts": 8, "seed": 3}})),
             parse_spec(json.dumps({"command": "window-scan", "name": "win", "params": {"grid": 300}}))]
    first = run_batch(specs, tmp_path / "one")
    second = run_batch(specs, tmp_path / "two")
    for a, b in zip(first, second):
        assert a.csv_path.read_bytes() == b.csv_path.read_bytes()
        assert a.json_path.read_bytes() == b.json_path.read_bytes()
    with pytest.raises(SpecError):
        run_batch([specs[0], specs[0]], tmp_path)


def test_batch_command(tmp_path):
    paths = []
    for name, n in (("left", 2), ("right", 5)):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps({"command": "avitzour-check", "name": name, "params": {"n": n, "atom": 0.1}}))
        paths.append(str(p))
    assert main(["batch", *paths, "--out", str(tmp_path / "out")]) == OK
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == [
        "left.csv", "left.json", "right.csv", "right.json"]


def test_exact_mode_on_float_factor_is_a_spec_error(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"command": "mul",
                                "algebras": [{"id": "M", "kind": "finite_dim", "blocks": [2], "weights": [1]}],
                                "operands": [[{"word": [["M", 1]], "re": "1"}]] * 2}))
    assert main(["mul", "--spec", str(path), "--mode", "exact", "--out", str(tmp_path)]) == SPEC_ERROR
    assert json.loads((tmp_path / "mul.json").read_text())["error"]["code"] == "ModeError"
    assert main(["mul", "--spec", str(path), "--out", str(tmp_path)]) == OK

import json
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from uniformis.cli import (EXIT_NONCONVERGED, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, InputError, dispatch,
                           format_record, parse_record, read_input, schema)
from uniformis.demos import REGISTRY

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = dispatch([str(a) for a in argv])
    return code, capsys.readouterr()


def d(name):
    return DATA / name


def test_hausdorff_command(capsys):
    code, out = run(capsys, "hausdorff", "--space", d("line.json"), "--a", d("a.json"), "--b", d("b.json"),
                    "--index", "d1")
    assert code == EXIT_OK
    assert "H[d1] = 1 " in out.out and "agree" in out.out


def test_alpha_command_prints_scale_rule(capsys):
    code, out = run(capsys, "alpha", "--expr", d("union_scale.json"))
    assert code == EXIT_OK
    assert "alpha in [1.0, 1.0]" in out.out
    assert "scale: alpha(bA) = |b| alpha(A)" in out.out


def test_certify_command(capsys):
    assert run(capsys, "certify-ksc", "--op", d("ksc_op.json"), "--k", 0.5)[0] == EXIT_OK
    code, out = run(capsys, "certify-ksc", "--op", d("opaque_op.json"), "--k", 0.5)
    assert code == EXIT_VIOLATION and "warp" in out.out


def test_picard_command_and_trace(capsys, tmp_path):
    trace = tmp_path / "t.jsonl"
    code, out = run(capsys, "solve-picard", "--space", d("line.json"), "--operator", d("half_plus_half.json"),
                    "--k", 0.5, "--x0", 0, "--tol", 1e-9, "--trace", trace)
    assert code == EXIT_OK and "converged" in out.out
    lines = trace.read_text().splitlines()
    records = [parse_record(line) for line in lines]
    assert records[0]["type"] == "manifest" and records[0]["config"]["tol"] == 1e-9
    assert records[-1]["type"] == "summary" and records[-1]["termination"] == "converged"
    final = [r for r in records if r["type"] == "iterate"][-1]["x"][0]
    assert final == pytest.approx(1.0, abs=1e-8)
    assert all(format_record(parse_record(line)) == line for line in lines)


def test_nonconvergence_exit_code(capsys):
    code, _ = run(capsys, "solve-picard", "--space", d("line.json"), "--operator", d("half_plus_half.json"),
                  "--k", 0.5, "--x0", 0, "--max-iter", 3)
    assert code == EXIT_NONCONVERGED


def test_picard_rejects_multivalued_operator(capsys):
    code, out = run(capsys, "solve-picard", "--space", d("line.json"), "--operator", d("two_branch.json"),
                    "--k", 0.5, "--x0", 0)
    assert code == EXIT_USAGE and "single-valued" in out.err


@pytest.mark.parametrize("branch, target", [("0", 0.0), ("1", 1.5)])
def test_nadler_command(capsys, tmp_path, branch, target):
    trace = tmp_path / "n.jsonl"
    code, _ = run(capsys, "solve-nadler", "--space", d("line.json"), "--operator", d("two_branch.json"),
                  "--k", 0.34, "--x0", 0.9, "--branch", branch, "--trace", trace)
    assert code == EXIT_OK
    iterates = [r for r in map(parse_record, trace.read_text().splitlines()) if r["type"] == "iterate"]
    assert iterates[-1]["x"][0] == pytest.approx(target, abs=1e-7)


def test_caristi_commands(capsys):
    code, out = run(capsys, "solve-caristi", "--space", d("plane.json"), "--operator", d("halving_plane.json"),
                    "--potentials", d("plane_potentials.json"), "--x0", "1,1")
    assert code == EXIT_OK
    assert run(capsys, "solve-caristi", "--space", d("line.json"), "--operator", d("two_branch.json"),
               "--k", 0.34, "--x0", 0.9)[0] == EXIT_OK
    assert run(capsys, "solve-caristi", "--space", d("line.json"), "--operator", d("two_branch.json"),
               "--x0", 0.9)[0] == EXIT_USAGE


def test_inward_commands(capsys):
    base = ["--space", d("line.json"), "--hull", d("unit_hull.json"), "--k", 0.5, "--x0", 0]
    code, out = run(capsys, "solve-inward", "--operator", d("inward_map.json"), *base)
    assert code == EXIT_OK and "0.7999999" in out.out
    code, out = run(capsys, "solve-inward", "--operator", d("outward_map.json"), *base)
    assert code == EXIT_VIOLATION and "infeasible" in out.out


def test_order_commands(capsys):
    base = ["--space", d("line.json"), "--potentials", d("abs_potential.json"), "--grid", d("grid41.json")]
    code, out = run(capsys, "bishop-phelps", *base, "--x0", 0.5)
    assert code == EXIT_OK and "x* = 0 " in out.out
    code, out = run(capsys, "ekeland", *base, "--x0", 0.3, "--delta", 0.3)
    assert code == EXIT_OK and "checked against 40" in out.out
    code, out = run(capsys, "ekeland", *base, "--x0", 0.9, "--delta", 0.3)
    assert code == EXIT_VIOLATION and "exceeds" in out.out


@pytest.mark.parametrize("what, extra, expected", [
    ("residual-inequality", [], EXIT_OK),
    ("fcontractive", ["--k", "0.34"], EXIT_OK),
    ("fcontractive", ["--k", "0.2"], EXIT_VIOLATION),
    ("weak-lsc", ["--index", "d1", "--alpha", "0.5"], EXIT_OK),
    ("weak-usc", ["--index", "d1", "--alpha", "0.5"], EXIT_OK),
    ("weak-lsc", [], EXIT_USAGE),
])
def test_check_command(capsys, what, extra, expected):
    code, _ = run(capsys, "check", "--what", what, "--space", d("line.json"), "--operator", d("two_branch.json"),
                  "--grid", d("grid_line.json"), *extra)
    assert code == expected


def test_check_inward(capsys):
    code, out = run(capsys, "check", "--what", "inward", "--space", d("line.json"), "--operator",
                    d("inward_map.json"), "--grid", d("grid_unit.json"), "--hull", d("unit_hull.json"))
    assert code == EXIT_OK and "PASS" in out.out


def test_malformed_inputs_fail_fast(capsys, tmp_path):
    trace = tmp_path / "never.jsonl"
    code, out = run(capsys, "hausdorff", "--space", d("bad_field.json"), "--a", d("a.json"), "--b", d("b.json"),
                    "--trace", trace)
    assert code == EXIT_USAGE
    assert "bad_field.json:4" in out.err and "pseudometrics/0/params/coord" in out.err
    assert not trace.exists()
    code, out = run(capsys, "hausdorff", "--space", d("line.json"), "--a", d("bad_syntax.json"), "--b", d("b.json"))
    assert code == EXIT_USAGE and "bad_syntax.json:3:1" in out.err
    code, out = run(capsys, "hausdorff", "--space", d("missing.json"), "--a", d("a.json"), "--b", d("b.json"))
    assert code == EXIT_USAGE


def test_usage_errors(capsys):
    assert run(capsys, "nope")[0] == EXIT_USAGE
    assert run(capsys, "solve-picard", "--space", d("line.json"))[0] == EXIT_USAGE
    code, out = run(capsys, "demo", "nope")
    assert code == EXIT_USAGE and "unknown demo" in out.err
    assert run(capsys, "solve-picard", "--space", d("line.json"), "--operator", d("half_plus_half.json"),
               "--k", "0.5", "--x0", "1,2")[0] == EXIT_USAGE


@pytest.mark.parametrize("name", list(REGISTRY))
def test_every_demo_passes(capsys, name):
    code, out = run(capsys, "demo", name)
    assert code == EXIT_OK and out.out.startswith(f"PASS {name}")


def test_demo_examples_from_docs(capsys):
    _, out = run(capsys, "demo", "inward-affine")
    assert "x* = 0.8" in out.out or "x* = 0.79999" in out.out
    _, out = run(capsys, "demo", "ekeland-abs")
    assert "x* = 0," in out.out


def test_schemas_are_valid_json_schemas():
    import jsonschema
    for kind in ("space", "cloud", "operator", "expr", "op", "potentials"):
        jsonschema.Draft202012Validator.check_schema(schema(kind))


def test_fixtures_match_their_schemas():
    kinds = {"line.json": "space", "plane.json": "space", "a.json": "cloud", "grid41.json": "cloud",
             "union_scale.json": "expr", "ksc_op.json": "op", "two_branch.json": "operator",
             "plane_potentials.json": "potentials"}
    for name, kind in kinds.items():
        read_input(str(d(name)), kind)
    with pytest.raises(InputError):
        read_input(str(d("a.json")), "operator")


scalars = st.one_of(st.integers(-10**6, 10**6), st.floats(allow_nan=False), st.booleans(), st.none(),
                    st.text(max_size=8))
values = st.recursive(scalars, lambda kids: st.one_of(st.lists(kids, max_size=4),
                                                     st.dictionaries(st.text(max_size=5), kids, max_size=4)),
                      max_leaves=10)


@given(st.dictionaries(st.text(max_size=6), values, max_size=5))
def test_trace_record_round_trip(body):
    rec = {"type": "iterate", **body}
    assert parse_record(format_record(rec)) == rec


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "uniformis", "demo", "picard-affine"], capture_output=True, text=True)
    assert res.returncode == 0 and "PASS" in res.stdout

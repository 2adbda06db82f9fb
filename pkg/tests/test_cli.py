import json

import pytest

from rcworkbench import cli


def run(tmp_path, spec, *extra):
    path = tmp_path / "spec.json"
    path.write_text(spec if isinstance(spec, str) else json.dumps(spec, indent=1))
    out = tmp_path / "out"
    code = cli.main(["run", str(path), "-o", str(out), *extra])
    return code, (out.read_text() if out.exists() else None)


def test_tight_coding_report(tmp_path):
    code, text = run(tmp_path, {"kind": "tight-coding", "seed": 3, "params": {"k_max": 2, "S": ["w"], "budget": 4}})
    assert code == 0
    report = json.loads(text)
    assert report["status"] == "ok" and report["seed"] == 3
    assert report["spec"]["params"]["S"] == ["w"]
    assert report["result"]["fingerprint"] == [[1, 0]]
    ids = [c["id"] for c in report["result"]["certificates"]]
    assert ids == ["non-rc:ω"]
    assert "timings" not in report


def test_report_is_byte_identical(tmp_path):
    spec = {"kind": "cp-plus", "params": {"n": 2, "w": 1, "l_max": 2, "J": [[[1, 0]]]}}
    a = run(tmp_path, spec)[1]
    b = run(tmp_path, spec)[1]
    assert a == b


def test_text_format_renders_ordinals(tmp_path):
    code, text = run(tmp_path, {"kind": "tight-coding", "params": {"k_max": 3, "S": ["w*2"], "budget": 3}}, "--format", "text")
    assert code == 0
    assert "S: {ω·2}" in text
    assert text.startswith("rcworkbench ")


def test_timings_only_on_request(tmp_path):
    code, text = run(tmp_path, {"kind": "transversal", "params": {"sets": [[1], [1, 2]]}}, "--timings")
    assert code == 0
    assert "wall_seconds" in json.loads(text)["timings"]


def test_unknown_field_names_line(tmp_path, capsys):
    spec = '{\n "kind": "cp-plus",\n "params": {\n  "n": 2,\n  "colour": 1\n }\n}\n'
    code, _ = run(tmp_path, spec)
    assert code == 2
    err = capsys.readouterr().err
    assert "params.colour (line 5)" in err and "unknown field" in err


def test_malformed_json_names_line(tmp_path, capsys):
    code, _ = run(tmp_path, '{\n "kind": "cp-plus",\n "params": {,}\n}')
    assert code == 2
    assert "line 3" in capsys.readouterr().err


@pytest.mark.parametrize(
    "spec",
    [
        {"kind": "nope"},
        {"kind": "cp-plus", "params": {"n": 0}},
        {"kind": "cp-plus", "params": {"n": 2, "J": [[[3, 0]]]}},
        {"kind": "tight-coding", "params": {"k_max": 2, "S": ["banana"]}},
        {"kind": "tight-coding", "params": {"k_max": 2, "S": ["w+1"]}},
        {"kind": "transversal", "params": {"sets": [[1]], "random": {}}},
        {"kind": "cp-plus", "seed": "x", "params": {"n": 1}},
    ],
)
def test_bad_specs_exit_2(tmp_path, spec):
    assert run(tmp_path, spec)[0] == 2


def test_capacity_refused_at_parse_time(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("RCWORKBENCH_MAX_ATOMS", "64")
    code, _ = run(tmp_path, {"kind": "cp-plus", "params": {"n": 3, "l_max": 2}})
    assert code == 2
    assert "capacity" in capsys.readouterr().err


def test_construction_error_is_nonzero_with_locus(tmp_path, capsys):
    spec = {"kind": "tight-coding", "params": {"k_max": 3, "S": ["w", "w*2"], "budget": 3,
                                               "ladders": {"w": ["1", "2"], "w*2": ["w", "w+1"]}}}
    code, _ = run(tmp_path, spec)
    assert code == 3
    assert "meets S at ω" in capsys.readouterr().err


def test_violations_exit_1(tmp_path):
    # a family with no transversal is a finding, not a violation; a fixture markers mismatch neither
    code, text = run(tmp_path, {"kind": "transversal", "params": {"sets": [[1], [1]]}})
    assert code == 0
    fam = json.loads(text)["result"]["families"][0]
    assert fam["free"] is False and fam["violator"] == ["0", "1"]


def test_lambda_and_assembly_kinds(tmp_path):
    code, text = run(tmp_path, {"kind": "lambda-system", "params": {"fixture": "counter"}})
    report = json.loads(text)
    assert code == 0 and report["result"]["order_1"] is None and report["findings"]
    code, text = run(tmp_path, {"kind": "as-construction", "params": {"fixture": "height2"}})
    report = json.loads(text)
    assert code == 0
    assert report["result"]["atoms"] == {"A": 637, "G": 2401}
    assert report["result"]["gamma"]["id"] == "gamma"


def test_budget_override(tmp_path):
    code, text = run(tmp_path, {"kind": "tight-coding", "params": {"k_max": 2, "budget": 3}}, "--budget", "4")
    assert code == 0
    assert json.loads(text)["spec"]["params"]["budget"] == 4


def test_selftest_subset(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"kind": "selftest", "seed": 1, "params": {"suites": ["transversals"]}}))
    out = tmp_path / "o.json"
    assert cli.main(["run", str(path), "-o", str(out)]) == 0
    suites = json.loads(out.read_text())["result"]["suites"]
    assert [s["name"] for s in suites] == ["transversals"]

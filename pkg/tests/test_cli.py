"""End-to-end checks of the command-line front end.

Golden reports live in tests/golden/.  To regenerate one after an intended
output change, run from src/broadmatch/fixtures/:

    python3 -c "from broadmatch.cli import run; run([...])" > ../../../tests/golden/NAME.json

with the argv list shown in GOLDEN_CASES below.
"""

import json
import re
import subprocess
from pathlib import Path

import pytest

from broadmatch import cli

GOLDEN = Path(__file__).parent / "golden"

GOLDEN_CASES = {
    "simulate-natural": ["simulate", "two-keyword-entry-base.json",
                         "--split", "two-keyword-entry-natural.split.json"],
    "acbm-fine": ["acbm", "two-keyword-entry-base.json",
                  "--ext", "two-keyword-entry-ext.json", "--fine"],
    "best-response-dp": ["best-response", "greedy-vs-exact.json",
                         "--advertiser", "1", "--method", "dp"],
    "verify-shifted-bme": ["verify", "three-keyword-family.json",
                           "--split", "three-keyword-family-shifted.split.json",
                           "--bme"],
}


@pytest.fixture
def fx(monkeypatch, capsys):
    """Invoke the CLI in-process from inside the bundled-fixtures directory."""
    monkeypatch.chdir(cli._FIXTURE_DIR)

    def invoke(*argv):
        code = cli.run(list(argv))
        return code, capsys.readouterr().out

    return invoke


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden_reports(fx, name):
    code, out = fx(*GOLDEN_CASES[name])
    assert code == 0
    assert out == (GOLDEN / (name + ".json")).read_text(encoding="utf-8")


def test_reports_are_byte_deterministic(fx):
    first = fx(*GOLDEN_CASES["acbm-fine"])
    second = fx(*GOLDEN_CASES["acbm-fine"])
    assert first == second


def test_report_envelope(fx):
    code, out = fx("price", "two-keyword-entry-base.json", "k1")
    doc = json.loads(out)
    assert code == doc["exit_code"] == 0
    assert doc["command"] == "price"
    assert doc["argv"] == ["price", "two-keyword-entry-base.json", "k1"]
    assert re.fullmatch(r"[0-9a-f]{16}", doc["instance"])
    result = doc["result"]
    assert result["prices"] == {
        "1": {"exact": "9/10", "approx": "0.900000"},
        "2": {"exact": "0", "approx": "0.000000"}}
    assert result["revenue"]["exact"] == "9/10"
    assert [r["slot"] for r in result["ranking"]] == [1, 2]


def test_threaded_simulation_reports_the_same_result(fx):
    _, solo = fx(*GOLDEN_CASES["simulate-natural"])
    _, pooled = fx(*(GOLDEN_CASES["simulate-natural"] + ["--jobs", "2"]))
    assert (json.loads(solo)["result"] == json.loads(pooled)["result"])


def test_validate_instance_profile_and_extension(fx):
    code, out = fx("validate", "two-keyword-entry-base.json",
                   "--split", "two-keyword-entry-natural.split.json",
                   "--ext", "two-keyword-entry-ext.json")
    doc = json.loads(out)
    assert code == 0
    assert doc["result"]["checked"] == ["instance", "profile", "extension"]
    assert doc["result"]["new_edges"] == [["3", "k1"]]


def test_validate_rejects_malformed_input(fx, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("this is not json {", encoding="utf-8")
    code, out = fx("validate", str(bad))
    doc = json.loads(out)
    assert code == doc["exit_code"] == 2
    assert doc["error"]["type"] == "schema"
    assert "invalid JSON" in doc["error"]["errors"][0]["message"]


def test_missing_file_is_a_usage_error(fx):
    code, out = fx("validate", "no-such-file.json")
    doc = json.loads(out)
    assert code == 2
    assert doc["error"]["type"] == "usage"
    assert "cannot read" in doc["error"]["message"]


def test_verify_unstable_split_exits_3(fx):
    code, out = fx("verify", "agreeing-methods.json",
                   "--split", "agreeing-methods-allk2.split.json", "--bme")
    doc = json.loads(out)
    assert code == doc["exit_code"] == 3
    assert doc["result"]["ok"] is False
    assert doc["result"]["e1_violations"]


def test_verify_eps_ne_exit_codes(fx):
    argv = ("verify", "three-keyword-family.json",
            "--split", "three-keyword-family-shifted.split.json")
    code, out = fx(*argv, "--eps-ne", "3/10", "--method", "dp")
    assert code == 0 and json.loads(out)["result"]["ok"] is True
    # the approximation bracket cannot certify this margin either way
    code, out = fx(*argv, "--eps-ne", "3/10", "--method", "fptas")
    assert code == 3 and json.loads(out)["result"]["ok"] is None
    code, out = fx(*argv, "--eps-ne", "3/20", "--method", "dp")
    assert code == 3 and json.loads(out)["result"]["ok"] is False


def test_dynamics_reaches_the_fixed_point(fx):
    code, out = fx("dynamics", "two-keyword-entry-base.json")
    doc = json.loads(out)
    assert code == 0
    assert doc["result"]["status"] == "fixed-point"
    assert doc["result"]["rounds"] == 2
    assert isinstance(doc["result"]["profile"], list)


USAGE_CASES = [
    ("best-response", "greedy-vs-exact.json", "--advertiser", "1",
     "--method", "fptas"),
    ("dynamics", "greedy-vs-exact.json", "--method", "fptas"),
    ("verify", "three-keyword-family.json",
     "--split", "three-keyword-family-shifted.split.json"),
    ("verify", "three-keyword-family.json",
     "--split", "three-keyword-family-shifted.split.json",
     "--bme", "--eps-ne", "1/10"),
    ("compare", "greedy-vs-exact.json",
     "--split", "three-keyword-family-shifted.split.json"),
    ("partition", "greedy-vs-exact.json"),
    ("best-response", "greedy-vs-exact.json"),
    ("acbm", "two-keyword-entry-base.json"),
    ("price", "two-keyword-entry-base.json", "no-such-keyword"),
    ("simulate", "two-keyword-entry-base.json",
     "--split", "two-keyword-entry-natural.split.json",
     "--schedule", "two-keyword-entry-early.schedule.json"),
    ("simulate", "two-keyword-entry-base.json",
     "--split", "two-keyword-entry-natural.split.json",
     "--reserve", "bogus"),
]


@pytest.mark.parametrize("argv", USAGE_CASES,
                         ids=lambda a: " ".join(a[:2]) + " #%d" %
                         USAGE_CASES.index(a))
def test_usage_errors_exit_2(fx, argv):
    code, out = fx(*argv)
    doc = json.loads(out)
    assert code == doc["exit_code"] == 2
    assert doc["error"]["type"] == "usage"


def test_argparse_rejections_exit_2(fx):
    code, _ = fx("no-such-command")
    assert code == 2
    code, out = fx("--help")
    assert code == 0 and "broadmatch" in out


def test_engine_errors_exit_1(fx):
    code, out = fx("verify", "three-keyword-family.json",
                   "--split", "three-keyword-family-shifted.split.json",
                   "--eps-ne=-1/10")
    doc = json.loads(out)
    assert code == 1
    assert doc["error"]["type"] == "engine"


def test_table_formats(fx):
    code, out = fx("price", "two-keyword-entry-base.json", "k1",
                   "--format", "table")
    assert code == 0
    assert out.splitlines()[0].split() == [
        "slot", "advertiser", "score", "price", "payoff"]
    assert "revenue 9/10 (0.9000)" in out

    code, out = fx("simulate", "two-keyword-entry-base.json",
                   "--split", "two-keyword-entry-natural.split.json",
                   "--format", "table")
    assert code == 0 and "total" in out and "leftover" in out

    code, out = fx("acbm", "two-keyword-entry-base.json",
                   "--ext", "two-keyword-entry-ext.json", "--fine",
                   "--format", "table")
    assert code == 0
    assert "enter 3 on k1 at query 15 (+184/5)" in out

    code, out = fx("verify", "three-keyword-family.json",
                   "--split", "three-keyword-family-shifted.split.json",
                   "--bme", "--format", "table")
    assert code == 0
    assert "stable: True" in out


def test_fixture_listing_and_emission(fx, tmp_path):
    code, out = fx("fixtures")
    doc = json.loads(out)
    assert code == 0
    names = sorted(doc["result"]["fixtures"])
    assert names == sorted(cli.FIXTURES)
    assert all(doc["result"]["fixtures"][n]["files"] for n in names)

    out_dir = tmp_path / "emitted"
    code, out = fx("fixtures", "two-keyword-entry", str(out_dir))
    assert code == 0
    written = json.loads(out)["result"]["written"]
    assert len(written) == 6
    for path in written:
        name = Path(path).name
        assert Path(path).read_bytes() == (cli._FIXTURE_DIR / name).read_bytes()

    code, out = fx("fixtures", "no-such-example")
    assert code == 2 and json.loads(out)["error"]["type"] == "usage"


def test_console_script_is_wired():
    proc = subprocess.run(["broadmatch", "fixtures"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "two-keyword-entry" in proc.stdout

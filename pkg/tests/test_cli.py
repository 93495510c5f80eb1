import csv
import io
import json
import subprocess
import sys

import pytest

from spherint.cli import main, parse_grid


def run(*args, env=None):
    return subprocess.run([sys.executable, "-m", "spherint", *args], capture_output=True, text=True, env=env)


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_parse_grid():
    assert parse_grid("-1:1:5") == [-1.0, -0.5, 0.0, 0.5, 1.0]
    assert parse_grid("0.2:0.2:1") == [0.2]


def test_limit_csv(capsys):
    assert main(["limit", "--measure", "builtin:trimmed_bernoulli", "--theta-grid", "-1:1:5"]) == 0
    table = rows(capsys.readouterr().out)
    assert [r["regime"] for r in table] == ["SaturatedMin", "Interior", "Zero", "Interior", "SaturatedMax"]
    assert table[2]["value"] == "0"
    assert table[0]["prefactor"] == "NA"


def test_limit_json_dirac(capsys):
    assert main(["limit", "--measure", "builtin:dirac:e=2", "--theta", "0.25", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data[0]["value"] == 0.5 and data[0]["prefactor"] == "DIRAC"


def test_transform_marks_out_of_domain(capsys):
    assert main(["transform", "--measure", "builtin:trimmed_bernoulli", "--gamma", "-2,0,1"]) == 0
    table = rows(capsys.readouterr().out)
    assert table[0]["r"] == "DOMAIN"
    assert table[1]["k"] == "DOMAIN" and table[1]["r"] == "0"
    assert float(table[2]["r"]) == pytest.approx(0.6180339887498949)


def test_rate_tables(capsys):
    assert main(["rate", "--measure", "builtin:bernoulli", "--alpha", "0.5,1", "--theta", "0.2"]) == 0
    rate, legendre = capsys.readouterr().out.split("\n\n")
    assert rows(rate)[1]["t"] == "inf"
    assert rows(legendre)[0]["g1"] == "-inf"


def test_mc_z_scores(capsys):
    assert main(["mc", "--measure", "builtin:bernoulli", "--n", "80", "--samples", "4000",
                 "--theta", "0.1,0.4", "--seed", "3"]) == 0
    for r in rows(capsys.readouterr().out):
        assert abs(float(r["z_score"])) <= 4


def test_output_is_reproducible():
    args = ["mc", "--measure", "builtin:uniform:n=30", "--n", "30", "--samples", "2000", "--theta", "0.3"]
    first, second = run(*args, "--seed", "9"), run(*args, "--seed", "9")
    assert first.returncode == 0
    assert first.stdout == second.stdout


def test_seed_from_environment():
    import os
    args = ["mc", "--measure", "builtin:bernoulli", "--n", "20", "--samples", "500", "--theta", "0.2"]
    env = dict(os.environ, SPHERINT_SEED="11")
    assert run(*args, env=env).stdout == run(*args, "--seed", "11").stdout


def test_selftest_passes_and_fails_with_loose_tolerance():
    ok = run("selftest")
    assert ok.returncode == 0, ok.stdout + ok.stderr
    bad = run("selftest", "--tol", "root_abs_tol=1")
    assert bad.returncode == 1
    assert "fail" in bad.stdout


def test_tolerance_file(tmp_path):
    path = tmp_path / "tol.json"
    path.write_text(json.dumps({"root_abs_tol": 1.0}))
    assert run("selftest", "--tol-file", str(path)).returncode == 1


@pytest.mark.parametrize("args,code", [
    (["limit"], 2),
    (["limit", "--measure", "missing.json"], 2),
    (["limit", "--measure", "builtin:bernoulli", "--theta-grid", "1:2"], 2),
    (["limit", "--measure", "builtin:bernoulli", "--tol", "nope=1"], 2),
    (["frobnicate"], 2),
    (["mc", "--measure", "builtin:bernoulli", "--n", "1000", "--theta", "5", "--method", "direct"], 3),
    (["limit", "--measure", "builtin:bernoulli", "--theta", "nan"], 3),
])
def test_error_exit_codes(args, code):
    proc = run(*args)
    assert proc.returncode == code
    assert proc.stdout == ""
    assert len(proc.stderr.strip().splitlines()) == 1


def test_freeconv_json():
    proc = run("freeconv", "--measure", "builtin:bernoulli", "--measure", "builtin:bernoulli", "--n", "40",
               "--reps", "3", "--theta", "0.1", "--format", "json")
    assert proc.returncode == 0, proc.stderr
    data = json.loads(proc.stdout)
    assert set(data) == {"additivity", "r_additivity"}
    assert data["additivity"][0]["excluded"] == 0

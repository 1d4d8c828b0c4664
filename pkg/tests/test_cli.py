import csv
import io
import json

import pytest

from primecoupling import cli
from primecoupling.acceptance import CSV_COLUMNS
from primecoupling.number_theory import ConfigError


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_feller_ok(capsys):
    code, out, err = _run(capsys, "feller", "--n", "50", "--trials", "2000")
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0].keys()) == list(CSV_COLUMNS)
    assert rows[0]["experiment"] == "feller" and rows[0]["n"] == "50"
    assert "ok" in err


def test_region_mean_value(capsys):
    code, out, _ = _run(capsys, "region-mean", "--b", "5", "--trials", "1000")
    assert code == 0
    assert "3.79609" in out


@pytest.mark.parametrize("argv", [
    ["feller", "--trials", "0"],
    ["nosuch"],
    ["feller", "--n", "abc"],
    ["feller", "--format", "xml"],
    ["feller", "--n", "2000000"],
    ["entropy", "--bogus", "1"],
])
def test_usage_errors(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == cli.EXIT_USAGE
    assert err


def test_tightened_tolerance_fails(capsys):
    code, _, err = _run(capsys, "accept", "--only", "12", "--tol-scale", "0.01", "--no-determinism")
    assert code == cli.EXIT_FAIL
    assert "FAILED" in err


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small feller run\nn = 30\ntrials: 500\nseed = 1009\n")
    code, out, _ = _run(capsys, "feller", "--config", str(cfg))
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["n"] == "30" and row["trials"] == "500" and row["seed"] == "1009"
    # command line wins over the file
    code, out, _ = _run(capsys, "feller", "--config", str(cfg), "--n", "40")
    assert next(csv.DictReader(io.StringIO(out)))["n"] == "40"


def test_config_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("just words\n")
    assert _run(capsys, "feller", "--config", str(bad))[0] == cli.EXIT_USAGE
    unknown = tmp_path / "unknown.cfg"
    unknown.write_text("colour = blue\n")
    assert _run(capsys, "feller", "--config", str(unknown))[0] == cli.EXIT_USAGE
    assert _run(capsys, "feller", "--config", str(tmp_path / "missing.cfg"))[0] == cli.EXIT_USAGE


def test_output_file_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["grow-int", "--n", "1000", "--trials", "3000", "--seed", "7,1009"]
    assert _run(capsys, *args, "--out", str(a))[0] == 0
    assert _run(capsys, *args, "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    seeds = [r["seed"] for r in csv.DictReader(io.StringIO(a.read_text()))]
    assert seeds == sorted(seeds, key=int)


def test_json_format(capsys):
    code, out, _ = _run(capsys, "crude-u", "--b", "2", "--n-grid", "4,8", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert {d["n"] for d in data} == {4, 8}
    assert set(data[0]) == set(CSV_COLUMNS)


@pytest.mark.parametrize("sub,extra", [
    ("dtv-small-primes", ["--b", "3", "--n-grid", "10,100"]),
    ("pmf-j", ["--n-grid", "100"]),
    ("dtv-jp0", ["--n-grid", "100"]),
    ("entropy", []),
    ("entropy", ["--primes"]),
    ("spacing-test", ["--a", "1", "--b", "2", "--trials", "5000"]),
    ("dickman", ["--trials", "20000"]),
    ("pd-distance", ["--n-grid", "1000", "--trials", "200"]),
])
def test_subcommands_run(capsys, sub, extra):
    code, out, _ = _run(capsys, sub, *extra)
    assert code == 0
    assert out.startswith(",".join(CSV_COLUMNS))


def test_validate_rejects_bad_config():
    cfg = cli.config_from_args(["feller"])
    cfg.trials = 0
    with pytest.raises(ConfigError):
        cfg.validate()

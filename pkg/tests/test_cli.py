from __future__ import annotations

import csv
import json

import pytest

from gamma1_lab import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["bogus"])
    assert info.value.code == 64
    code, _, err = run(capsys, "density", "--k", "4")
    assert code == 64 and "k must be odd" in err
    code, _, _ = run(capsys, "verify", "--filter", "nope")
    assert code == 64
    code, _, _ = run(capsys, "scan", "--q-min", "101")
    assert code == 64


def test_verify_clean_and_filtered(capsys):
    code, out, _ = run(capsys, "verify", "--filter", "arith")
    assert code == 0
    lines = out.strip().splitlines()
    assert all(line.startswith("PASS arith:") for line in lines[:-1])


def test_verify_fault_injection(capsys):
    code, out, _ = run(capsys, "verify", "--filter", "special", "--inject-fault", "bessel-x-switch")
    assert code == 1
    assert "FAIL special:bessel" in out


def test_density_json(tmp_path, capsys):
    out = tmp_path / "d.json"
    code, _, _ = run(capsys, "density", "--q", "101", "--k", "3", "--delta", "1", "--testfn", "fejer",
                     "--deterministic", "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["report"]["certified"] is True
    assert doc["provenance"]["wall_time_s"] is None


def test_density_small_delta(tmp_path, capsys):
    out = tmp_path / "d.json"
    code, _, _ = run(capsys, "density", "--q", "101", "--delta", "0.1", "--out", str(out))
    rep = json.loads(out.read_text())["report"]
    assert code == 0 and rep["d_total"] == rep["main_term"]


def test_density_composite_q_is_accepted(tmp_path, capsys):
    out = tmp_path / "d.json"
    code, _, _ = run(capsys, "density", "--q", "4", "--delta", "0.1", "--out", str(out))
    rep = json.loads(out.read_text())["report"]
    # sigma(1,1) cannot be certified at such a small modulus, hence exit 2 rather than 64
    assert code in (0, 2) and rep["q_is_prime"] is False and rep["d_total"] == rep["main_term"]


def test_density_uncertified_exit(tmp_path, capsys):
    out = tmp_path / "d.json"
    code, _, _ = run(capsys, "density", "--q", "101", "--tail-eps", "1e-12", "--st-cap", "64", "--out", str(out))
    assert code == 2
    assert json.loads(out.read_text())["report"]["certified"] is False


def test_config_file_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"q": 103, "delta": 0.1, "tail-eps": 1e-6}))
    out = tmp_path / "d.json"
    run(capsys, "density", "--config", str(cfg), "--q", "107", "--out", str(out))
    rep = json.loads(out.read_text())["report"]
    assert rep["q"] == 107 and rep["delta"] == 0.1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": 1}))
    assert run(capsys, "density", "--config", str(bad))[0] == 64


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_scan_empty_range(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "scan", "--q-min", "20", "--q-max", "10", "--out", str(out))
    assert code == 0
    assert out.read_text().strip() == ",".join(cli.SCAN_COLUMNS)


@pytest.mark.slow
def test_scan_rows_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["scan", "--q-min", "101", "--q-max", "199", "--primes-only", "--deterministic"]
    assert run(capsys, *args, "--out", str(a))[0] == 0
    assert run(capsys, *args, "--out", str(b))[0] == 0
    rows = _rows(a)
    assert len(rows) == 21 and list(rows[0]) == list(cli.SCAN_COLUMNS)
    assert a.read_bytes() == b.read_bytes()


def test_diagnose_blocks(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, _, err = run(capsys, "diagnose-blocks", "--q", "101", "--P", "16", "200", "--S", "1", "--T", "2",
                       "--out", str(out))
    rows = _rows(out)
    assert code == 0 and len(rows) == 1 and "rejected P=200" in err
    assert list(rows[0]) == list(cli.BLOCK_COLUMNS)


def test_mellin_probe_rows(tmp_path, capsys):
    out = tmp_path / "m.csv"
    code, _, _ = run(capsys, "mellin-probe", "--X", "100", "--points", "200", "--out", str(out))
    rows = _rows(out)
    assert code == 0 and len(rows) == 200
    assert {r["regime"] for r in rows} == {"saddle", "decay"}
    code, _, _ = run(capsys, "mellin-probe", "--points", "0", "--out", str(out))
    assert out.read_text().strip() == ",".join(cli.MELLIN_COLUMNS)

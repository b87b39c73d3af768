"""Command-line round trips and exit codes."""

import json

import pytest

from shuttercert import cli
from shuttercert.io import read_bits, read_cert, read_header


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def rounds(tmp_path, capsys):
    path = tmp_path / "rounds.bin"
    code, out, _ = run(["simulate", "--model", "simple", "--p", 0.5, "--batches", 2, "--rounds", 100000,
                        "--test-rate", 0.08, "--seed", 1, "--out", path], capsys)
    assert code == 0
    summary = json.loads(out)
    assert summary["rounds"] == 200000
    return path


def test_simulate_record_count(rounds):
    hdr = read_header(rounds)
    assert hdr["total"] == 200000 and hdr["batch_size"] == 100000
    assert rounds.stat().st_size == 32 + 200000


def test_round_trip(tmp_path, rounds, capsys):
    cert = tmp_path / "cert.jsonl"
    code, _, _ = run(["certify", "--in", rounds, "--assumption", "simple", "--p", 0.5, "--json", cert], capsys)
    assert code == 0
    rows = read_cert(cert)
    assert len(rows) == 2 and all(r["feasible"] and r["h"] > 0.5 for r in rows)
    outs = []
    for k in range(2):
        bits = tmp_path / f"bits{k}.bin"
        man = tmp_path / f"man{k}.json"
        code, out, _ = run(["extract", "--in", rounds, "--cert", cert, "--out", bits, "--manifest", man], capsys)
        assert code == 0
        m = json.loads(man.read_text())
        assert m["bit_count"] == len(m["batches_used"]) * m["m"] > 0
        outs.append(bits.read_bytes())
    assert outs[0] == outs[1]
    assert read_bits(tmp_path / "bits0.bin", m["bit_count"]).size == m["bit_count"]


def test_certify_stdout(rounds, capsys):
    code, out, _ = run(["certify", "--in", rounds, "--assumption", "mean", "--mu", 1.386, "--pi", 0.5], capsys)
    assert code == 0
    assert [json.loads(l)["batch"] for l in out.splitlines()] == [0, 1]


def test_exit_usage(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate"])
    assert exc.value.code == 2
    code, _, err = run(["simulate", "--model", "simple", "--out", tmp_path / "x"], capsys)
    assert code == 2 and "--p" in err
    code, _, _ = run(["oracle-check", "--instances", 0], capsys)
    assert code == 2


def test_exit_io(tmp_path, capsys):
    code, _, _ = run(["certify", "--in", tmp_path / "missing.bin", "--assumption", "simple", "--p", 0.5], capsys)
    assert code == 3
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"nope" * 10)
    code, _, _ = run(["certify", "--in", bad, "--assumption", "simple", "--p", 0.5], capsys)
    assert code == 3


def test_exit_infeasible(tmp_path, capsys):
    path = tmp_path / "r.bin"
    run(["simulate", "--model", "simple", "--p", 0.9, "--batches", 2, "--rounds", 20000, "--out", path], capsys)
    cert = tmp_path / "c.jsonl"
    code, _, err = run(["certify", "--in", path, "--assumption", "simple", "--p", 0.2, "--json", cert], capsys)
    assert code == 4 and "infeasible" in err
    assert len(read_cert(cert)) == 2
    code, _, _ = run(["certify", "--in", path, "--assumption", "simple", "--p", 0.2, "--clamp"], capsys)
    assert code == 0


def test_exit_insufficient(tmp_path, capsys):
    path = tmp_path / "r.bin"
    run(["simulate", "--model", "simple", "--p", 0.5, "--batches", 1, "--rounds", 20000, "--out", path], capsys)
    cert = tmp_path / "c.jsonl"
    run(["certify", "--in", path, "--assumption", "simple", "--p", 0.5, "--json", cert], capsys)
    code, _, _ = run(["extract", "--in", path, "--cert", cert, "--out", tmp_path / "b.bin"], capsys)
    assert code == 5


def test_adversarial_simulation(tmp_path, capsys):
    path = tmp_path / "r.bin"
    code, out, _ = run(["simulate", "--model", "simple", "--p", 0.5, "--device", "adversarial",
                        "--lambda", "0,1,0,0", "--rounds", 5000, "--out", path], capsys)
    assert code == 0 and json.loads(out)["click_rate_generation"] == 1.0
    code, _, _ = run(["simulate", "--model", "simple", "--p", 0.5, "--device", "adversarial",
                      "--out", path], capsys)
    assert code == 2


def test_oracle_check(capsys, monkeypatch):
    code, out, _ = run(["oracle-check", "--scope", "simple", "--instances", 50, "--seed", 3], capsys)
    assert code == 0 and json.loads(out)["passed"]
    monkeypatch.setattr(cli, "run_oracle_check", lambda *a: {"passed": False, "max_error": 1.0})
    code, _, _ = run(["oracle-check", "--instances", 1], capsys)
    assert code == 6

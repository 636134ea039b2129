import csv
from importlib import resources

import pytest

from pathprotect.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, main
from pathprotect.controller import dump_config
from pathprotect.scenarios import failover, two_path, cbr
from test_wire import GOLDEN

CANONICAL = str(resources.files("pathprotect").joinpath("data", "two_path.yaml"))


@pytest.fixture
def failover_file(tmp_path):
    path = tmp_path / "failover.yaml"
    path.write_text(dump_config(failover(count=400, interval=0.001)))
    return path


def _summary_flow(text, flow):
    line = next(l for l in text.splitlines() if l.startswith(f"flow {flow} "))
    return dict(kv.split("=") for kv in line.split(": ", 1)[1].split())


def test_run_writes_csv_and_summary(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", CANONICAL, "--out", str(out)]) == EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == ["flows.csv", "packets.csv", "summary.txt"]
    stdout = capsys.readouterr().out
    assert stdout == (out / "summary.txt").read_text()
    rows = list(csv.DictReader((out / "flows.csv").open()))
    assert {r["flow"] for r in rows} == {"video", "probe"}


def test_run_missing_file_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.yaml"
    assert main(["run", str(missing)]) == EXIT_VALIDATION
    assert str(missing) in capsys.readouterr().err


def test_run_invalid_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(dump_config(two_path()).replace("loss: 0.0", "loss: 2.0", 1))
    assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == EXIT_VALIDATION
    assert "loss" in capsys.readouterr().err


def test_plain_loses_protected_does_not(failover_file, tmp_path, capsys):
    assert main(["run", str(failover_file), "--mode", "plain",
                 "--out", str(tmp_path / "plain")]) == EXIT_OK
    plain = _summary_flow(capsys.readouterr().out, "cbr")
    assert main(["run", str(failover_file), "--mode", "protected",
                 "--out", str(tmp_path / "prot")]) == EXIT_OK
    prot = _summary_flow(capsys.readouterr().out, "cbr")
    assert int(plain["lost"]) > 0
    assert int(prot["lost"]) == 0


def test_seed_override_and_parallel_jobs(tmp_path, capsys):
    jittery = tmp_path / "j.yaml"
    jittery.write_text(dump_config(two_path(jitter_a=0.002, loss_b=0.1,
                                            traffic=[cbr(count=200)])))
    plain = tmp_path / "p.yaml"
    plain.write_text(dump_config(two_path(traffic=[cbr(count=50)])))
    out = tmp_path / "multi"
    assert main(["run", str(jittery), str(plain), "--jobs", "2", "--seed", "7",
                 "--no-packets", "--out", str(out)]) == EXIT_OK
    assert sorted(p.name for p in (out / "j").iterdir()) == ["flows.csv", "summary.txt"]
    assert "seed=7" in (out / "p" / "summary.txt").read_text()
    assert main(["run", str(jittery), "--seed", "7", "--out", str(tmp_path / "single")]) == 0
    assert ((tmp_path / "single" / "flows.csv").read_text()
            == (out / "j" / "flows.csv").read_text())


def test_vectors_shipped_suite(capsys):
    assert main(["vectors"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out and "14/14 vectors passed" in out


def test_vectors_corrupted_byte(tmp_path, capsys):
    data = bytearray.fromhex(GOLDEN)
    data[50] ^= 0xFF
    f = tmp_path / "v.txt"
    f.write_text(f"fine {GOLDEN}\nbroken {data.hex()}\n")
    assert main(["vectors", str(f)]) == EXIT_VALIDATION
    out = capsys.readouterr().out
    assert "PASS fine" in out and "FAIL broken" in out


def test_vectors_empty_file_warns(tmp_path, capsys):
    f = tmp_path / "empty.txt"
    f.write_text("")
    assert main(["vectors", str(f)]) == EXIT_OK
    captured = capsys.readouterr()
    assert "warning" in captured.err and "0/0" in captured.out


def test_vectors_missing_file(tmp_path, capsys):
    assert main(["vectors", str(tmp_path / "x.txt")]) == EXIT_VALIDATION
    assert "x.txt" in capsys.readouterr().err


@pytest.mark.parametrize("args,expected", [
    (["--sn-space", "16", "--window", "8", "--packet-bits", "320", "--rate", "320"], "8 s"),
    (["--sn-space", "16", "--window", "16", "--packet-bits", "320", "--rate", "320"], "0 s"),
    ([], "0.687194767 s"),
])
def test_bound(args, expected, capsys):
    assert main(["bound", *args]) == EXIT_OK
    assert capsys.readouterr().out.strip() == expected


def test_bound_bad_rate(capsys):
    assert main(["bound", "--rate", "0"]) == EXIT_VALIDATION


def test_unexpected_error_maps_to_runtime_code(tmp_path, monkeypatch, capsys):
    import pathprotect.cli as cli
    monkeypatch.setattr(cli, "run_vectors", lambda text: 1 / 0)
    assert main(["vectors"]) == EXIT_RUNTIME

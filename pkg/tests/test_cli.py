import csv
import json

from polarflip.cli import main

CONFIG = """
[sweep]
N = 64
K = 24
n_crc = 8
T = 3
decoders = ca, ds
ebno_start = 1.5
ebno_stop = 1.5
max_frames = 40
target_errors = 0

[decoder.ca]
kind = ca-scl

[decoder.ds]
kind = dsclf
metric_kind = original
"""


def write_config(tmp_path, text=CONFIG):
    path = tmp_path / "sweep.ini"
    path.write_text(text)
    return str(path)


def test_sweep_writes_csv_file(tmp_path):
    out = tmp_path / "res.csv"
    assert main([write_config(tmp_path), "--out", str(out), "--quiet"]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["decoder"] for r in rows] == ["ca", "ds"]
    assert all(r["frames"] == "40" for r in rows)


def test_flags_override_config(tmp_path, capsys):
    assert main([write_config(tmp_path), "--max-frames", "7", "--ebno-stop", "2.0", "--ebno-step", "0.5", "--quiet"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert [(r["ebno_db"], r["frames"]) for r in rows] == [("1.5", "7"), ("2", "7")] * 2


def test_emit_spec(tmp_path, capsys):
    assert main([write_config(tmp_path), "--emit-spec"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"ca", "ds"}
    assert len(doc["ca"]["nonfrozen_set"]) == 32
    assert min(doc["ca"]["nonfrozen_set"]) >= 1


def test_trace_one_frame(tmp_path, capsys):
    assert main([write_config(tmp_path), "--trace", "3", "--trace-bits"]) == 0
    lines = [json.loads(s) for s in capsys.readouterr().out.splitlines()]
    attempts = [d for d in lines if "stop_reason" in d]
    bits = [d for d in lines if "bit" in d]
    summary = [d for d in lines if "frame_error" in d]
    assert {d["decoder"] for d in summary} == {"ca", "ds"}
    assert all(d["frame"] == 3 for d in lines)
    assert attempts[0]["attempt"] == 0 and attempts[0]["flip_set"] == []
    assert len(bits) >= 32


def test_bad_config_exit_code(tmp_path, capsys):
    path = write_config(tmp_path, CONFIG.replace("T = 3", "T = three"))
    assert main([path]) == 2
    assert "[sweep] T" in capsys.readouterr().err
    assert main([str(tmp_path / "missing.ini")]) == 2

#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试命令行子命令、退出码、运行清单与重放
"""

import json
import math
import os
import sys

import pytest

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from chaos_trng.cli.main import parse_map_selector, run, strip_side_options
from chaos_trng.core.errors import UsageError
from chaos_trng.core.lab_core import RunManifest, load_config
from chaos_trng.core.localization import init_localization
from chaos_trng.core.maps import MapKind


@pytest.fixture(autouse=True)
def _work_in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    init_localization("en")


def _rows(path):
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    return lines[0], [line.split(",") for line in lines[1:] if not line.startswith("#")], lines


def _manifest(path):
    return RunManifest.load(str(path) + ".manifest.json")


# ===== 参数 =====

def test_map_selectors():
    assert parse_map_selector("modtent") == MapKind.modified_tent()
    assert parse_map_selector("TENT") == MapKind.tent()
    assert parse_map_selector("mirror") == MapKind.generalized(2.0)
    assert parse_map_selector("gen:-1.5") == MapKind.generalized(-1.5)
    with pytest.raises(UsageError):
        parse_map_selector("logistic")
    with pytest.raises(UsageError):
        parse_map_selector("gen:abc")


def test_strip_side_options():
    argv = ["orbit", "--no-log", "--log-dir", "x", "--lang=zh_CN", "--out", "o.csv", "--manifest", "m.json"]
    assert strip_side_options(argv) == ["orbit", "--out", "o.csv"]


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    assert "orbit" in capsys.readouterr().out


# ===== orbit =====

def test_orbit_example(tmp_path):
    out = tmp_path / "orbit.csv"
    code = run(["orbit", "--map", "modtent", "--x0", "0.3", "--steps", "4", "--dither", "0",
                "--out", str(out), "--no-log"])
    assert code == 0

    header, rows, _ = _rows(out)
    assert header == "step,x"
    assert rows[0] == ["0", "0.29999999999999999"]
    assert [int(r[0]) for r in rows] == [0, 1, 2, 3, 4]
    assert [float(r[1]) for r in rows[1:]] == pytest.approx([-0.6, 0.8, -0.4, 0.8], abs=1e-12)

    manifest = _manifest(out)
    assert manifest.subcommand == "orbit"
    assert manifest.parameters["map"] == "modtent"
    assert "--seed" in manifest.argv
    assert "--no-log" not in manifest.argv
    assert manifest.notes["rows"] == 5


def test_orbit_csv_writes_seventeen_significant_digits(tmp_path):
    out = tmp_path / "orbit.csv"
    assert run(["orbit", "--map", "tent", "--x0", "0.1", "--steps", "50", "--dither", "1e-12", "--seed", "3",
                "--out", str(out), "--no-log"]) == 0

    _, rows, _ = _rows(out)
    for _, text in rows:
        x = float(text)
        assert text == format(x, ".17g")
        assert float(format(x, ".17g")) == x
    assert rows[0][1] == "0.10000000000000001"


def test_orbit_is_byte_identical_on_rerun(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run(["orbit", "--steps", "500", "--seed", "7", "--out", str(out), "--no-log"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_contracting_orbit_settles(tmp_path):
    out = tmp_path / "settle.csv"
    assert run(["orbit", "--map", "gen:0.5", "--x0", "0.9", "--steps", "50", "--dither", "0",
                "--out", str(out), "--no-log"]) == 0
    _, rows, _ = _rows(out)
    assert abs(float(rows[-1][1])) < 1e-6


def test_replay_reproduces_output(tmp_path):
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    assert run(["orbit", "--steps", "300", "--seed", "0x2a", "--out", str(first), "--no-log"]) == 0
    manifest = _manifest(first)
    assert "--x0" in manifest.argv

    assert run(["replay", str(first) + ".manifest.json", "--out", str(second), "--no-log"]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_replay_uses_recorded_default_seed(tmp_path):
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    assert run(["orbit", "--steps", "100", "--out", str(first), "--no-log"]) == 0
    assert _manifest(first).master_seed == 20240601
    assert run(["replay", str(first) + ".manifest.json", "--out", str(second), "--no-log"]) == 0
    assert first.read_bytes() == second.read_bytes()


@pytest.mark.parametrize("argv", [
    ["orbit", "--map", "logistic", "--out", "o.csv"],
    ["orbit", "--steps", "10"],
    ["orbit", "--map", "gen:3.2", "--out", "o.csv"],
    ["orbit", "--map", "tent", "--x0", "1.5", "--out", "o.csv"],
    ["orbit", "--seed", "-1", "--out", "o.csv"],
    ["orbit", "--dither", "0.5", "--out", "o.csv"],
    ["frobnicate"],
])
def test_usage_errors_exit_one(argv, capsys):
    assert run(argv + ["--no-log"]) == 1
    assert "error" in capsys.readouterr().err


def test_escaping_orbit_is_truncated(tmp_path, capsys):
    out = tmp_path / "escape.csv"
    code = run(["orbit", "--map", "tent", "--slope-error", "0.05", "--steps", "20000", "--seed", "3",
                "--out", str(out), "--no-log"])
    assert code == 0
    _, rows, lines = _rows(out)
    assert lines[-1].startswith("# escaped_at_step=")
    step = int(lines[-1].split("=")[1])
    assert int(rows[-1][0]) == step
    assert float(rows[-1][1]) > 1.0 or float(rows[-1][1]) < 0.0
    assert _manifest(out).notes["escaped_at_step"] == step
    assert "left the domain" in capsys.readouterr().err


def test_unwritable_output_exits_two(tmp_path):
    out = tmp_path / "missing" / "orbit.csv"
    assert run(["orbit", "--steps", "10", "--out", str(out), "--no-log"]) == 2


# ===== bifurcate =====

def test_bifurcate_writes_csv_and_pgm(tmp_path):
    csv_path, pgm_path = tmp_path / "bif.csv", tmp_path / "bif.pgm"
    code = run(["bifurcate", "--m-lo", "-2", "--m-hi", "2", "--n-m", "20", "--bins", "41",
                "--transient", "100", "--keep", "500", "--out", str(csv_path), "--pgm", str(pgm_path), "--no-log"])
    assert code == 0

    header, rows, _ = _rows(csv_path)
    assert header == "m,x_bin_center,count"
    assert all(int(r[2]) > 0 for r in rows)

    data = pgm_path.read_bytes()
    head = b"P5\n20 41\n255\n"
    assert data.startswith(head)
    assert len(data) == len(head) + 20 * 41

    manifest = _manifest(csv_path)
    assert manifest.outputs == [str(csv_path), str(pgm_path)]
    assert manifest.notes["regime_violations"] == []


def test_bifurcate_positive_regime(tmp_path):
    out = tmp_path / "positive.csv"
    assert run(["bifurcate", "--m-lo", "1.1", "--m-hi", "2.0", "--n-m", "10", "--bins", "40",
                "--transient", "500", "--keep", "1000", "--out", str(out), "--no-log"]) == 0
    _, rows, _ = _rows(out)
    assert rows
    assert all(float(r[1]) > 0.0 for r in rows)


def test_bifurcate_flags_escaping_columns(tmp_path):
    out = tmp_path / "escape.csv"
    assert run(["bifurcate", "--m-lo", "3.1", "--m-hi", "3.4", "--n-m", "4", "--bins", "21",
                "--transient", "500", "--keep", "1000", "--out", str(out), "--no-log"]) == 0
    _, rows, _ = _rows(out)
    assert rows == []
    assert len(_manifest(out).notes["escaped_m"]) == 4


def test_bifurcate_range_is_checked(tmp_path):
    assert run(["bifurcate", "--m-lo", "-4", "--out", str(tmp_path / "b.csv"), "--no-log"]) == 1


# ===== lyapunov =====

def test_lyapunov_plain_output(capsys):
    assert run(["lyapunov", "--map", "tent", "--steps", "20000", "--transient", "1000", "--seed", "3",
                "--no-log"]) == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    fields = dict(part.split("=") for part in line.split())
    assert float(fields["lambda"]) == pytest.approx(math.log(2.0), abs=1e-2)
    assert int(fields["n"]) == 19_000


def test_lyapunov_json_output(capsys):
    assert run(["lyapunov", "--map", "gen:-1.5", "--steps", "5000", "--transient", "500", "--json",
                "--no-log"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["map"] == "gen:-1.5"
    assert data["n"] == 4500
    assert data["escaped_at"] is None
    assert data["lambda"] == pytest.approx(math.log(1.5), abs=1e-9)


def test_lyapunov_escape_before_transient_fails():
    assert run(["lyapunov", "--map", "tent", "--slope-error", "0.05", "--steps", "20000",
                "--transient", "10000", "--no-log"]) == 1


def test_lyapunov_escape_after_transient_fails(capsys):
    code = run(["lyapunov", "--map", "tent", "--slope-error", "0.01", "--steps", "20000", "--transient", "10",
                "--x0", "0.3", "--seed", "0", "--json", "--no-log"])
    assert code == 1
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "escaped the domain" in captured.err


# ===== bits =====

def test_bits_ascii_example(tmp_path, capsys):
    out = tmp_path / "bits.txt"
    assert run(["bits", "--map", "modtent", "--count", "16", "--dither", "0", "--x0", "0.3",
                "--format", "ascii", "--out", str(out), "--no-log"]) == 0
    text = out.read_text()
    assert len(text) == 17 and text.endswith("\n")
    assert text.startswith("0010")
    assert set(text.strip()) <= {"0", "1"}
    assert "wrote 16 bits" in capsys.readouterr().out

    again = tmp_path / "again.txt"
    assert run(["bits", "--map", "modtent", "--count", "16", "--dither", "0", "--x0", "0.3",
                "--format", "ascii", "--out", str(again), "--no-log"]) == 0
    assert again.read_text() == text


def test_bits_packed(tmp_path):
    out = tmp_path / "bits.bin"
    assert run(["bits", "--count", "12", "--out", str(out), "--no-log"]) == 0
    assert len(out.read_bytes()) == 2
    notes = _manifest(out).notes
    assert notes["bit_count"] == 12
    assert notes["format"] == "packed"


def test_bits_escape_is_reported(tmp_path, capsys):
    out = tmp_path / "short.bin"
    assert run(["bits", "--map", "tent", "--slope-error", "0.05", "--count", "50000", "--seed", "4",
                "--out", str(out), "--no-log"]) == 0
    notes = _manifest(out).notes
    assert notes["bit_count"] < 50_000
    assert "escaped_at_step" in notes
    assert "only" in capsys.readouterr().err


def test_bits_count_must_be_positive(tmp_path):
    assert run(["bits", "--count", "0", "--out", str(tmp_path / "b.bin"), "--no-log"]) == 1


# ===== test =====

def test_suite_fails_on_constant_file(tmp_path, capsys):
    path = tmp_path / "zeros.txt"
    path.write_text("0" * 20_000 + "\n")
    assert run(["test", "--input", str(path), "--format", "ascii", "--no-log"]) == 3
    out = capsys.readouterr().out
    assert "suite verdict: FAIL" in out
    assert "monobit" in out


def test_suite_needs_enough_bits(tmp_path):
    path = tmp_path / "short.txt"
    path.write_text("01" * 2500 + "\n")
    assert run(["test", "--input", str(path), "--format", "ascii", "--no-log"]) == 1


def test_suite_rejects_one_sided_map():
    assert run(["test", "--map", "gen:1.5", "--count", "20000", "--no-log"]) == 3


def test_suite_accepts_dithered_modified_tent(capsys):
    assert run(["test", "--map", "modtent", "--count", "100000", "--alpha", "0.001", "--seed", "11",
                "--lags", "1,2", "--json", "--no-log"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["passed"] is True
    assert data["length"] == 100_000
    assert [e["name"] for e in data["entries"]][2:4] == ["serial_lag1", "serial_lag2"]
    assert 0.48 <= data["markov"]["p"] <= 0.52


def test_packed_input_length_comes_from_manifest(tmp_path, capsys):
    out = tmp_path / "bits.bin"
    assert run(["bits", "--count", "20003", "--seed", "2", "--out", str(out), "--no-log"]) == 0
    capsys.readouterr()
    assert run(["test", "--input", str(out), "--alpha", "0.001", "--no-log"]) == 0
    assert "20003 bits" in capsys.readouterr().out


def test_missing_input_exits_two(tmp_path):
    assert run(["test", "--input", str(tmp_path / "nope.bin"), "--length", "100", "--no-log"]) == 2


# ===== confine =====

def test_confine_perturbed_tent_escapes(capsys):
    assert run(["confine", "--map", "tent", "--slope-error", "0.05", "--trials", "20", "--steps", "10000",
                "--json", "--no-log"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["escapes"] == 20
    assert data["escape_rate"] == 1.0


def test_confine_generalized_map_stays_confined(capsys):
    assert run(["confine", "--map", "gen:-2.05", "--trials", "20", "--steps", "10000", "--json",
                "--no-log"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["escapes"] == 0
    assert data["median_escape_step"] is None


def test_confine_non_confined_slope(capsys):
    assert run(["confine", "--map", "gen:3.2", "--trials", "10", "--no-log"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert "escapes=10" in lines
    assert "trials=10" in lines


# ===== 语言、配置与日志 =====

def test_chinese_messages(tmp_path, capsys):
    out = tmp_path / "bits.bin"
    assert run(["bits", "--count", "16", "--lang", "zh_CN", "--out", str(out), "--no-log"]) == 0
    assert f"已写入 16 个比特到 {out}" in capsys.readouterr().out

    zeros = tmp_path / "zeros.txt"
    zeros.write_text("0" * 20_000 + "\n")
    assert run(["test", "--input", str(zeros), "--format", "ascii", "--lang", "zh_CN", "--no-log"]) == 3
    assert "检验结论：未通过" in capsys.readouterr().out
    assert "--lang" not in _manifest(out).argv


def test_config_file_overrides_defaults(tmp_path, capsys):
    config = tmp_path / "config.ini"
    config.write_text("[General]\nmaster_seed=99\nbogus_key=1\n")
    out = tmp_path / "orbit.csv"
    assert run(["orbit", "--steps", "10", "--config", str(config), "--out", str(out), "--no-log"]) == 0
    assert "bogus_key" in capsys.readouterr().err
    assert _manifest(out).master_seed == 99


def test_config_file_key_is_not_a_setting(tmp_path):
    config = tmp_path / "config.ini"
    config.write_text("[General]\nconfig_file=other.ini\nalpha=0.05\n")
    merged = load_config(str(config))
    assert merged["_UNKNOWN_KEYS"] == ["config_file"]
    assert "CONFIG_FILE" not in merged
    assert merged["ALPHA"] == 0.05


def test_bad_config_exits_one(tmp_path):
    config = tmp_path / "config.ini"
    config.write_text("[General]\nalpha=abc\n")
    assert run(["orbit", "--config", str(config), "--out", str(tmp_path / "o.csv"), "--no-log"]) == 1


def test_log_dir_receives_logs(tmp_path):
    out = tmp_path / "orbit.csv"
    assert run(["orbit", "--steps", "10", "--log-dir", str(tmp_path), "--out", str(out)]) == 0
    assert os.path.exists(tmp_path / "logs" / "operation_log.txt")

    assert run(["orbit", "--map", "gen:3.2", "--log-dir", str(tmp_path), "--out", str(out)]) == 1
    with open(tmp_path / "error_log.txt", encoding="utf-8") as f:
        assert "command: orbit" in f.read()


def test_no_log_writes_nothing(tmp_path):
    out = tmp_path / "orbit.csv"
    assert run(["orbit", "--steps", "10", "--out", str(out), "--no-log"]) == 0
    assert sorted(os.listdir(tmp_path)) == ["orbit.csv", "orbit.csv.manifest.json"]

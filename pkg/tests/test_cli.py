import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ristrack.cli import main
from ristrack.codebook import load_codebook


def write_cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def read_cut(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["phi_deg"]) for r in rows]), np.array([float(r["gain_db"]) for r in rows])


def test_codebook_default(tmp_path, capsys):
    assert main(["codebook", "--out", str(tmp_path)]) == 0
    book = load_codebook(tmp_path / "codebook.json")
    assert len(book) == 9
    assert [round(e.desired.degrees[1]) for e in book.entries] == list(range(-40, 41, 10))
    assert "9 codewords" in capsys.readouterr().out


def test_codebook_far_boresight_all_zero(tmp_path):
    cfg = write_cfg(tmp_path, {
        "case": "II",
        "geometry": {"M": 20, "N": 20, "freq_hz": 5.4e9, "spacing_over_lambda": 0.25},
        "incident": {"type": "far", "theta_tx_deg": 90, "phi_tx_deg": 0},
        "codebook": {"theta_deg": [90], "phi_deg": [0]},
    })
    assert main(["--config", cfg, "--out", str(tmp_path), "codebook"]) == 0
    book = load_codebook(tmp_path / "codebook.json")
    assert len(book) == 1
    assert not book[0].bits.any()


def test_codebook_empty_grid_names_field(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "geometry": {"M": 20, "N": 20, "freq_hz": 5.4e9, "spacing_over_lambda": 0.25},
        "codebook": {"theta_deg": [90], "phi_deg": []},
    })
    code = main(["codebook", "--config", cfg, "--out", str(tmp_path)])
    assert code != 0
    assert "phi_deg" in capsys.readouterr().err


def test_pattern_default(tmp_path):
    assert main(["pattern", "--out", str(tmp_path)]) == 0
    files = sorted(tmp_path.glob("pattern_*.csv"))
    assert len(files) == 9
    targets = list(range(-40, 41, 10))
    for f, want in zip(files, targets):
        phi, g = read_cut(f)
        assert abs(phi[np.argmax(g)] - want) <= 3.0
    phi, g = read_cut(files[4])
    assert g == pytest.approx(g[::-1], abs=1e-9)


def test_pattern_missing_codebook(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"codebook_path": "nope.json"})
    assert main(["pattern", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "codebook_path" in capsys.readouterr().err


def test_pattern_from_saved_codebook(tmp_path):
    assert main(["codebook", "--out", str(tmp_path)]) == 0
    cfg = write_cfg(tmp_path, {"codebook_path": "codebook.json", "indices": [2]})
    assert main(["pattern", "--config", cfg, "--out", str(tmp_path / "p")]) == 0
    assert [f.name for f in (tmp_path / "p").glob("*.csv")] == ["pattern_002_phi-020.0.csv"]


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"policy": "vision", "bogus": 1})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "bogus" in capsys.readouterr().err


def test_bad_command_exits_1():
    assert main(["teleport"]) == 1


@pytest.fixture
def short_sim(tmp_path):
    doc = {"policy": "sweep", "duration_s": 2.0, "seed": 4}
    return write_cfg(tmp_path, doc)


def test_simulate_byte_identical(tmp_path, short_sim):
    for d in ("a", "b"):
        assert main(["simulate", "--config", short_sim, "--out", str(tmp_path / d)]) == 0
    a = (tmp_path / "a" / "trace.csv").read_bytes()
    assert a == (tmp_path / "b" / "trace.csv").read_bytes()
    assert a.startswith(b"time_ms,true_phi_deg,est_phi_deg,codeword_index,snr_db,overhead,capacity_bps_hz\n")
    assert main(["simulate", "--config", short_sim, "--seed", "5", "--out", str(tmp_path / "c")]) == 0
    assert a != (tmp_path / "c" / "trace.csv").read_bytes()


def test_compare_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, {"duration_s": 2.0, "seed": 2, "policies": ["vision", "sweep", "static"]})
    for d in ("a", "b"):
        assert main(["compare", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    for name in ("report.json", "trace_vision.csv", "trace_sweep.csv", "trace_genie.csv", "trace_static.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert set(rep["policies"]) == {"genie", "vision", "sweep", "static"}


def test_breakdown(tmp_path):
    cfg = write_cfg(tmp_path, {"duration_s": 2.0, "speeds_deg_s": [10, 200]})
    assert main(["breakdown", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "breakdown.json").read_text())
    assert [r["speed_deg_s"] for r in rep["speeds"]] == [10, 200]


def test_frame_encode_index(capsys):
    assert main(["frame", "encode", "--opcode", "index", "--index", "12"]) == 0
    assert capsys.readouterr().out.strip() == "A5 01 00 02 00 0C 90"


def test_frame_decode_roundtrip(capsys):
    assert main(["frame", "decode", "A5 01 00 02 00 0C 90"]) == 0
    assert "index=12" in capsys.readouterr().out


def test_frame_decode_corrupt_exits_2(capsys):
    assert main(["frame", "decode", "A5 01 00 02 00 0D 90"]) == 2
    assert "Crc" in capsys.readouterr().err


def test_frame_dynamic_roundtrip(capsys):
    payload = "FF00" * 25
    assert main(["frame", "encode", "--opcode", "dynamic", "--payload", payload]) == 0
    hexed = capsys.readouterr().out.strip()
    assert main(["frame", "decode", hexed]) == 0
    out = capsys.readouterr().out
    assert "opcode=DYNAMIC length=50" in out and payload in out


def test_frame_bad_hex_exits_1():
    assert main(["frame", "decode", "zz"]) == 1


def test_console_module_runs():
    r = subprocess.run([sys.executable, "-m", "ristrack", "frame", "encode", "--index", "12"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "A5 01 00 02 00 0C 90"

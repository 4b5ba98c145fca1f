import json
import math

import pytest

from shearspec.cli import main, serialize_report

FAST_DISPERSION = """
command = "dispersion"

[profile]
kind = "constant"
beta = 1.0

[geometry]
d = 3.141592653589793

[dispersion]
xi_range = [-1.0, 1.0]
xi_points = 3
bands = 1
n_t = 30
"""

FAST_PROBE = """
command = "probe-volume"

[profile]
kind = "linear-unbounded"

[geometry]
d = 1.0

[probe-volume]
centers_x = [5.0, 10.0]
radius = 1.0
n_samples = 20000
"""

CERTIFY_REPULSIVE = """
command = "certify"

[profile]
kind = "bump"
beta = 1.0

[profile.deficit]
shape = "plateau"
amplitude = 0.5
support = [0.0, 2.0]
shoulder = 0.1

[geometry]
d = 3.141592653589793

[certify]
condition = "i"
n = 3.0
"""

HARDY_ATTRACTIVE = """
command = "hardy"

[profile]
kind = "bump"
beta = 1.0

[profile.deficit]
shape = "plateau"
amplitude = -0.5
support = [2.0, 6.0]
shoulder = 0.1

[geometry]
d = 3.141592653589793
L = 8.0

[hardy]
interval = [2.0, 6.0]
trials = 2
lambda_resolution = [8, 8]
resolution = [40, 10]
"""

MISSING_D = """
command = "dispersion"

[profile]
kind = "constant"
beta = 1.0

[geometry]
L = 8.0
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_dispersion_run_and_csv_exactness(tmp_path):
    cfg = _write(tmp_path, "d.toml", FAST_DISPERSION)
    out = tmp_path / "out"
    assert main(["dispersion", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["command"] == "dispersion"
    assert report["results"]["kind"] == "dispersion"
    assert report["results"]["threshold"] == pytest.approx(2.0)
    assert "timings" not in report  # stderr-only by default
    lines = (out / "bands.csv").read_text().splitlines()
    assert lines[0] == "xi,band_index,analytic,numeric"
    # the xi = 0 analytic entry is exactly 2 * E1 and prints losslessly
    mid = [ln for ln in lines[1:] if ln.startswith("0.0,1,")]
    assert len(mid) == 1
    assert mid[0].split(",")[2] == "2.0"
    assert (out / "plot.dat").exists()


def test_reruns_are_byte_identical(tmp_path):
    cfg = _write(tmp_path, "p.toml", FAST_PROBE)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["probe-volume", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["probe-volume", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
    assert (out1 / "areas.csv").read_bytes() == (out2 / "areas.csv").read_bytes()


def test_seed_override_changes_samples(tmp_path):
    cfg = _write(tmp_path, "p.toml", FAST_PROBE)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["probe-volume", "--config", cfg, "--out", str(out1)]) == 0
    assert (
        main(["probe-volume", "--config", cfg, "--out", str(out2), "--seed", "99"]) == 0
    )
    r1 = json.loads((out1 / "report.json").read_text())
    r2 = json.loads((out2 / "report.json").read_text())
    assert r1["results"]["areas"] != r2["results"]["areas"]
    assert r1["seed"] is None and r2["seed"] == 99


def test_embed_timings_flag(tmp_path):
    cfg = _write(tmp_path, "p.toml", FAST_PROBE)
    out = tmp_path / "out"
    assert (
        main(["probe-volume", "--config", cfg, "--out", str(out), "--embed-timings"])
        == 0
    )
    report = json.loads((out / "report.json").read_text())
    assert set(report["timings"]) >= {"parse", "compute"}


def test_failed_verdict_exits_two(tmp_path):
    # a repulsive profile can never certify a bound state
    cfg = _write(tmp_path, "c.toml", CERTIFY_REPULSIVE)
    out = tmp_path / "out"
    assert main(["certify", "--config", cfg, "--out", str(out)]) == 2
    report = json.loads((out / "report.json").read_text())
    assert report["results"]["verdict"] is False
    assert report["results"]["rayleigh_gap"] > 0


def test_missing_required_field_exits_one(tmp_path, capsys):
    cfg = _write(tmp_path, "bad.toml", MISSING_D)
    assert main(["dispersion", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert 'missing required field "geometry.d"' in err


def test_command_mismatch_exits_one(tmp_path, capsys):
    cfg = _write(tmp_path, "d.toml", FAST_DISPERSION)
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "scenario declares 'dispersion'" in err


def test_missing_config_file_exits_one(tmp_path, capsys):
    assert main(["spectrum", "--config", str(tmp_path / "nope.toml")]) == 1
    assert "config file not found" in capsys.readouterr().err


def test_computational_error_is_embedded_in_report(tmp_path, capsys):
    cfg = _write(tmp_path, "h.toml", HARDY_ATTRACTIVE)
    out = tmp_path / "out"
    assert main(["hardy", "--config", cfg, "--out", str(out)]) == 1
    assert "shear not repulsive" in capsys.readouterr().err
    report = json.loads((out / "report.json").read_text())
    assert report["error"] == "shear not repulsive"
    assert report["results"] is None


def test_unknown_subcommand_is_rejected_by_the_parser(tmp_path):
    with pytest.raises(SystemExit):
        main(["transmogrify", "--config", "x.toml"])


def test_serialize_report_handles_infinities():
    text = serialize_report({"a": math.inf, "b": -math.inf, "t": (1, 2.5)})
    payload = json.loads(text)
    assert payload == {"a": "inf", "b": "-inf", "t": [1, 2.5]}
    # keys come out sorted for reproducible bytes
    assert text.index('"a"') < text.index('"b"') < text.index('"t"')


def test_report_echoes_scenario_and_version(tmp_path):
    cfg = _write(tmp_path, "p.toml", FAST_PROBE)
    out = tmp_path / "out"
    assert main(["probe-volume", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["toolkit"] == "shearspec"
    assert report["scenario"]["probe-volume"]["n_samples"] == 20000
    assert isinstance(report["version"], str) and report["version"]

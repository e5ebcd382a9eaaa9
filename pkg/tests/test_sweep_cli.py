import csv
import io
import json
import math
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from dimerqed import cli, report
from dimerqed.config import load_config, spec_from_dict
from dimerqed.sweep import run_evolution, run_spectrum, run_sweep

SMALL = {
    "system": {"J": 20.0, "delta": 5.0, "Omega": 4.0, "kappa": 40.0, "g": 4.0,
               "gamma12": 0.5, "Delta_a": "-R", "n_max": 2},
    "sweep": {"axis": [{"name": "Delta", "min": -25.0, "max": 25.0, "count": 7}]},
    "observables": {"list": ["concurrence", "populations", "coherence", "intensity",
                             "g2", "g2_freq", "gap"]},
    "models": {"list": ["full", "bloch_redfield", "collective_purcell"]},
}

SMALL_TOML = """
[system]
J = 20.0
delta = 5.0
Omega = 4.0
kappa = 40.0
g = 4.0
gamma12 = 0.5
Delta_a = "-R"
n_max = 2

[[sweep.axis]]
name = "Delta"
min = -25.0
max = 25.0
count = 5

[[sweep.axis]]
name = "Omega"
min = 1.0
max = 4.0
count = 3

[observables]
list = ["concurrence", "populations"]

[models]
list = ["full", "collective_purcell"]

[evolve]
initial = "gg"
t_max = 2.0
count = 11

[spectrum]
min = "-2*R"
max = "2*R"
count = 21
"""


@pytest.fixture
def small_toml(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(SMALL_TOML)
    return p


def test_csv_is_byte_identical_across_thread_counts():
    spec = spec_from_dict(SMALL)
    one = report.to_csv(run_sweep(spec, threads=1))
    four = report.to_csv(run_sweep(spec, threads=4))
    assert one == four
    rows = list(csv.reader(io.StringIO(one)))
    assert len(rows) == 8
    header = rows[0]
    assert "full.rho_gg_ee_re" in header and "full.rho_gg_ee_im" in header
    assert header[0] == "Delta" and header[-1] == "mechanisms"


def test_rows_follow_grid_order_and_models_agree_roughly():
    res = run_sweep(spec_from_dict(SMALL), threads=3)
    assert [r["index"] for r in res.rows] == [[i] for i in range(7)]
    assert np.all(np.diff(res.column("Delta")) > 0)
    full, br = res.column("full.concurrence"), res.column("bloch_redfield.concurrence")
    assert np.abs(full - br).max() < 0.05
    pops = sum(res.column(f"full.pop_{k}") for k in ("gg", "S", "A", "ee"))
    assert np.allclose(pops, 1.0)
    assert res.metadata["spec_hash"] == spec_from_dict(SMALL).spec_hash()
    assert not res.failures


def test_json_round_trip():
    res = run_sweep(spec_from_dict(SMALL))
    back = report.from_json(report.to_json(res))
    assert back.columns == res.columns and back.axes == res.axes
    for a, b in zip(res.rows, back.rows):
        for k, v in a.items():
            if isinstance(v, float) and math.isnan(v):
                assert math.isnan(b[k])
            else:
                assert b[k] == v


def test_failed_points_are_recorded_not_raised():
    data = {"system": {"J": 1.0, "delta": 1.0, "Omega": 1.0, "g": 1.0},
            "sweep": {"axis": [{"name": "kappa", "values": [0.0, 2.0]}]},
            "models": {"list": ["bloch_redfield"]}}
    res = run_sweep(spec_from_dict(data))
    assert len(res.failures) == 1
    assert "ParameterError" in res.rows[0]["bloch_redfield.error"]
    assert res.rows[1]["bloch_redfield.error"] == ""
    assert math.isnan(res.rows[0]["bloch_redfield.concurrence"])


def test_svg_line_and_heatmap(small_toml):
    one = run_sweep(spec_from_dict(SMALL))
    ET.fromstring(report.to_svg(one))
    two = run_sweep(load_config(small_toml))
    assert two.grid("full.concurrence").shape == (5, 3)
    root = ET.fromstring(report.to_svg(two))
    assert root.tag.endswith("svg")


def test_evolution_and_spectrum_tables(small_toml):
    spec = load_config(small_toml)
    ev = run_evolution(spec)
    assert ev.columns[0] == "t" and len(ev.rows) == 11
    assert ev.rows[0]["full.pop_gg"] == pytest.approx(1.0)
    sp = run_spectrum(spec)
    assert len(sp.rows) == 21
    assert max(r["full.S"] for r in sp.rows) == pytest.approx(1.0)


def test_cli_exit_codes(tmp_path, small_toml, capsys):
    assert cli.main(["sweep", "--config", str(small_toml), "--out", str(tmp_path / "o"),
                     "--format", "csv,json,svg", "--threads", "2"]) == 0
    assert sorted(p.name for p in (tmp_path / "o").iterdir()) == \
        ["small.csv", "small.json", "small.svg"]
    with pytest.raises(SystemExit) as exc:
        cli.main(["sweep", "--format", "xlsx"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 1
    bad = tmp_path / "bad.toml"
    bad.write_text("[observables]\nlist = []\n")
    assert cli.main(["steady", "--config", str(bad)]) == 2
    assert cli.main(["steady", "--config", "no_such_fixture"]) == 2
    assert cli.main(["steady", "--config", str(small_toml), "--set", "Jay=1"]) == 2
    # a decoupled dark state leaves two stationary states
    dark = tmp_path / "dark.toml"
    dark.write_text("[system]\ngamma12 = 1.0\nOmega = 1.0\nkappa = 1.0\ng = 0.5\n"
                    "[models]\nlist = ['collective_purcell']\n")
    assert cli.main(["steady", "--config", str(dark)]) == 3
    capsys.readouterr()


def test_cli_steady_classify_evolve_spectrum(small_toml, capsys):
    assert cli.main(["steady", "--config", str(small_toml)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("full.concurrence")
    assert cli.main(["classify", "--config", "fig5", "--format", "json"]) == 0
    assert "I_A" in json.loads(capsys.readouterr().out)["mechanisms"]
    assert cli.main(["evolve", "--config", str(small_toml)]) == 0
    assert capsys.readouterr().out.startswith("t,")
    assert cli.main(["spectrum", "--config", str(small_toml), "--format", "json"]) == 0
    assert len(json.loads(capsys.readouterr().out)["rows"]) == 21
    assert cli.main(["fixtures"]) == 0
    assert "fig3" in capsys.readouterr().out.split()


def test_cli_validate_subset(tmp_path, capsys):
    assert cli.main(["validate", "--only", "1,2", "--out", str(tmp_path),
                     "--strict"]) == 0
    doc = json.loads((tmp_path / "validation.json").read_text())
    assert [d["number"] for d in doc] == [1, 2]
    assert all(d["verdict"] == "PASS" for d in doc)
    assert "[PASS]  1." in capsys.readouterr().out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "dimerqed", "--version"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()

import csv
import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from wallsens.cli import main
from wallsens.io import write_series


def _yaml(tmp_path, doc, name="run.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc))
    return str(p)


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


EQUILIBRIUM = {
    "task": "simulate",
    "wall": {"layers": [{"k": 1.0, "c": 1.5e6, "thickness": 0.1}, {"k": 0.5, "c": 1e6, "thickness": 0.1}],
             "h_L": 10.0, "h_R": 5.0, "boundary": {"T_L": 293.15, "T_R": 293.15}, "initial": 1.0},
    "grid": {"dx": 0.1, "dt": 0.1, "t_max": 5.0},
}


def test_simulate_equilibrium_gives_constant_field(tmp_path):
    cfg = _yaml(tmp_path, {**EQUILIBRIUM, "out": str(tmp_path / "eq")})
    assert main(["simulate", "--config", cfg]) == 0
    u = np.array([float(r[2]) for r in _rows(tmp_path / "eq" / "field.csv")[1:]])
    np.testing.assert_allclose(u, 1.0, atol=1e-14)
    man = json.loads((tmp_path / "eq" / "manifest.json").read_text())
    assert man["outputs"] == ["field.csv", "flux.csv"]
    assert man["summary"]["E_star"] == pytest.approx(0.0, abs=1e-14)
    assert set(man["versions"]) == {"wallsens", "python", "numpy", "scipy"}


def test_csv_boundary_and_steady_start(tmp_path):
    t = np.arange(0, 11) * 3600.0
    write_series(tmp_path / "out.csv", t, 283.15 + 0 * t)
    doc = {**EQUILIBRIUM, "wall": {**EQUILIBRIUM["wall"], "boundary": {"T_L": "out.csv", "T_R": 293.15},
                                   "initial": "steady"}, "grid": {"dx": 0.1, "dt": 0.1}}
    out = tmp_path / "st"
    assert main(["simulate", "--config", _yaml(tmp_path, doc), "--out", str(out)]) == 0
    flux = np.array([float(r[1]) for r in _rows(out / "flux.csv")[1:]])
    np.testing.assert_allclose(flux, flux[0], rtol=1e-10)
    assert flux[0] < 0


def test_sobol_twice_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["sobol", "--n-samples", "64", "--seed", "7", "--t-max", "1", "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "sobol.json").read_bytes() == (tmp_path / "b" / "sobol.json").read_bytes()
    ma, mb = (json.loads((tmp_path / d / "manifest.json").read_text()) for d in ("a", "b"))
    assert ma["inputs_hash"] == mb["inputs_hash"]
    ma.pop("config"), mb.pop("config")
    assert ma == mb


def test_fd_sens_writes_figure_table(tmp_path):
    assert main(["fd-sens", "--t-max", "0.5", "--grid-dx", "0.05", "--grid-dt", "0.005", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "fig7_eps2_vs_x.csv")
    assert rows[0] == ["x_star", "continuous", "forward", "backward", "central", "three_point_backward"]
    assert len(rows) == 22


@pytest.mark.parametrize("task, extra, produced", [
    ("sens", ["--params", "k1,c2"], ["sens_k1.csv", "sens_c2.csv"]),
    ("taylor", ["--lattice-n", "3"], ["taylor.json", "fig11_eps_tay.csv"]),
    ("metrics", ["--lattice-n", "3"], ["metrics.json", "metrics.csv"]),
    ("src", ["--n-samples", "20"], ["src.json", "samples.csv"]),
    ("rbd-fast", ["--n-samples", "60"], ["rbd_fast.json"]),
])
def test_tasks_write_outputs(tmp_path, task, extra, produced):
    assert main([task, "--t-max", "0.5", "--grid-dx", "0.05", "--grid-dt", "0.005", "--out", str(tmp_path), *extra]) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert sorted(produced) == man["outputs"]
    for name in produced:
        assert (tmp_path / name).stat().st_size > 0


def test_bayonne_metrics_reading(tmp_path):
    assert main(["metrics", "--case", "bayonne-synthetic", "--days", "2", "--lattice-n", "2", "--params", "k1,c1",
                 "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "metrics.json").read_text())
    assert doc["output"] == "integrated"
    assert doc["eta_layer"]["k1"] > doc["eta_layer"]["c1"]


@pytest.mark.parametrize("argv, code", [
    (["simulate", "--grid-dx", "0.03"], 2),
    (["simulate", "--params", "k9"], 2),
    (["envelope", "--case", "validation"], 2),
    (["simulate", "--config", "/nonexistent.yaml"], 2),
])
def test_exit_codes(tmp_path, argv, code, capsys):
    assert main([*argv, "--out", str(tmp_path)]) == code
    assert "wallsens: error:" in capsys.readouterr().err


def test_config_task_mismatch(tmp_path):
    assert main(["sobol", "--config", _yaml(tmp_path, EQUILIBRIUM)]) == 2


def test_divergence_exit_code(tmp_path, monkeypatch):
    import wallsens.cli as cli
    from wallsens.errors import DivergenceError

    def boom(s):
        raise DivergenceError(3, 7)
    monkeypatch.setitem(cli.HANDLERS, "simulate", boom)
    assert main(["simulate", "--out", str(tmp_path)]) == 3


def test_argparse_rejects_unknown_task():
    with pytest.raises(SystemExit) as info:
        main(["plot"])
    assert info.value.code == 2


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "wallsens.cli", "simulate", "--t-max", "0.1", "--grid-dx", "0.1",
                        "--grid-dt", "0.01", "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "simulate: wrote 3 file(s)" in r.stdout

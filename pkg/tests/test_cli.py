import json

import pytest

from ctrwlab.cadlag import StepPath, read_csv, write_csv
from ctrwlab.cli import main, process_from_mapping


def write_toml(tmp_path, text):
    p = tmp_path / "cfg.toml"
    p.write_text(text)
    return str(p)


@pytest.mark.parametrize("text", [
    'process = "ctrw"\nn = 200\nbeta = 0.8\n',
    'process = "price"\nn = 200\nr = 0.05\n[innovation]\nfamily = "symmetric_pareto"\nalpha = 4.0\n',
    'process = "coupled"\nn = 200\nbeta = 0.7\n[parent]\nalpha = 1.5\n',
    'process = "limit"\nbeta = 0.8\n[limit]\nkind = "subordinated"\ngrid_step = 0.01\n',
])
def test_simulate_writes_reproducible_path(tmp_path, text):
    cfg = write_toml(tmp_path, text)
    assert main(["simulate", "--config", cfg, "--seed", "7", "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", cfg, "--seed", "7", "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "path.csv").read_text()
    assert a == (tmp_path / "b" / "path.csv").read_text()
    assert read_csv(tmp_path / "a" / "path.csv").horizon == 1.0


def test_simulate_rejects_unknown_keys(tmp_path, capsys):
    cfg = write_toml(tmp_path, 'colour = "red"\n')
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "colour" in capsys.readouterr().err


def test_process_from_mapping_unknown_process():
    with pytest.raises(ValueError):
        process_from_mapping({"process": "brownian"}, 0)


def test_metric_all_modes(tmp_path, capsys):
    x, y = tmp_path / "x.csv", tmp_path / "y.csv"
    write_csv(StepPath([0.5], [1.0], horizon=1.0), x)
    write_csv(StepPath([0.6], [1.0], horizon=1.0), y)
    assert main(["metric", str(x), str(y), "--resolution", "1e-3", "--out", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["uniform"]["value"] == 1.0
    assert out["j1"]["value"] == pytest.approx(0.1)
    assert out["m1"]["value"] <= 0.1 + 1e-3
    assert json.loads((tmp_path / "metric.json").read_text()) == out


def test_metric_single_mode_and_missing_file(tmp_path, capsys):
    x = tmp_path / "x.csv"
    write_csv(StepPath([0.5], [1.0], horizon=1.0), x)
    assert main(["metric", str(x), str(x), "--mode", "j1"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == 0.0
    assert main(["metric", str(x), str(tmp_path / "nope.csv")]) == 2


def test_scenario_exit_codes(tmp_path, capsys):
    ok = write_toml(tmp_path, "n_ladder = [20, 100]\nreplications = 200\n"
                              "[thresholds]\nintegral_T = 0.5\nintegral_half = 0.5\n")
    assert main(["scenario", "langevin", "--config", ok, "--seed", "1",
                 "--out", str(tmp_path / "r")]) == 0
    assert "overall: PASS" in capsys.readouterr().out
    assert (tmp_path / "r" / "report.json").exists()
    failing = write_toml(tmp_path, "n_ladder = [20, 100]\nreplications = 200\n"
                                   "[thresholds]\nintegral_T = 0.0\n")
    assert main(["scenario", "langevin", "--config", failing]) == 1
    bad = write_toml(tmp_path, "speed = 3\n")
    assert main(["scenario", "langevin", "--config", bad]) == 2
    assert main(["scenario", "langevin", "--jobs", "0"]) == 2


def test_bad_seed_is_rejected():
    with pytest.raises(SystemExit):
        main(["simulate", "--seed", "-1", "--out", "x"])


def test_selftest_subset(tmp_path, capsys):
    code = main(["selftest", "--quick", "--only", "2,7", "--out", str(tmp_path)])
    lines = capsys.readouterr().out.splitlines()
    assert code == 0
    assert lines[0].startswith("criterion  2: PASS")
    assert lines[1].startswith("criterion  7: PASS")
    assert lines[-1] == "overall: PASS"
    report = json.loads((tmp_path / "report.json").read_text())
    assert [r["number"] for r in report["criteria"]] == [2, 7]

import json

import numpy as np
import pytest

from dqptwalk import cli
from dqptwalk.errors import ConfigError


def test_parse_pi_value():
    assert cli.parse_pi_value("1/4") == pytest.approx(np.pi / 4)
    assert cli.parse_pi_value("-1/2") == pytest.approx(-np.pi / 2)
    assert cli.parse_pi_value("3/8") == pytest.approx(3 * np.pi / 8)
    assert cli.parse_pi_value("0.25") == pytest.approx(np.pi / 4)
    assert cli.parse_pi_value("0") == 0.0
    with pytest.raises(ConfigError):
        cli.parse_pi_value("a lot")
    with pytest.raises(ConfigError):
        cli.parse_pi_value("1/0")


def test_load_config_json(tmp_path):
    f = tmp_path / "c.json"
    f.write_text('{"final_theta1": "-1/2", "n_k": 64}')
    cfg = cli.load_config(f)
    assert cfg["final_theta1"] == "-1/2"
    assert cfg["n_k"] == 64


def test_load_config_keyvalue(tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("# demo run\nfinal_theta1 = -1/2\nfinal_theta2=3/8\n\nloss=0\n")
    cfg = cli.load_config(f)
    assert cfg["final_theta1"] == "-1/2"
    assert cfg["loss"] == "0"


def test_load_config_bad_line(tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("just words\n")
    with pytest.raises(ConfigError):
        cli.load_config(f)


def test_build_spec_regime_inference():
    s = cli.build_spec({"final_theta1": "-1/2", "final_theta2": "3/8"})
    assert s.regime == "pure"
    s = cli.build_spec({"final_theta1": "-1/3", "final_theta2": "1/5",
                        "loss": "0.36"})
    assert s.regime == "nonunitary" and s.loss == pytest.approx(0.36)
    s = cli.build_spec({"final_theta1": "-1/2", "final_theta2": "3/8",
                        "mix_p": "0.7"})
    assert s.regime == "mixed" and s.mix_p == pytest.approx(0.7)


def run_main(args):
    return cli.main([str(a) for a in args])


def test_quench_writes_products(tmp_path):
    out = tmp_path / "q"
    rc = run_main(["quench", "--set", "final_theta1=-1/2",
                   "--set", "final_theta2=3/8", "--kpoints", 64,
                   "--out", out])
    assert rc == 0
    names = {p.name for p in out.iterdir()}
    assert {"summary.json", "loschmidt.csv", "field.csv", "report.json",
            "quench_rate.csv", "quench_rate.svg"} <= names
    summary = json.loads((out / "summary.json").read_text())
    assert summary["command"] == "quench"
    assert "timestamp" not in json.dumps(summary).lower()
    assert summary["headline"]["winding"] == -2
    report = json.loads((out / "report.json").read_text())
    assert len(report["fixed_points"]) == 4


def test_missing_angles_is_usage_error(capsys):
    rc = run_main(["quench"])
    assert rc == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith("error: config:")
    assert "\n" not in err


def test_unreadable_angle_is_usage_error(capsys):
    rc = run_main(["quench", "--set", "final_theta1=huh",
                   "--set", "final_theta2=1/4"])
    assert rc == 2
    assert "error: config:" in capsys.readouterr().err


def test_odd_kpoints_rejected(tmp_path):
    rc = run_main(["quench", "--set", "final_theta1=-1/2",
                   "--set", "final_theta2=3/8", "--kpoints", 15,
                   "--out", tmp_path / "x"])
    assert rc == 2


def test_sectorless_dtop_is_physics_error(tmp_path, capsys):
    # same protocol on both sides: nothing crosses, no sectors
    rc = run_main(["dtop", "--set", "final_theta1=1/4",
                   "--set", "final_theta2=-1/2", "--out", tmp_path / "d"])
    assert rc == 3
    assert "error: physics:" in capsys.readouterr().err


def test_unwritable_output_is_io_error(capsys):
    rc = run_main(["quench", "--set", "final_theta1=-1/2",
                   "--set", "final_theta2=3/8", "--out", "/proc/nope"])
    assert rc == 4
    assert "error: io:" in capsys.readouterr().err


def test_figure_runs_reproducibly(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_main(["reproduce-figure", "--figure", "fig3", "--out", a]) == 0
    assert run_main(["reproduce-figure", "--figure", "fig3", "--out", b]) == 0
    for name in ("summary.json", "fig3_rate.csv", "fig3_dtop.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    summary = json.loads((a / "summary.json").read_text())
    assert summary["figure"] == "fig3"
    assert summary["headline"]["fig3"]["critical_times"] == []


def test_unknown_figure_rejected():
    assert run_main(["reproduce-figure", "--figure", "fig9"]) == 2


def test_mixed_preset_emits_two_runs(tmp_path):
    out = tmp_path / "s2"
    assert run_main(["reproduce-figure", "--figure", "s2", "--out", out]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary["headline"]) == {"s2-p07", "s2-p09"}


def test_error_mc_products(tmp_path):
    out = tmp_path / "mc"
    rc = run_main(["error-mc", "--set", "final_theta1=-1/2",
                   "--set", "final_theta2=3/8", "--set", "mc_samples=100",
                   "--seed", 8, "--out", out])
    assert rc == 0
    lines = (out / "errorbars.csv").read_text().splitlines()
    assert lines[0] == "quantity,t,center,err_plus,err_minus,n_samples,seed"
    assert len(lines) > 1
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seed"] == 8
    assert summary["headline"]["n_samples"] == 100


def test_phase_diagram_products(tmp_path):
    out = tmp_path / "pd"
    rc = run_main(["phase-diagram", "--set", "resolution=32",
                   "--set", "n_k=64", "--threads", 2, "--out", out])
    assert rc == 0
    lines = (out / "phase_diagram.csv").read_text().splitlines()
    assert len(lines) == 1 + 32 * 32
    summary = json.loads((out / "summary.json").read_text())
    counts = summary["headline"]["winding_counts"]
    assert set(counts) <= {"-2", "0", "2", "none"} or \
        set(map(str, counts)) <= {"-2", "0", "2", "none"}

import math
import os

import pytest

from ibmfr.cli_io import (EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, PRESETS, SCHEMA,
                          ConfigError, main, parse_config, read_curve)


def summary(path):
    out = {}
    with open(os.path.join(path, "summary.txt")) as fh:
        for ln in fh:
            if not ln.startswith("#") and "=" in ln:
                k, v = ln.split(" = ", 1)
                out[k] = v.strip()
    return out


# ---- parsing

def test_full_overrides_without_file():
    cfg = parse_config("semi", overrides=["P=2", "N=8", "Z=1", "eta=1e-3", "nk=10"])
    assert cfg.get("P") == [2] and cfg.get("N") == [8] and cfg.get("eta") == [1e-3]
    assert cfg.get("nk") == 10 and cfg.deterministic


def test_defaults_cover_schema():
    cfg = parse_config("guideline")
    assert set(cfg.params) == set(SCHEMA)
    assert cfg.get("eta") == [math.inf]


@pytest.mark.parametrize("override,key", [
    ("P=-1", "'P'"), ("P=two", "'P'"), ("eta=0", "'eta'"), ("foo=1", "'foo'"),
    ("Z=30", "'Z'"), ("k_lo=0.5", "'k_lo'"), ("shift=maybe", "'shift'"),
])
def test_rejections_name_the_key(override, key):
    with pytest.raises(ConfigError, match=key):
        parse_config("semi", overrides=[override])


def test_cross_key_checks():
    with pytest.raises(ConfigError, match="N"):
        parse_config("semi", overrides=["N=9", "Z=1"])
    with pytest.raises(ConfigError, match="shift"):
        parse_config("semi", overrides=["P=1,2,3", "shift=true,false"])
    with pytest.raises(ConfigError):
        parse_config("semi", overrides=["k_lo=0.005", "k_hi=0.001"])
    with pytest.raises(ConfigError):
        parse_config("nonsense")
    with pytest.raises(ConfigError):
        parse_config("semi", preset="fig99")
    with pytest.raises(ConfigError):
        parse_config("semi", overrides=["P"])


def test_fig3_preset_expansion():
    cfg = parse_config(preset="fig3")
    assert cfg.command == "semi"
    assert cfg.get("N") == [40] and cfg.get("Z") == 1 and cfg.get("P") == [3]
    assert cfg.get("eta") == [1e-3, 1e-4, 1e-5]


def test_precedence(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[run]\ncommand = semi\n\n[params]\nN = 12\nP = 2\n")
    cfg = parse_config(preset="fig2", config_file=str(ini), overrides=["P=1"])
    assert cfg.get("N") == [12] and cfg.get("P") == [1] and cfg.get("eta") == [1e-4]
    bad = tmp_path / "bad.ini"
    bad.write_text("[extra]\nx = 1\n")
    with pytest.raises(ConfigError, match="extra"):
        parse_config("semi", config_file=str(bad))
    with pytest.raises(ConfigError):
        parse_config("semi", config_file=str(tmp_path / "missing.ini"))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_preset_round_trip(name, tmp_path):
    cfg = parse_config(preset=name)
    path = tmp_path / "echo.ini"
    path.write_text(cfg.to_ini())
    again = parse_config(config_file=str(path))
    assert again.command == cfg.command
    assert again.params == cfg.params


# ---- runs and files

def test_fig3_semi_file_count_and_round_trip(tmp_path):
    out = tmp_path / "fig3"
    rc = main(["--preset", "fig3", "nk=5", "k_hi=0.5", "--out", str(out)])
    assert rc == EXIT_OK
    csvs = sorted(p for p in os.listdir(out) if p.endswith(".csv"))
    assert len(csvs) == 4
    assert sum("reference" in p for p in csvs) == 1
    header, cols, data = read_curve(out / csvs[0])
    assert cols[:3] == ["k_norm", "khat", "real_kstar"] and data.shape == (5, len(cols))
    # provenance block reproduces the run configuration
    ini = tmp_path / "prov.ini"
    ini.write_text("\n".join(ln for ln in header if not ln.startswith("units:")) + "\n")
    again = parse_config(config_file=str(ini))
    assert again.params == parse_config(preset="fig3", overrides=["nk=5", "k_hi=0.5"]).params
    s = summary(out)
    assert all(float(v) < 0 for k, v in s.items() if k.startswith("gamma_ibm"))


def test_rerun_is_byte_identical(tmp_path):
    args = ["--preset", "fig2", "nk=12", "plot=true"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    names = sorted(os.listdir(tmp_path / "a"))
    assert "plot_curves.py" in names and names == sorted(os.listdir(tmp_path / "b"))
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_full_precision_output(tmp_path):
    assert main(["cfl-max", "P=3", "N=40", "--out", str(tmp_path)]) == EXIT_OK
    val = summary(tmp_path)["cfl_max"]
    assert len(val.replace(".", "").lstrip("0")) >= 15


def test_critical_eta_summary_brackets(tmp_path):
    assert main(["--preset", "fig6-8", "cfl_fraction=0.1", "--out", str(tmp_path)]) == EXIT_OK
    s = summary(tmp_path)
    lo, hi = float(s["eta_low_over_dt[cfl0.1]"]), float(s["eta_high_over_dt[cfl0.1]"])
    assert 0.4 < lo < hi < 0.5
    assert s["fallback[cfl0.1]"] == "0"


def test_guideline_command(tmp_path):
    rc = main(["guideline", "P=2", "eta=1e-3", "r=0.0128", "--out", str(tmp_path)])
    assert rc == EXIT_OK
    (key, val), = summary(tmp_path).items()
    assert float(val) == pytest.approx(1.5e-2, rel=0.03)


def test_simulate_command(tmp_path):
    rc = main(["simulate", "N=10", "T=0.25", "P=3", "eta=1e-3,1e-4", "dt=1e-5", "t_final=0.2",
               "--out", str(tmp_path)])
    assert rc == EXIT_OK
    errs = [float(v) for k, v in summary(tmp_path).items() if k.startswith("error")]
    assert len(errs) == 2 and errs[0] > errs[1]


# ---- exit codes

def test_exit_code_config(capsys):
    assert main(["semi", "P=-1"]) == EXIT_CONFIG
    assert "'P'" in capsys.readouterr().err


def test_exit_code_numeric(tmp_path, capsys):
    rc = main(["semi", "N=10", "Z=1", "P=3", "eta=1e-4", "nk=3", "k_hi=0.3",
               "--out", str(tmp_path)])
    assert rc == EXIT_NUMERIC
    assert "ambiguous primary" in capsys.readouterr().err


def test_exit_code_io(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["guideline", "--out", str(blocker / "sub")]) == EXIT_IO


def test_echo_of_effective_config(tmp_path, capsys):
    main(["guideline", "eta=1e-3", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert "[run]" in out and "command = guideline" in out and "eta = 1e-3" in out


def test_module_entry_point(tmp_path):
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "ibmfr", "guideline", "P=4", "eta=1e-3",
                           "r=0.05", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert float(summary(tmp_path)["eta_v_estimate[P4_eta0.001_r0.05]"]) == pytest.approx(0.125)

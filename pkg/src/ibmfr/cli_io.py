"""Command-line front end: INI configs, presets, and CSV/summary output.

    python3 -m ibmfr <command> [--config FILE] [key=value ...] [--out DIR] [--preset NAME]
"""
from __future__ import annotations

import argparse
import configparser
import io
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import fully_discrete as fd
from . import spectral as sp
from . import timedomain as td
from .fr_elements import FRConfig, P_MAX, gauss_nodes
from .ibm_assembly import MeshSpec, PenalizationSpec, build_mask

COMMANDS = ("semi", "nonmodal", "fully", "simulate", "sweep-eta-v", "critical-eta",
            "cfl-max", "critical-dt", "fit-scaling", "guideline")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _eta_v_item(s):
    s = s.strip()
    return "opt" if s == "opt" else float(s)


# key -> (parser for one item, list allowed, check, default)
SCHEMA = {
    "P": (int, True, lambda v: 0 <= v <= P_MAX, "3"),
    "N": (int, True, lambda v: v >= 1, "40"),
    "Z": (int, False, lambda v: v >= 0, "1"),
    "T": (float, False, lambda v: v > 0, "1.0"),
    "c": (float, False, lambda v: v != 0 and math.isfinite(v), "1.0"),
    "lambda_upwind": (float, False, lambda v: 0 <= v <= 1, "1.0"),
    "eta": (float, True, lambda v: v > 0, "inf"),
    "eta_v": (_eta_v_item, True, lambda v: v == "opt" or v >= 0, "0"),
    "u_s": (float, False, math.isfinite, "0"),
    "ldg_beta": (float, False, math.isfinite, "0.5"),
    "ldg_tau": (float, False, lambda v: v >= 0, "0.1"),
    "shift": (_bool, True, lambda v: True, "false"),
    "nk": (int, False, lambda v: v >= 2, "200"),
    "k_lo": (float, False, lambda v: 0 < v <= 0.01, "0.005"),
    "k_hi": (float, False, lambda v: v > 0, "3.141592653589793"),
    "dt": (float, False, lambda v: v > 0, "1e-5"),
    "cfl_fraction": (float, True, lambda v: v > 0, "0.1"),
    "t_final": (float, False, lambda v: v >= 0, "1.1"),
    "k0": (float, False, lambda v: v > 0, "0.3927"),
    "ic_form": (str, False, lambda v: v in ("sine", "exp"), "sine"),
    "stepper": (str, False, lambda v: v in ("propagator", "heun"), "propagator"),
    "dt_policy": (str, False, lambda v: v in ("fixed", "auto"), "auto"),
    "eta_v_lo": (float, False, lambda v: v > 0, "1e-3"),
    "eta_v_hi": (float, False, lambda v: v > 0, "1e3"),
    "per_decade": (int, False, lambda v: v >= 1, "8"),
    "r": (float, False, lambda v: 0 < v < 1, "0.025"),
    "plot": (_bool, False, lambda v: True, "false"),
}

PRESETS = {
    "fig2": ("semi", {"N": "10", "Z": "1", "P": "3", "eta": "1e-4", "shift": "true"}),
    "fig3": ("semi", {"N": "40", "Z": "1", "P": "3", "eta": "1e-3, 1e-4, 1e-5",
                      "shift": "true"}),
    "fig4": ("semi", {"N": "40", "Z": "1", "P": "1, 2, 3", "eta": "1e-4",
                      "shift": "true, false, true"}),
    "fig5": ("fully", {"N": "40", "Z": "1", "P": "3", "eta": "1e-4",
                       "cfl_fraction": "0.5, 0.7, 0.9", "shift": "true"}),
    "fig6-8": ("critical-eta", {"N": "40", "Z": "1", "P": "3",
                                "cfl_fraction": "0.1, 0.5, 0.7"}),
    "fig9": ("simulate", {"N": "40", "Z": "1", "P": "3", "eta": "1e-3, 1e-4, 1e-5",
                          "dt": "1e-5", "k0": "0.3927", "t_final": "1.1"}),
    "fig10-11": ("sweep-eta-v", {"N": "40", "Z": "1", "P": "3", "eta": "1e-3, 1e-4, 1e-5",
                                 "dt": "1e-5", "k0": "0.3142"}),
    "fig12": ("fit-scaling", {"N": "20, 40, 80", "Z": "1", "P": "3",
                              "eta": "1e-3, 1e-4, 1e-5", "dt": "1e-5", "k0": "0.3142"}),
}


@dataclass
class RunConfig:
    command: str
    params: dict
    raw: dict
    output_dir: str = "."
    preset: str | None = None
    deterministic: bool = field(default=True, init=False)

    def get(self, key):
        return self.params[key]

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp["run"] = {"command": self.command}
        cp["params"] = dict(sorted(self.raw.items()))
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _parse_value(key, text):
    if key not in SCHEMA:
        raise ConfigError(f"unknown key {key!r}")
    conv, many, check, _ = SCHEMA[key]
    items = [t for t in text.split(",")] if many else [text]
    out = []
    for it in items:
        try:
            v = conv(it.strip())
        except (TypeError, ValueError):
            raise ConfigError(f"key {key!r}: cannot parse {it.strip()!r} as {conv.__name__}")
        if not check(v):
            raise ConfigError(f"key {key!r}: value {it.strip()!r} violates its precondition")
        out.append(v)
    if many and len(out) == 0:
        raise ConfigError(f"key {key!r}: empty list")
    return out if many else out[0]


def parse_config(command=None, config_file=None, overrides=(), preset=None,
                 output_dir=".") -> RunConfig:
    """Merge defaults < preset < config file < key=value overrides and validate."""
    raw = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r} (have {', '.join(PRESETS)})")
        pcmd, pparams = PRESETS[preset]
        command = command or pcmd
        raw.update(pparams)
    if config_file is not None:
        if not os.path.exists(config_file):
            raise ConfigError(f"config file {config_file!r} not found")
        cp = configparser.ConfigParser()
        cp.optionxform = str
        try:
            cp.read(config_file)
        except configparser.Error as exc:
            raise ConfigError(f"config file {config_file!r}: {exc}")
        for sec in cp.sections():
            if sec not in ("run", "params"):
                raise ConfigError(f"unknown section [{sec}]")
        if cp.has_section("run"):
            for key, val in cp["run"].items():
                if key != "command":
                    raise ConfigError(f"unknown key {key!r} in [run]")
                command = command or val.strip()
        if cp.has_section("params"):
            raw.update(dict(cp["params"]))
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r} is not key=value")
        key, val = ov.split("=", 1)
        raw[key.strip()] = val.strip()
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r} (choose from {', '.join(COMMANDS)})")
    params = {}
    for key in raw:
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
    for key, (_, _, _, default) in SCHEMA.items():
        params[key] = _parse_value(key, raw.get(key, default))
    # cross-key checks
    Ns = params["N"]
    for N in Ns:
        if params["Z"] > N // 2:
            raise ConfigError(f"key 'Z': solid must fit in (0, T], need Z <= N/2 "
                              f"(Z={params['Z']}, N={N})")
        if params["Z"] > 0 and N % 2:
            raise ConfigError(f"key 'N': must be even when Z > 0 (N={N})")
    if len(params["shift"]) not in (1, len(params["P"])):
        raise ConfigError("key 'shift': give one value or one per entry of P")
    if params["k_hi"] <= params["k_lo"]:
        raise ConfigError("key 'k_hi': must exceed k_lo")
    if params["eta_v_hi"] <= params["eta_v_lo"]:
        raise ConfigError("key 'eta_v_hi': must exceed eta_v_lo")
    return RunConfig(command=command, params=params, raw=dict(raw),
                     output_dir=output_dir, preset=preset)


# ---------------------------------------------------------------- output

@dataclass
class CurveFile:
    name: str
    columns: list
    units: list
    rows: np.ndarray


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % v


def _write_curve(path, cf: CurveFile, provenance: str):
    rows = np.atleast_2d(cf.rows)
    if rows.size and rows.shape[1] != len(cf.columns):
        raise ValueError(f"{cf.name}: {rows.shape[1]} columns for {len(cf.columns)} names")
    with open(path, "w", newline="\n") as fh:
        for line in provenance.splitlines():
            fh.write(f"# {line}\n")
        fh.write("# units: " + ",".join(cf.units) + "\n")
        fh.write(",".join(cf.columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_curve(path):
    """(header comment lines, column names, data array) of an emitted curve file."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    header = [ln[2:] for ln in lines if ln.startswith("# ")]
    body = [ln for ln in lines if not ln.startswith("#")]
    cols = body[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in body[1:]])
    return header, cols, data.reshape(-1, len(cols))


_PLOT_SCRIPT = '''"""Quick look at the curve files in this directory (needs matplotlib)."""
import glob
import os

import matplotlib.pyplot as plt
import numpy as np

here = os.path.dirname(os.path.abspath(__file__))
for path in sorted(glob.glob(os.path.join(here, "*.csv"))):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    cols = lines[0].strip().split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    fig, ax = plt.subplots()
    for j in range(1, len(cols)):
        ax.plot(data[:, 0], data[:, j], label=cols[j])
    ax.set_xlabel(cols[0])
    ax.set_title(os.path.basename(path))
    ax.legend()
    fig.savefig(path[:-4] + ".png", dpi=120)
'''


def emit_curves(results, cfg: RunConfig, output_dir=None):
    """Write curve files, summary.txt and (optionally) plot_curves.py; return the paths."""
    output_dir = output_dir or cfg.output_dir
    curves, summary = results
    os.makedirs(output_dir, exist_ok=True)
    if not os.access(output_dir, os.W_OK):
        raise PermissionError(f"output directory {output_dir!r} is not writable")
    provenance = cfg.to_ini()
    paths = []
    for cf in curves:
        path = os.path.join(output_dir, cf.name + ".csv")
        _write_curve(path, cf, provenance)
        paths.append(path)
    spath = os.path.join(output_dir, "summary.txt")
    with open(spath, "w", newline="\n") as fh:
        for line in provenance.splitlines():
            fh.write(f"# {line}\n")
        for key, val in summary:
            fh.write(f"{key} = {_fmt(val) if not isinstance(val, str) else val}\n")
    paths.append(spath)
    if cfg.get("plot"):
        ppath = os.path.join(output_dir, "plot_curves.py")
        with open(ppath, "w") as fh:
            fh.write(_PLOT_SCRIPT)
        paths.append(ppath)
    return paths


# ---------------------------------------------------------------- commands

def _tag(**kw):
    return "_".join(f"{k}{v:g}" if not isinstance(v, str) else f"{k}{v}" for k, v in kw.items())


def _setup(cfg: RunConfig, P=None, N=None):
    p = cfg.params
    P = p["P"][0] if P is None else P
    N = p["N"][0] if N is None else N
    fr = FRConfig(P, c=p["c"], lambda_upwind=p["lambda_upwind"])
    mesh = MeshSpec(p["T"], N)
    mask = build_mask(mesh, p["Z"], gauss_nodes(P))
    return fr, mesh, mask


def _pen(cfg, eta, eta_v=0.0):
    p = cfg.params
    return PenalizationSpec(eta=eta, eta_v=eta_v, u_s=p["u_s"], ldg_beta=p["ldg_beta"],
                            ldg_tau=p["ldg_tau"])


def _kgrid(cfg):
    p = cfg.params
    return sp.default_kgrid(p["nk"], p["k_lo"], p["k_hi"])


def _shift(cfg, P):
    flags = cfg.get("shift")
    return flags[0] if len(flags) == 1 else flags[cfg.get("P").index(P)]


def _numeric_eta_v(cfg):
    vals = [v for v in cfg.get("eta_v") if v != "opt"]
    return vals or [0.0]


SEMI_COLS = ["k_norm", "khat", "real_kstar", "imag_kstar", "corrected_imag", "label"]
SEMI_UNITS = ["k*h/(P+1)", "k*h/(P+1)", "h/(P+1)", "h/(P+1)", "h/(P+1)", "0=primary"]


def _semi_rows(curve):
    n = len(curve.kgrid)
    return np.column_stack([curve.kgrid, curve.khat, curve.primary_real, curve.primary_imag,
                            curve.corrected_imag, np.zeros(n)])


def run_semi(cfg):
    curves, summary = [], []
    kg = _kgrid(cfg)
    for P in cfg.get("P"):
        fr, mesh, mask = _setup(cfg, P=P)
        ref_r, ref_i = sp.reference_curve(fr, mesh.h, kg)
        n = len(kg)
        curves.append(CurveFile(_tag(semi_reference_P=P), SEMI_COLS, SEMI_UNITS,
                                np.column_stack([kg, kg, ref_r, ref_i, ref_i, np.zeros(n)])))
        for eta in cfg.get("eta"):
            for eta_v in _numeric_eta_v(cfg):
                c = sp.sweep_semi_discrete(fr, mesh, mask, _pen(cfg, eta, eta_v), kg,
                                           shift=_shift(cfg, fr.P))
                tag = _tag(semi_P=P, eta=eta, eta_v=eta_v)
                curves.append(CurveFile(tag, SEMI_COLS, SEMI_UNITS, _semi_rows(c)))
                summary += [(f"gamma_ibm[{tag}]", c.gamma_ibm),
                            (f"solid_branches[{tag}]", len(c.classification.solid)),
                            (f"max_residual_ratio[{tag}]", c.max_residual_ratio)]
    return curves, summary


def run_nonmodal(cfg):
    curves, summary = [], []
    kg = _kgrid(cfg)
    for P in cfg.get("P"):
        fr, mesh, mask = _setup(cfg, P=P)
        for eta in cfg.get("eta"):
            for eta_v in _numeric_eta_v(cfg):
                nm = sp.nonmodal_sweep(fr, mesh, mask, _pen(cfg, eta, eta_v), kg)
                tag = _tag(nonmodal_P=P, eta=eta, eta_v=eta_v)
                curves.append(CurveFile(tag, ["k_norm", "omega_tilde", "omega_tilde_corrected"],
                                        ["k*h/(P+1)", "c(P+1)/h", "c(P+1)/h"],
                                        np.column_stack([nm.kgrid, nm.omega_tilde,
                                                         nm.omega_tilde_corrected])))
                summary.append((f"omega_tilde_k0[{tag}]", nm.omega_tilde_k0))
    return curves, summary


def run_fully(cfg):
    curves, summary = [], []
    kg = _kgrid(cfg)
    fr, mesh, mask = _setup(cfg)
    cmax = fd.find_cfl_max(fr, mesh)
    summary.append(("cfl_max", cmax))
    cols = ["k_norm", "real_kstar", "real_kstar_unwrapped", "imag_kstar", "corrected_imag",
            "stable"]
    units = ["k*h/(P+1)", "h/(P+1)", "h/(P+1)", "h/(P+1)", "h/(P+1)", "bool"]
    for frac in cfg.get("cfl_fraction"):
        dt = fd.dt_from_cfl(frac * cmax, fr.c, fr.P, mesh.h)
        for eta in cfg.get("eta"):
            for eta_v in _numeric_eta_v(cfg):
                c = fd.sweep_fully_discrete(fr, mesh, mask, _pen(cfg, eta, eta_v), dt, kg,
                                            shift=_shift(cfg, fr.P))
                tag = _tag(fully_cfl=frac, eta=eta, eta_v=eta_v)
                curves.append(CurveFile(tag, cols, units, np.column_stack([
                    c.kgrid, c.primary_real, c.primary_real_unwrapped, c.primary_imag,
                    c.corrected_imag, c.stable])))
                summary += [(f"dt[{tag}]", dt), (f"gamma_ibm[{tag}]", c.gamma_ibm),
                            (f"solid_max_imag[{tag}]",
                             c.solid_max_imag if c.solid_max_imag is not None else "none")]
    return curves, summary


def _sim_base(cfg, fr, mesh, mask, eta, eta_v=0.0, dt=None):
    p = cfg.params
    return td.SimulationSpec(fr, mesh, mask, _pen(cfg, eta, eta_v), dt=dt or p["dt"],
                             k0=td.snap_wavenumber(p["k0"], mesh, fr.P), t_final=p["t_final"],
                             ic_form=td.ICForm(p["ic_form"]), stepper=p["stepper"])


def run_simulate(cfg):
    curves, summary = [], []
    fr, mesh, mask = _setup(cfg)
    x = mesh.coordinates(gauss_nodes(fr.P))
    for eta in cfg.get("eta"):
        for eta_v in _numeric_eta_v(cfg):
            res = td.simulate(_sim_base(cfg, fr, mesh, mask, eta, eta_v))
            tag = _tag(simulate_eta=eta, eta_v=eta_v)
            u = res.final_state
            cols, units = ["x", "u"], ["length", "1"]
            rows = np.column_stack([x, u.real])
            if np.iscomplexobj(u):
                cols, units = cols + ["u_imag"], units + ["1"]
                rows = np.column_stack([rows, u.imag])
            curves.append(CurveFile(tag, cols, units, rows))
            summary += [(f"error[{tag}]", res.error), (f"stable[{tag}]", res.stable),
                        (f"blowup_time[{tag}]",
                         res.blowup_time if res.blowup_time is not None else "none")]
    return curves, summary


def _optimum(cfg, fr, mesh, mask, eta):
    p = cfg.params
    grid = td.log_grid(p["eta_v_lo"], p["eta_v_hi"], p["per_decade"])
    return td.find_optimal_eta_v(_sim_base(cfg, fr, mesh, mask, eta), grid, p["dt_policy"])


def run_sweep_eta_v(cfg):
    curves, summary = [], []
    fr, mesh, mask = _setup(cfg)
    for eta in cfg.get("eta"):
        o = _optimum(cfg, fr, mesh, mask, eta)
        tag = _tag(sweep_eta=eta)
        curves.append(CurveFile(tag, ["eta_v", "error", "stable"], ["length^2/time", "1", "bool"],
                                np.column_stack([o.grid, o.grid_error, o.grid_stable])))
        summary += [(f"eta_v_opt[{tag}]", o.eta_v_opt), (f"error_opt[{tag}]", o.error_opt),
                    (f"error_eta_v0[{tag}]", o.error_zero), (f"interior_minimum[{tag}]", o.interior)]
    return curves, summary


def run_critical_eta(cfg):
    summary = []
    fr, mesh, mask = _setup(cfg)
    cmax = fd.find_cfl_max(fr, mesh)
    summary.append(("cfl_max", cmax))
    rows = []
    for frac in cfg.get("cfl_fraction"):
        dt = fd.dt_from_cfl(frac * cmax, fr.c, fr.P, mesh.h)
        ce = fd.find_critical_eta(fr, mesh, mask, dt)
        tag = _tag(cfl=frac)
        summary += [(f"dt[{tag}]", dt), (f"eta_critical_low[{tag}]", ce.eta_low),
                    (f"eta_critical_high[{tag}]", ce.eta_high),
                    (f"eta_low_over_dt[{tag}]", ce.eta_low / dt),
                    (f"eta_high_over_dt[{tag}]", ce.eta_high / dt),
                    (f"fallback[{tag}]", ce.fallback)]
        rows += [(frac, e / dt, d) for e, d in ce.history]
    curves = [CurveFile("critical_eta_history", ["cfl_fraction", "eta_over_dt", "solid_imag"],
                        ["1", "1", "h/(P+1)"], np.array(rows))]
    return curves, summary


def run_cfl_max(cfg):
    fr, mesh, _ = _setup(cfg)
    cmax = fd.find_cfl_max(fr, mesh)
    summary = [("cfl_max", cmax)]
    for frac in cfg.get("cfl_fraction"):
        summary.append((f"dt[{_tag(cfl=frac)}]", fd.dt_from_cfl(frac * cmax, fr.c, fr.P, mesh.h)))
    return [], summary


def run_critical_dt(cfg):
    summary = []
    fr, mesh, mask = _setup(cfg)
    k0 = td.snap_wavenumber(cfg.get("k0"), mesh, fr.P)
    for eta in cfg.get("eta"):
        for ev in cfg.get("eta_v"):
            eta_v = _optimum(cfg, fr, mesh, mask, eta).eta_v_opt if ev == "opt" else ev
            cd = td.find_critical_dt(fr, mesh, mask, _pen(cfg, eta, eta_v), k0,
                                     t_final=cfg.get("t_final"))
            tag = _tag(eta=eta, eta_v=eta_v)
            summary += [(f"dt_critical[{tag}]", cd.dt), (f"dt_spectral[{tag}]", cd.dt_spectral),
                        (f"mismatch[{tag}]", cd.mismatch)]
    return [], summary


def run_fit_scaling(cfg):
    cases = []
    for P in cfg.get("P"):
        for N in cfg.get("N"):
            fr, mesh, mask = _setup(cfg, P=P, N=N)
            for eta in cfg.get("eta"):
                o = _optimum(cfg, fr, mesh, mask, eta)
                cases.append((mask.r, P, eta, o.eta_v_opt))
    fit = td.fit_scaling(cases)
    curves = [CurveFile("scaling_cases", ["r", "P", "eta", "eta_v_opt", "C_case"],
                        ["1", "1", "time", "length^2/time", "1"],
                        np.array([(r, P, e, v, e * v / r ** 2) for r, P, e, v in cases]))]
    summary = []
    for P in fit.C:
        summary += [(f"C[P{P}]", fit.C[P]), (f"residual[P{P}]", fit.residual[P])]
    return curves, summary


def run_guideline(cfg):
    summary = []
    for P in cfg.get("P"):
        for eta in cfg.get("eta"):
            summary.append((f"eta_v_estimate[{_tag(P=P, eta=eta, r=cfg.get('r'))}]",
                            td.eta_v_guideline(eta, cfg.get("r"), P)))
    return [], summary


RUNNERS = {
    "semi": run_semi, "nonmodal": run_nonmodal, "fully": run_fully, "simulate": run_simulate,
    "sweep-eta-v": run_sweep_eta_v, "critical-eta": run_critical_eta, "cfl-max": run_cfl_max,
    "critical-dt": run_critical_dt, "fit-scaling": run_fit_scaling, "guideline": run_guideline,
}

NUMERIC_ERRORS = (sp.EigenSolverError, sp.ClassificationError, fd.BracketError,
                  fd.MonotonicityError, ArithmeticError)


def run(cfg: RunConfig):
    return RUNNERS[cfg.command](cfg)


def build_parser():
    ap = argparse.ArgumentParser(prog="ibmfr", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", help="one of: " + ", ".join(COMMANDS))
    ap.add_argument("overrides", nargs="*", metavar="key=value")
    ap.add_argument("--config", help="INI file with [run] and [params] sections")
    ap.add_argument("--preset", help="named case: " + ", ".join(PRESETS))
    ap.add_argument("--out", default=".", help="output directory")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    command, overrides = args.command, list(args.overrides)
    if command is not None and "=" in command:
        overrides.insert(0, command)
        command = None
    try:
        cfg = parse_config(command, args.config, overrides, args.preset, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(cfg.to_ini())
    try:
        results = run(cfg)
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        paths = emit_curves(results, cfg)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for p in paths:
        print(p)
    return EXIT_OK

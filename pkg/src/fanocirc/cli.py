"""Command-line entry point: validated configs, study subcommands, reports.

Each subcommand writes a CSV table, a JSON summary embedding the fully
resolved configuration, and (unless --no-plot) a PNG figure, all under
out_dir.  Exit codes: 0 success, 1 configuration/validation error,
2 solver failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import __version__
from .device import (
    ALL_SECTORS,
    BiasPoint,
    DeviceParams,
    QuasiparticleSector,
    device_eigensystem,
    junction_spread,
    transition_spectrum,
)
from .network import waveguide_smatrix_limit
from .slh import compose_circulator
from .dynamics import (
    build_liouvillian,
    master_action_direct,
    smatrix_adiabatic,
    smatrix_full,
    steady_state,
)
from .analysis import (
    _db_loss,
    circulation_fidelities,
    fidelity_vs_spread_sweep,
    optimize_bias,
    performance_db,
    power_sweep,
)


class ConfigError(ValueError):
    """Raised for unparseable, unknown, or out-of-range configuration."""


# key -> (kind, default); _REQUIRED marks keys that must be present
_REQUIRED = object()
_KEY_SPECS = {
    "e_c_sigma_ghz": ("float", _REQUIRED),
    "e_j_ghz": ("vec3", _REQUIRED),
    "c_x_ff": ("float", _REQUIRED),
    "gamma_ghz": ("float", _REQUIRED),
    "z_wg_ohm": ("float", 50.0),
    "n_cut": ("int", 7),
    "n_levels": ("int", 5),
    "phi_x": ("float", 0.0),
    "n_g": ("vec3", [0.0, 0.0, 0.0]),
    "sector": ("int", 0),
    "f_min_ghz": ("float", 7.0),
    "f_max_ghz": ("float", 7.5),
    "f_step_mhz": ("float", 2.0),
    "f_drive_ghz": ("float", None),
    "power_dbm": ("floatlist", [float(p) for p in range(-160, -99, 3)]),
    "opt_starts": ("int", 8),
    "seed": ("int", 1234),
    "out_dir": ("str", "."),
    "phi_steps": ("int", 201),
    "direction": ("str", "auto"),
    "method": ("str", "adiabatic"),
    "photon_energy": ("str", "h"),
    "delta_grid": ("floatlist", [0.0, 0.01, 0.02, 0.03, 0.04, 0.05]),
    "c_x_list_ff": ("floatlist", [0.0, 75.0, 150.0]),
}


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration plus the constructed domain objects."""

    params: DeviceParams
    bias: BiasPoint
    sector: QuasiparticleSector
    resolved: dict

    def __getattr__(self, key):
        try:
            return self.resolved[key]
        except KeyError:
            raise AttributeError(key) from None

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.resolved, sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def frequency_grid(self) -> np.ndarray:
        step = self.resolved["f_step_mhz"] * 1e-3
        lo = self.resolved["f_min_ghz"]
        hi = self.resolved["f_max_ghz"]
        n = int(round((hi - lo) / step)) + 1
        return lo + step * np.arange(n)


def _parse_scalar(key: str, raw: str, kind: str):
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
    except ValueError:
        raise ConfigError(f"config key '{key}': cannot parse {raw!r} "
                          f"as {kind}") from None
    return raw


def _parse_value(key: str, raw: str):
    kind, _ = _KEY_SPECS[key]
    raw = raw.strip()
    if not raw:
        raise ConfigError(f"config key '{key}' has an empty value")
    if kind in ("float", "int", "str"):
        return _parse_scalar(key, raw, kind)
    # list kinds; values use JSON syntax, e.g. [14.73, 15.15, 15.22]
    try:
        val = json.loads(raw)
    except json.JSONDecodeError:
        try:
            val = float(raw)
        except ValueError:
            raise ConfigError(f"config key '{key}': cannot parse {raw!r} "
                              f"as a number list") from None
    if isinstance(val, (int, float)):
        val = [float(val)] * (3 if kind == "vec3" else 1)
    if (not isinstance(val, list)
            or not all(isinstance(v, (int, float)) for v in val)):
        raise ConfigError(f"config key '{key}': expected a number list, "
                          f"got {raw!r}")
    val = [float(v) for v in val]
    if kind == "vec3" and len(val) != 3:
        raise ConfigError(f"config key '{key}': expected 3 entries, "
                          f"got {len(val)}")
    return val


def _read_flat_keys(path: str) -> dict:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                   interpolation=None, strict=True)
    try:
        with open(path) as fh:
            cp.read_string("[__top__]\n" + fh.read(), source=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config file: {exc}") from None
    flat: dict[str, str] = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            if key in flat:
                raise ConfigError(f"duplicate config key '{key}' "
                                  f"(section [{section}])")
            flat[key] = value
    return flat


def load_config(path: str, overrides=()) -> RunConfig:
    """Parse and validate a flat key-value config file.

    overrides is an iterable of 'key=value' strings (command-line --set)
    applied after the file.  Unknown keys and invariant violations raise
    ConfigError with the offending name.
    """
    flat = _read_flat_keys(path)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not of the form "
                              f"key=value")
        flat[key.strip().lower()] = value
    unknown = sorted(set(flat) - set(_KEY_SPECS))
    if unknown:
        raise ConfigError(
            f"unknown config key(s) {', '.join(unknown)}; valid keys: "
            + ", ".join(sorted(_KEY_SPECS)))

    resolved = {k: default for k, (_, default) in _KEY_SPECS.items()}
    for key, raw in flat.items():
        resolved[key] = _parse_value(key, raw)
    missing = sorted(k for k, v in resolved.items() if v is _REQUIRED)
    if missing:
        raise ConfigError("missing required config key(s): "
                          + ", ".join(missing))

    try:
        params = DeviceParams(
            E_C_sigma=resolved["e_c_sigma_ghz"],
            E_J=tuple(resolved["e_j_ghz"]),
            C_X=resolved["c_x_ff"],
            Z_wg=resolved["z_wg_ohm"],
            Gamma=resolved["gamma_ghz"],
            n_cut=resolved["n_cut"],
            n_levels=resolved["n_levels"],
        )
        bias = BiasPoint(phi_x=resolved["phi_x"],
                         n_g=tuple(resolved["n_g"]))
        sector = QuasiparticleSector(resolved["sector"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    if resolved["f_min_ghz"] >= resolved["f_max_ghz"]:
        raise ConfigError("f_min_ghz must be below f_max_ghz")
    if resolved["f_step_mhz"] <= 0:
        raise ConfigError("f_step_mhz must be positive")
    if resolved["f_drive_ghz"] is not None and resolved["f_drive_ghz"] <= 0:
        raise ConfigError("f_drive_ghz must be positive")
    if resolved["opt_starts"] < 1:
        raise ConfigError("opt_starts must be at least 1")
    if resolved["phi_steps"] < 2:
        raise ConfigError("phi_steps must be at least 2")
    if resolved["direction"] not in ("auto", "cw", "ccw"):
        raise ConfigError("direction must be one of auto, cw, ccw")
    if resolved["method"] not in ("adiabatic", "full"):
        raise ConfigError("method must be 'adiabatic' or 'full'")
    if resolved["photon_energy"] not in ("hbar", "h"):
        raise ConfigError("photon_energy must be 'hbar' or 'h'")
    if any(d < 0.0 or d > 0.05 for d in resolved["delta_grid"]):
        raise ConfigError("delta_grid entries must lie in [0, 0.05]")
    return RunConfig(params=params, bias=bias, sector=sector,
                     resolved=resolved)


# ---------------------------------------------------------------------------
# output helpers

def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.16e}"
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_summary(path, command: str, cfg: RunConfig, results: dict,
                   outputs: list):
    record = {
        "command": command,
        "version": __version__,
        "config_hash": cfg.config_hash,
        "seed": cfg.resolved["seed"],
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": cfg.resolved,
        "results": results,
        "outputs": outputs,
    }
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.resolved["out_dir"], exist_ok=True)
    return os.path.join(cfg.resolved["out_dir"], name)


# ---------------------------------------------------------------------------
# subcommands

def run_spectrum(cfg: RunConfig, plot: bool) -> dict:
    phi = np.linspace(0.0, 2.0 * math.pi, cfg.resolved["phi_steps"])
    rows = transition_spectrum(cfg.params, phi, ALL_SECTORS,
                               n_transitions=cfg.params.n_levels - 1,
                               n_g=cfg.bias.n_g)
    n_tr = len(rows[0]) - 2
    header = ["phi_x", "sector"] + [f"omega_{k + 1}" for k in range(n_tr)]
    csv_path = _out(cfg, "spectrum.csv")
    _write_csv(csv_path, header, rows)
    outputs = [csv_path]
    if plot:
        from . import plots

        arr = np.array(rows)
        png = _out(cfg, "spectrum.png")
        plots.spectrum_png(png, arr[:, 0], arr[:, 1].astype(int), arr[:, 2:])
        outputs.append(png)
    results = {"n_rows": len(rows), "n_transitions": n_tr,
               "junction_spread": junction_spread(cfg.params.E_J)}
    _write_summary(_out(cfg, "spectrum.json"), "spectrum", cfg, results,
                   outputs)
    return results


def _smatrix_at(cfg: RunConfig, f: float):
    if cfg.resolved["method"] == "full":
        return smatrix_full(cfg.params, cfg.bias, cfg.sector, f)
    return smatrix_adiabatic(cfg.params, cfg.bias, cfg.sector, f)


def run_smatrix(cfg: RunConfig, plot: bool) -> dict:
    grid = cfg.frequency_grid()
    mats = [np.asarray(_smatrix_at(cfg, float(f)).S) for f in grid]
    header = (["f_ghz"]
              + [f"abs_s{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
              + [f"arg_s{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)])
    rows = [(float(f), *np.abs(S).ravel(), *np.angle(S).ravel())
            for f, S in zip(grid, mats)]
    csv_path = _out(cfg, "smatrix.csv")
    _write_csv(csv_path, header, rows)
    outputs = [csv_path]
    if plot:
        from . import plots

        png = _out(cfg, "smatrix.png")
        plots.smatrix_png(png, grid, np.abs(np.array(mats)))
        outputs.append(png)
    results = {"n_points": len(grid), "method": cfg.resolved["method"]}
    _write_summary(_out(cfg, "smatrix.json"), "smatrix", cfg, results,
                   outputs)
    return results


def run_fidelity(cfg: RunConfig, plot: bool) -> dict:
    grid = cfg.frequency_grid()
    sweep = [(float(f), circulation_fidelities(_smatrix_at(cfg, float(f))))
             for f in grid]
    rows = [(f, rep.F_cw, rep.F_ccw, rep.R_avg, _db_loss(rep.F_cw),
             _db_loss(rep.F_ccw), -_db_loss(rep.R_avg))
            for f, rep in sweep]
    header = ["f_ghz", "F_cw", "F_ccw", "R_avg", "IL_db", "IS_db", "R_db"]
    csv_path = _out(cfg, "fidelity.csv")
    _write_csv(csv_path, header, rows)
    outputs = [csv_path]
    center = max(range(len(sweep)), key=lambda i: sweep[i][1].F_cw)
    perf = performance_db(sweep[center][1], sweep)
    results = {
        "f_center_ghz": sweep[center][0],
        "F_cw": sweep[center][1].F_cw,
        "F_ccw": sweep[center][1].F_ccw,
        "R_avg": sweep[center][1].R_avg,
        "IL_db": perf.IL,
        "IS_db": perf.IS,
        "R_db": perf.R,
        "bandwidth_IL_1dB_mhz": perf.bandwidth_IL_1dB,
        "bandwidth_IS_14dB_mhz": perf.bandwidth_IS_14dB,
        "method": cfg.resolved["method"],
    }
    if plot:
        from . import plots

        png = _out(cfg, "fidelity.png")
        arr = np.array([r[:4] for r in rows])
        plots.fidelity_png(png, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])
        outputs.append(png)
    _write_summary(_out(cfg, "fidelity.json"), "fidelity", cfg, results,
                   outputs)
    return results


def run_optimize(cfg: RunConfig, plot: bool) -> dict:
    direction = cfg.resolved["direction"]
    if direction == "auto":
        direction = "cw"
    opt = optimize_bias(cfg.params, cfg.sector, direction,
                        budget=cfg.resolved["opt_starts"],
                        seed=cfg.resolved["seed"])
    header = ["start", "phi_x_0", "n_g1_0", "n_g2_0", "n_g3_0", "det_0_ghz",
              "F_0", "phi_x", "n_g1", "n_g2", "n_g3", "det_ghz", "F",
              "is_best"]
    rows = [(k, *x0, f0, *xb, fb, int(k == opt.best_start))
            for k, (x0, f0, xb, fb) in enumerate(opt.starts)]
    csv_path = _out(cfg, "optimize.csv")
    _write_csv(csv_path, header, rows)
    outputs = [csv_path]
    results = {
        "direction": direction,
        "F": opt.F,
        "F_full_master_equation": opt.F_full,
        "phi_x": opt.bias.phi_x,
        "n_g": list(opt.bias.n_g),
        "omega_d_ghz": opt.omega_d,
        "converged": opt.converged,
        "n_evaluations": opt.n_evaluations,
        "best_start": opt.best_start,
    }
    if plot:
        from . import plots

        png = _out(cfg, "optimize.png")
        plots.optimize_png(png, np.array([r[6] for r in rows]),
                           np.array([r[12] for r in rows]), opt.best_start)
        outputs.append(png)
    _write_summary(_out(cfg, "optimize.json"), "optimize", cfg, results,
                   outputs)
    return results


def run_spread_sweep(cfg: RunConfig, plot: bool) -> dict:
    table = fidelity_vs_spread_sweep(
        cfg.params, cfg.resolved["delta_grid"], cfg.resolved["c_x_list_ff"],
        budget=cfg.resolved["opt_starts"], seed=cfg.resolved["seed"])
    header = ["delta", "c_x_ff", "F_opt", "phi_x_opt", "ng1_opt", "ng2_opt",
              "f_opt_ghz"]
    rows = [(r.delta, r.C_X, r.F, r.phi_x, r.n_g1, r.n_g2, r.omega_d)
            for r in table]
    csv_path = _out(cfg, "spread.csv")
    _write_csv(csv_path, header, rows)
    outputs = [csv_path]
    results = {"cells": [
        {"delta": r.delta, "c_x_ff": r.C_X, "F": r.F, "phi_x": r.phi_x,
         "n_g": [r.n_g1, r.n_g2, r.n_g3], "omega_d_ghz": r.omega_d,
         "converged": r.converged}
        for r in table]}
    if plot:
        from . import plots

        png = _out(cfg, "spread.png")
        plots.spread_png(png, np.array([r.delta for r in table]),
                         np.array([r.C_X for r in table]),
                         np.array([r.F for r in table]))
        outputs.append(png)
    _write_summary(_out(cfg, "spread.json"), "spread-sweep", cfg, results,
                   outputs)
    return results


def run_power_sweep(cfg: RunConfig, plot: bool) -> dict:
    f_drive = cfg.resolved["f_drive_ghz"]
    if f_drive is None:
        es = device_eigensystem(cfg.params, cfg.bias, cfg.sector)
        f_drive = float(es.omega_k[1])
    direction = cfg.resolved["direction"]
    rep = power_sweep(cfg.params, cfg.bias, cfg.sector, f_drive,
                      cfg.resolved["power_dbm"],
                      direction=None if direction == "auto" else direction,
                      photon_energy=cfg.resolved["photon_energy"])
    header = ["p_dbm", "F", "F_db_drop"]
    rows = list(zip([float(p) for p in rep.power_dbm],
                    [float(v) for v in rep.F],
                    [float(v) for v in rep.F_db_drop]))
    csv_path = _out(cfg, "power.csv")
    _write_csv(csv_path, header, rows)
    outputs = [csv_path]
    results = {
        "f_drive_ghz": f_drive,
        "direction": rep.direction,
        "P_3dB_dbm": rep.P_3dB,
        "P_sat_dbm": rep.P_sat,
        "plateau_F": rep.plateau_F,
        "photon_energy": cfg.resolved["photon_energy"],
    }
    if plot:
        from . import plots

        png = _out(cfg, "power.png")
        plots.power_png(png, rep.power_dbm, rep.F, rep.P_3dB)
        outputs.append(png)
    _write_summary(_out(cfg, "power.json"), "power-sweep", cfg, results,
                   outputs)
    return results


# ---------------------------------------------------------------------------
# selftest

def _selftest_checks():
    """Fast structural battery; each check returns (ok, detail)."""
    params = DeviceParams(E_C_sigma=3.09, E_J=(14.73, 15.15, 15.22),
                          C_X=76.0, Gamma=0.27, n_cut=7, n_levels=4)
    bias = BiasPoint(phi_x=2.7, n_g=(0.1, 0.4, 0.0))
    sector = QuasiparticleSector(0)

    def a_unitarity():
        rng = np.random.default_rng(7)
        worst = 0.0
        for z in rng.uniform(0.0, 1.0, 20):
            wg = waveguide_smatrix_limit(float(z))
            A = np.block([[wg.A11, wg.A12], [wg.A21, wg.A22]])
            worst = max(worst, float(np.max(np.abs(A @ A.conj().T
                                                   - np.eye(6)))))
        return worst <= 1e-12, f"max |A A^dag - 1| = {worst:.2e}"

    def cx_zero():
        from dataclasses import replace

        p0 = replace(params, C_X=0.0)
        sm = smatrix_adiabatic(p0, bias, sector, 7.3)
        es = device_eigensystem(p0, bias, sector)
        wg = waveguide_smatrix_limit(0.0)
        from .device import coupling_operators
        from .dynamics import rotating_hamiltonian

        cs = compose_circulator(wg, coupling_operators(es, p0.Gamma),
                                rotating_hamiltonian(es, 7.3))
        dev = max(float(np.max(np.abs(cs.S_wl - np.eye(3)))),
                  float(np.max(np.abs(cs.H_s))))
        ok = dev <= 1e-12 and np.all(np.isfinite(sm.S))
        return ok, f"direct path reduction dev = {dev:.2e}"

    def reciprocity():
        b0 = BiasPoint(phi_x=0.0, n_g=(0.2, 0.6, 0.0))
        S = smatrix_full(params, b0, sector, 7.3).S
        dev = float(np.max(np.abs(S - S.T)))
        return dev <= 1e-6, f"max |S - S^T| at zero flux = {dev:.2e}"

    def steady():
        es = device_eigensystem(params, bias, sector)
        from .device import coupling_operators
        from .dynamics import rotating_hamiltonian

        wg = waveguide_smatrix_limit(0.35)
        cs = compose_circulator(wg, coupling_operators(es, params.Gamma),
                                rotating_hamiltonian(es, 7.3),
                                alpha=(3e-3, 0.0, 0.0))
        ss = steady_state(build_liouvillian(cs, 7.3))
        tr = abs(float(np.trace(ss.rho).real) - 1.0)
        lam = float(np.linalg.eigvalsh(ss.rho).min())
        ok = tr <= 1e-10 and lam >= -1e-8
        return ok, f"|tr-1| = {tr:.2e}, min eig = {lam:.2e}"

    def passivity():
        S = smatrix_full(params, bias, sector, 7.3).S
        smax = float(np.linalg.svd(S, compute_uv=False)[0])
        return smax <= 1.0 + 1e-3, f"max singular value = {smax:.6f}"

    def db_identity():
        rng = np.random.default_rng(11)
        for _ in range(20):
            S = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            rep = circulation_fidelities(0.3 * S)
            perf = performance_db(rep)
            if perf.IL != -20.0 * math.log10(rep.F_cw):
                return False, "IL identity broken"
            if perf.R != 20.0 * math.log10(rep.R_avg):
                return False, "R identity broken"
        return True, "exact on 20 random matrices"

    def liouvillian_direct():
        es = device_eigensystem(params, bias, sector)
        from .device import coupling_operators
        from .dynamics import rotating_hamiltonian

        wg = waveguide_smatrix_limit(0.35)
        cs = compose_circulator(wg, coupling_operators(es, params.Gamma),
                                rotating_hamiltonian(es, 7.3),
                                alpha=(3e-3, 0.0, 0.0))
        liou = build_liouvillian(cs, 7.3)
        rng = np.random.default_rng(3)
        d = cs.dim
        worst = 0.0
        for _ in range(5):
            M = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            rho = M @ M.conj().T
            rho /= np.trace(rho)
            lhs = (liou.matrix @ rho.reshape(-1, order="F")).reshape(
                (d, d), order="F")
            rhs = master_action_direct(cs, rho)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst <= 1e-10, f"max action deviation = {worst:.2e}"

    return [
        ("waveguide_unitarity", a_unitarity),
        ("shunt_free_reduction", cx_zero),
        ("zero_flux_reciprocity", reciprocity),
        ("steady_state_trace_positivity", steady),
        ("weak_drive_passivity", passivity),
        ("db_identities", db_identity),
        ("liouvillian_vs_direct_action", liouvillian_direct),
    ]


def run_selftest(cfg: RunConfig | None, plot: bool) -> int:
    checks = _selftest_checks()
    rows = []
    n_fail = 0
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        n_fail += 0 if ok else 1
        rows.append((name, int(ok), detail))
        print(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
    print(f"selftest: {len(rows) - n_fail} passed, {n_fail} failed")
    if cfg is not None:
        csv_path = _out(cfg, "selftest.csv")
        _write_csv(csv_path, ["check", "passed", "detail"], rows)
        _write_summary(_out(cfg, "selftest.json"), "selftest", cfg,
                       {"passed": len(rows) - n_fail, "failed": n_fail},
                       [csv_path])
    return 2 if n_fail else 0


# ---------------------------------------------------------------------------
# entry point

_RUNNERS = {
    "spectrum": run_spectrum,
    "smatrix": run_smatrix,
    "fidelity": run_fidelity,
    "optimize": run_optimize,
    "spread-sweep": run_spread_sweep,
    "power-sweep": run_power_sweep,
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for solver
    # failures and 1 for validation problems
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fanocirc",
                     description="Passive microwave circulator studies")
    parser.add_argument("--version", action="version",
                        version=f"fanocirc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(_RUNNERS) + ["selftest"]:
        p = sub.add_parser(name)
        p.add_argument("config", nargs="?" if name == "selftest" else None,
                       help="flat key-value config file")
        p.add_argument("--set", action="append", default=[], metavar="K=V",
                       help="override a config key")
        p.add_argument("--out-dir", default=None,
                       help="override out_dir from the config")
        p.add_argument("--no-plot", action="store_true",
                       help="skip PNG rendering")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = list(args.set)
    if args.out_dir is not None:
        overrides.append(f"out_dir={args.out_dir}")
    try:
        cfg = None
        if args.config is not None:
            cfg = load_config(args.config, overrides)
        elif args.command != "selftest":
            raise ConfigError("a config file is required")
    except ConfigError as exc:
        print(f"fanocirc: config error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "selftest":
            return run_selftest(cfg, not args.no_plot)
        with warnings.catch_warnings():
            # surface solver warnings, once per call site
            warnings.simplefilter("default")
            results = _RUNNERS[args.command](cfg, not args.no_plot)
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"fanocirc: solver error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({"command": args.command, "results": results},
                     indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())

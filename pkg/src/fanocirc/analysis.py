"""Circulation metrics, bias optimization, spread and power studies.

Fidelities average the three clockwise (or counter-clockwise) scattering
magnitudes; dB metrics and bandwidths derive from frequency sweeps.  The
bias optimizer is a presampled multi-start downhill simplex working
through the adiabatic scattering path, with the winner re-verified
against the full master equation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .device import (
    BiasPoint,
    DeviceParams,
    QuasiparticleSector,
    EigenSystem,
    TruncationWarning,
    device_eigensystem,
    junction_energies_from_spread,
)
from .dynamics import (
    ScatteringMatrix,
    smatrix_adiabatic,
    smatrix_adiabatic_from_es,
    smatrix_full,
)

H_PLANCK = 6.62607015e-34  # J/Hz

# cw transmission reads S13, S32, S21; ccw reads S12, S23, S31 (0-indexed below)
_CW_IDX = ((0, 2), (2, 1), (1, 0))
_CCW_IDX = ((0, 1), (1, 2), (2, 0))


@dataclass(frozen=True)
class FidelityReport:
    """Directional circulation fidelities of one scattering matrix."""

    F_cw: float
    F_ccw: float
    R_avg: float
    terms_cw: tuple[float, float, float]
    terms_ccw: tuple[float, float, float]
    terms_r: tuple[float, float, float]


@dataclass(frozen=True)
class PerformanceReport:
    """dB metrics: insertion loss, isolation, reflectance, bandwidths (MHz)."""

    IL: float
    IS: float
    R: float
    bandwidth_IL_1dB: float = math.nan
    bandwidth_IS_14dB: float = math.nan


@dataclass(frozen=True)
class OptimizationResult:
    """Best bias found by the multi-start search.

    F is the adiabatic-path objective value (bit-reproducible by
    re-evaluation); F_full is the master-equation verification at the
    same point.  starts holds one (x0, F0, x_best, F_best) record per
    simplex start, in start order.
    """

    bias: BiasPoint
    omega_d: float
    F: float
    F_full: float
    direction: str
    sector: QuasiparticleSector
    converged: bool
    n_evaluations: int
    starts: tuple
    best_start: int


@dataclass(frozen=True)
class SaturationReport:
    """Fidelity versus input power and the extracted compression point."""

    power_dbm: np.ndarray
    F: np.ndarray
    F_db_drop: np.ndarray
    P_3dB: float
    P_sat: float
    direction: str
    plateau_F: float


def circulation_fidelities(S) -> FidelityReport:
    """Average the three |S| entries of each circulation direction.

    Accepts a raw 3x3 array or a ScatteringMatrix.  Per-term values are
    retained so sweeps can draw min/max bands.
    """
    mat = np.asarray(getattr(S, "S", S), dtype=complex)
    if mat.shape != (3, 3):
        raise ValueError("scattering matrix must be 3x3")
    a = np.abs(mat)
    cw = tuple(float(a[i, j]) for i, j in _CW_IDX)
    ccw = tuple(float(a[i, j]) for i, j in _CCW_IDX)
    refl = tuple(float(a[i, i]) for i in range(3))
    return FidelityReport(
        F_cw=sum(cw) / 3.0, F_ccw=sum(ccw) / 3.0, R_avg=sum(refl) / 3.0,
        terms_cw=cw, terms_ccw=ccw, terms_r=refl)


def _db_loss(f: float) -> float:
    # -20 log10 of an amplitude average; zero maps to the +inf sentinel
    if f <= 0.0:
        return math.inf
    return -20.0 * math.log10(f)


def _longest_band(freqs: np.ndarray, vals: np.ndarray, threshold: float,
                  keep_below: bool) -> float:
    """Longest contiguous frequency interval with vals on one side of threshold.

    Band edges are refined by linear interpolation; returns MHz.
    """
    ok = vals < threshold if keep_below else vals > threshold
    best = 0.0
    i = 0
    n = len(freqs)
    while i < n:
        if not ok[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and ok[j + 1]:
            j += 1
        lo = freqs[i]
        hi = freqs[j]
        if i > 0 and np.isfinite(vals[i - 1]) and vals[i - 1] != vals[i]:
            t = (threshold - vals[i - 1]) / (vals[i] - vals[i - 1])
            lo = freqs[i - 1] + t * (freqs[i] - freqs[i - 1])
        if j + 1 < n and np.isfinite(vals[j + 1]) and vals[j + 1] != vals[j]:
            t = (threshold - vals[j]) / (vals[j + 1] - vals[j])
            hi = freqs[j] + t * (freqs[j + 1] - freqs[j])
        best = max(best, (hi - lo) * 1e3)
        i = j + 1
    return best


def performance_db(report: FidelityReport, sweep=None) -> PerformanceReport:
    """Convert fidelities to dB; extract bandwidths from a frequency sweep.

    sweep, when given, is a sequence of (f_GHz, FidelityReport) pairs on
    an ascending grid; bandwidths are the maximal contiguous intervals
    with IL < 1 dB and IS > 14 dB, edges linearly interpolated.
    """
    il = _db_loss(report.F_cw)
    is_ = _db_loss(report.F_ccw)
    r = -_db_loss(report.R_avg)
    bw_il = math.nan
    bw_is = math.nan
    if sweep is not None:
        freqs = np.array([f for f, _ in sweep], dtype=float)
        ils = np.array([_db_loss(rep.F_cw) for _, rep in sweep])
        iss = np.array([_db_loss(rep.F_ccw) for _, rep in sweep])
        bw_il = _longest_band(freqs, ils, 1.0, keep_below=True)
        bw_is = _longest_band(freqs, iss, 14.0, keep_below=False)
    return PerformanceReport(IL=il, IS=is_, R=r,
                             bandwidth_IL_1dB=bw_il, bandwidth_IS_14dB=bw_is)


# ---------------------------------------------------------------------------
# bias optimization

# search vector is (phi_x, n_g1, n_g2, n_g3, detuning from omega_1)
_OPT_BOUNDS = [(0.0, 2.0 * math.pi), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0),
               (-1.0, 1.0)]
_PRESAMPLE_N = 2700
_PRESAMPLE_NCUT = 4
_SEPARATION = 0.25


def _direction_index(direction: str) -> int:
    if direction not in ("cw", "ccw"):
        raise ValueError("direction must be 'cw' or 'ccw'")
    return 0 if direction == "cw" else 1


def _objective(params: DeviceParams, sector: QuasiparticleSector,
               direction: str, n_g3_pin: float | None):
    """neg-fidelity objective over (phi_x, n_g1, n_g2[, n_g3], detuning)."""
    idx = _direction_index(direction)

    def neg_F(x):
        if n_g3_pin is None:
            phi_x, ng1, ng2, ng3, det = x
        else:
            phi_x, ng1, ng2, det = x
            ng3 = n_g3_pin
        bias = BiasPoint(phi_x=float(phi_x),
                         n_g=(float(ng1), float(ng2), float(ng3)))
        es = device_eigensystem(params, bias, sector)
        omega_d = float(es.omega_k[1]) + float(det)
        if omega_d <= 0.05:
            return 1.0
        sm = smatrix_adiabatic_from_es(es, params, omega_d)
        rep = circulation_fidelities(sm)
        return -(rep.F_cw if idx == 0 else rep.F_ccw)

    return neg_F


def _gauge_coords(x) -> np.ndarray:
    # biases that differ by a common shift of all three gates are identical,
    # so start separation is measured in (phi_x, n_g1-n_g3, n_g2-n_g3)
    if len(x) == 5:
        return np.array([x[0], x[1] - x[3], x[2] - x[3]])
    return np.array([x[0], x[1], x[2]])


def _presample(params: DeviceParams, sector: QuasiparticleSector,
               direction: str, n_g3_pin: float | None, budget: int,
               rng: np.random.Generator):
    """Score a coarse lattice plus random cloud at reduced n_cut.

    Returns `budget` well-separated starting points, best first.  The
    deliberately tight truncation is fine for ranking; its warnings are
    suppressed.
    """
    coarse_params = replace(params, n_cut=_PRESAMPLE_NCUT)
    obj = _objective(coarse_params, sector, direction, n_g3_pin)
    gates = (0.0, 0.25, 0.5, 0.75, 1.0)
    phis = np.linspace(0.3, 2.0 * math.pi - 0.3, 12)
    if n_g3_pin is None:
        lattice = [np.array([p, a, b, c, 0.0])
                   for p in phis for a in gates for b in gates
                   for c in (0.0, 0.5)]
        cloud = np.column_stack([
            rng.uniform(0.0, 2.0 * math.pi, _PRESAMPLE_N),
            rng.uniform(0.0, 1.0, _PRESAMPLE_N),
            rng.uniform(0.0, 1.0, _PRESAMPLE_N),
            rng.uniform(0.0, 1.0, _PRESAMPLE_N),
            rng.uniform(-0.15, 0.15, _PRESAMPLE_N),
        ])
    else:
        lattice = [np.array([p, a, b, 0.0])
                   for p in phis for a in gates for b in gates]
        cloud = np.column_stack([
            rng.uniform(0.0, 2.0 * math.pi, _PRESAMPLE_N),
            rng.uniform(0.0, 1.0, _PRESAMPLE_N),
            rng.uniform(0.0, 1.0, _PRESAMPLE_N),
            rng.uniform(-0.15, 0.15, _PRESAMPLE_N),
        ])
    X = np.vstack([np.array(lattice), cloud])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        scores = np.array([obj(x) for x in X])
    starts = []
    for idx in np.argsort(scores, kind="stable"):
        x = X[idx]
        gx = _gauge_coords(x)
        if all(np.linalg.norm(gx - _gauge_coords(t)) > _SEPARATION
               for t in starts):
            starts.append(x)
        if len(starts) == budget:
            break
    return starts


def optimize_bias(params: DeviceParams,
                  sector: QuasiparticleSector = QuasiparticleSector(0),
                  direction: str = "cw",
                  budget: int = 8,
                  seed: int = 1234,
                  n_g3: float | None = None) -> OptimizationResult:
    """Maximize circulation fidelity over flux, gate offsets and drive.

    Multi-start bounded Nelder-Mead (phi_x in [0, 2pi], each gate offset
    in [0, 1], drive within 1 GHz of omega_1 at each bias), seeded by a
    coarse presample; the winning simplex is restarted once for polish.
    Deterministic for a fixed seed.

    All three gates must be searched: two gates with the third held
    fixed reach only a third of the physically distinct offsets, and the
    best operating points routinely sit outside that slice.  Passing
    n_g3 pins the third gate anyway (4-parameter search) for comparisons
    against externally dialed-in biases.
    """
    if budget < 1:
        raise ValueError("budget must be at least one start")
    _direction_index(direction)
    bounds = _OPT_BOUNDS if n_g3 is None else _OPT_BOUNDS[:3] + _OPT_BOUNDS[4:]
    rng = np.random.default_rng(seed)
    starts = _presample(params, sector, direction, n_g3, budget, rng)
    fine = _objective(params, sector, direction, n_g3)

    n_evals = 0
    records = []
    best = None
    best_idx = -1
    initial_best = math.inf
    for k, x0 in enumerate(starts):
        f0 = fine(x0)
        initial_best = min(initial_best, f0)
        res = minimize(fine, x0, method="Nelder-Mead", bounds=bounds,
                       options=dict(maxiter=300, xatol=1e-5, fatol=1e-8))
        n_evals += res.nfev + 1
        records.append((tuple(float(v) for v in x0), -float(f0),
                        tuple(float(v) for v in res.x), -float(res.fun)))
        if best is None or res.fun < best.fun:
            best = res
            best_idx = k
    res = minimize(fine, best.x, method="Nelder-Mead", bounds=bounds,
                   options=dict(maxiter=800, xatol=1e-7, fatol=1e-10))
    n_evals += res.nfev
    if res.fun < best.fun:
        best = res

    converged = best.fun < initial_best
    if n_g3 is None:
        phi_x, ng1, ng2, ng3, det = (float(v) for v in best.x)
    else:
        phi_x, ng1, ng2, det = (float(v) for v in best.x)
        ng3 = float(n_g3)
    bias = BiasPoint(phi_x=phi_x, n_g=(ng1, ng2, ng3))
    es = device_eigensystem(params, bias, sector)
    omega_d = float(es.omega_k[1]) + det
    F = -float(best.fun)

    rep_full = circulation_fidelities(smatrix_full(params, bias, sector, omega_d))
    F_full = rep_full.F_cw if direction == "cw" else rep_full.F_ccw
    if abs(F_full - F) > 1e-2:
        warnings.warn(
            f"master-equation verification deviates from the adiabatic "
            f"objective by {abs(F_full - F):.3e}", UserWarning, stacklevel=2)
    return OptimizationResult(
        bias=bias, omega_d=omega_d, F=F, F_full=float(F_full),
        direction=direction, sector=sector, converged=bool(converged),
        n_evaluations=int(n_evals), starts=tuple(records),
        best_start=int(best_idx))


@dataclass(frozen=True)
class SpreadRow:
    """One optimized cell of the fidelity-versus-spread table."""

    delta: float
    C_X: float
    F: float
    phi_x: float
    n_g1: float
    n_g2: float
    n_g3: float
    omega_d: float
    converged: bool


def fidelity_vs_spread_sweep(params_base: DeviceParams, delta_grid,
                             C_X_list, budget: int = 8, seed: int = 1234,
                             n_g3: float | None = None,
                             direction: str = "cw") -> list[SpreadRow]:
    """Optimized fidelity per (spread, shunt capacitance) cell.

    Junctions follow the maximally asymmetric assignment: the middle
    energy stays at the base mean, the outer two split by +/- delta/2.
    """
    deltas = [float(d) for d in delta_grid]
    if any(d < 0.0 or d > 0.05 for d in deltas):
        raise ValueError("delta_grid entries must lie in [0, 0.05]")
    e_mean = sum(params_base.E_J) / 3.0
    rows = []
    for delta in deltas:
        e_j = junction_energies_from_spread(e_mean, delta)
        for c_x in C_X_list:
            params = replace(params_base, E_J=e_j, C_X=float(c_x))
            opt = optimize_bias(params, direction=direction, budget=budget,
                                seed=seed, n_g3=n_g3)
            rows.append(SpreadRow(
                delta=delta, C_X=float(c_x), F=opt.F,
                phi_x=opt.bias.phi_x, n_g1=opt.bias.n_g[0],
                n_g2=opt.bias.n_g[1], n_g3=opt.bias.n_g[2],
                omega_d=opt.omega_d, converged=opt.converged))
    return rows


# ---------------------------------------------------------------------------
# saturation

def dbm_to_watts(p_dbm: float) -> float:
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


def watts_to_dbm(p_watts: float) -> float:
    return 10.0 * math.log10(p_watts / 1e-3)


def drive_amplitude_from_power(p_dbm: float, f_ghz: float,
                               photon_energy: str = "h") -> float:
    """Input-field amplitude (sqrt photons/ns) for a given power.

    photon_energy selects the flux convention: "h" (default) counts the
    physical P / (h * f) photon flux, matching the amplitude units the
    drive couples through; "hbar" counts P / (hbar * f) quanta, i.e. a
    2*pi larger flux, kept for sensitivity checks.
    """
    if photon_energy == "hbar":
        factor = 2.0 * math.pi
    elif photon_energy == "h":
        factor = 1.0
    else:
        raise ValueError("photon_energy must be 'hbar' or 'h'")
    flux_per_s = factor * dbm_to_watts(p_dbm) / (H_PLANCK * f_ghz * 1e9)
    return math.sqrt(flux_per_s * 1e-9)


def saturation_estimate(es: EigenSystem, Gamma: float, f_ghz: float) -> float:
    """One drive photon per excited-state lifetime, in dBm.

    tau_e = 1/(Gamma |m|^2) with |m| the largest ground-to-excited charge
    matrix element; P_sat = h f / tau_e.
    """
    m2 = max(float(np.max(np.abs(q[0, 1:]) ** 2)) for q in es.q_elements)
    if m2 < 1e-12:
        raise ValueError("all ground-to-excited matrix elements vanish")
    tau_e_ns = 1.0 / (Gamma * m2)
    p_watts = H_PLANCK * f_ghz * 1e9 / (tau_e_ns * 1e-9)
    return watts_to_dbm(p_watts)


def power_sweep(params: DeviceParams, bias: BiasPoint,
                sector: QuasiparticleSector, omega_d: float,
                power_grid_dbm, direction: str | None = None,
                photon_energy: str = "h") -> SaturationReport:
    """Circulation fidelity versus input power; 3 dB compression point.

    The monitored direction defaults to whichever transmits better at the
    lowest power.  P_3dB interpolates the power (in dBm) where the
    amplitude fidelity has dropped 3 dB below the low-power plateau.
    """
    powers = np.sort(np.asarray([float(p) for p in power_grid_dbm]))
    if powers.size < 3:
        raise ValueError("power grid needs at least three points")
    fids = []
    with warnings.catch_warnings():
        # strong drive is the point here; the linear-response warning and
        # the plateau-side adaptive logic do not apply
        warnings.simplefilter("ignore", UserWarning)
        reports = []
        for p in powers:
            amp = drive_amplitude_from_power(p, omega_d, photon_energy)
            sm = smatrix_full(params, bias, sector, omega_d, alpha_mag=amp)
            reports.append(circulation_fidelities(sm))
    if direction is None:
        direction = "cw" if reports[0].F_cw >= reports[0].F_ccw else "ccw"
    idx = _direction_index(direction)
    fids = np.array([r.F_cw if idx == 0 else r.F_ccw for r in reports])

    plateau = float(fids[0])
    if plateau <= 0.0:
        raise ValueError("no transmission at the lowest power; cannot normalize")
    drops = 20.0 * np.log10(plateau / np.maximum(fids, 1e-300))
    if drops[1] > 0.1:
        warnings.warn(
            f"fidelity already dropping at the lowest powers "
            f"({drops[1]:.2f} dB at point 2); plateau may not be resolved",
            UserWarning, stacklevel=2)
    above = np.nonzero(drops >= 3.0)[0]
    if above.size == 0 or above[0] == 0:
        raise ValueError("power grid does not bracket the 3 dB compression point")
    j = int(above[0])
    t = (3.0 - drops[j - 1]) / (drops[j] - drops[j - 1])
    p_3db = float(powers[j - 1] + t * (powers[j] - powers[j - 1]))

    es = device_eigensystem(params, bias, sector)
    p_sat = saturation_estimate(es, params.Gamma, omega_d)
    return SaturationReport(power_dbm=powers, F=fids, F_db_drop=drops,
                            P_3dB=p_3db, P_sat=p_sat, direction=direction,
                            plateau_F=plateau)

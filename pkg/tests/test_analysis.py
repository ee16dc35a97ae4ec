import math

import numpy as np
import pytest

from fanocirc.analysis import (
    H_PLANCK,
    FidelityReport,
    circulation_fidelities,
    dbm_to_watts,
    drive_amplitude_from_power,
    fidelity_vs_spread_sweep,
    optimize_bias,
    performance_db,
    power_sweep,
    saturation_estimate,
    watts_to_dbm,
)
from fanocirc.device import BiasPoint, EigenSystem, device_eigensystem
from fanocirc.dynamics import smatrix_adiabatic

CW_PERM = np.array([[0.0, 0.0, 1.0],
                    [1.0, 0.0, 0.0],
                    [0.0, 1.0, 0.0]])


def _report(F_cw, F_ccw):
    return FidelityReport(F_cw=F_cw, F_ccw=F_ccw, R_avg=0.0,
                          terms_cw=(F_cw,) * 3, terms_ccw=(F_ccw,) * 3,
                          terms_r=(0.0,) * 3)


def test_perfect_clockwise_circulator():
    rep = circulation_fidelities(CW_PERM)
    assert rep.F_cw == 1.0
    assert rep.F_ccw == 0.0
    assert rep.R_avg == 0.0
    assert rep.terms_cw == (1.0, 1.0, 1.0)


def test_perfect_counterclockwise_circulator():
    rep = circulation_fidelities(CW_PERM.T)
    assert rep.F_cw == 0.0
    assert rep.F_ccw == 1.0


def test_identity_is_pure_reflection():
    rep = circulation_fidelities(np.eye(3))
    assert rep.F_cw == 0.0
    assert rep.F_ccw == 0.0
    assert rep.R_avg == 1.0


def test_fidelity_accepts_wrapper(small_params, op_bias, sector0):
    sm = smatrix_adiabatic(small_params, op_bias, sector0, omega_d=7.272)
    a = circulation_fidelities(sm)
    b = circulation_fidelities(sm.S)
    assert a == b
    assert a.F_cw > 0.9


def test_fidelity_shape_check():
    with pytest.raises(ValueError, match="3x3"):
        circulation_fidelities(np.eye(4))


def test_db_conversions():
    rep = performance_db(_report(0.5, 0.25))
    assert rep.IL == pytest.approx(-20 * math.log10(0.5))
    assert rep.IS == pytest.approx(-20 * math.log10(0.25))
    assert math.isnan(rep.bandwidth_IL_1dB)
    # perfect isolation maps to the +inf sentinel instead of a domain error
    assert performance_db(_report(0.5, 0.0)).IS == math.inf
    full = circulation_fidelities(CW_PERM)
    assert performance_db(full).IL == 0.0
    assert performance_db(full).R == -math.inf


def test_bandwidths_from_synthetic_sweep():
    """Band edges interpolate linearly between grid points in dB."""
    freqs = [7.0, 7.1, 7.2, 7.3, 7.4, 7.5]
    il_db = [3.0, 2.0, 0.5, 0.5, 2.0, 3.0]
    is_db = [10.0, 20.0, 20.0, 10.0, 10.0, 10.0]
    sweep = [(f, _report(10 ** (-il / 20), 10 ** (-is_ / 20)))
             for f, il, is_ in zip(freqs, il_db, is_db)]
    rep = performance_db(sweep[2][1], sweep=sweep)
    # IL crosses 1 dB at 7.1667 and 7.3333 GHz -> 166.67 MHz
    assert rep.bandwidth_IL_1dB == pytest.approx(166.667, abs=1e-2)
    # IS crosses 14 dB at 7.04 and 7.26 GHz -> 220 MHz
    assert rep.bandwidth_IS_14dB == pytest.approx(220.0, abs=1e-2)


def test_bandwidth_zero_when_never_in_band():
    freqs = [7.0, 7.1, 7.2]
    sweep = [(f, _report(0.5, 0.5)) for f in freqs]  # IL = 6 dB everywhere
    rep = performance_db(sweep[0][1], sweep=sweep)
    assert rep.bandwidth_IL_1dB == 0.0
    assert rep.bandwidth_IS_14dB == 0.0


def test_flux_mirror_swaps_directions(small_params, sector0):
    """phi_x -> 2*pi - phi_x reverses the circulation direction."""
    n_g = (0.0, 0.418599, 0.0)
    fwd = circulation_fidelities(
        smatrix_adiabatic(small_params, BiasPoint(2.765021, n_g), sector0,
                          omega_d=7.272))
    rev = circulation_fidelities(
        smatrix_adiabatic(small_params, BiasPoint(2 * math.pi - 2.765021, n_g),
                          sector0, omega_d=7.272))
    assert rev.F_ccw == pytest.approx(fwd.F_cw, abs=1e-8)
    assert rev.F_cw == pytest.approx(fwd.F_ccw, abs=1e-8)


def test_optimizer_input_validation(small_params):
    with pytest.raises(ValueError, match="budget"):
        optimize_bias(small_params, budget=0)
    with pytest.raises(ValueError, match="direction"):
        optimize_bias(small_params, direction="both")


def test_spread_sweep_rejects_out_of_range(small_params):
    with pytest.raises(ValueError, match="delta_grid"):
        fidelity_vs_spread_sweep(small_params, [0.0, 0.08], [0.0])


def test_power_unit_conversions():
    assert dbm_to_watts(0.0) == pytest.approx(1e-3)
    assert dbm_to_watts(-30.0) == pytest.approx(1e-6)
    assert watts_to_dbm(1e-3) == pytest.approx(0.0)
    for p in (-140.0, -73.0, 0.0, 17.0):
        assert watts_to_dbm(dbm_to_watts(p)) == pytest.approx(p)


def test_drive_amplitude_conventions():
    amp_h = drive_amplitude_from_power(-120.0, 7.25)
    # photon flux 1e-15 W / (h * 7.25 GHz), expressed per ns
    flux = 1e-15 / (H_PLANCK * 7.25e9)
    assert amp_h == pytest.approx(math.sqrt(flux * 1e-9))
    amp_hbar = drive_amplitude_from_power(-120.0, 7.25, photon_energy="hbar")
    assert amp_hbar == pytest.approx(amp_h * math.sqrt(2 * math.pi))
    with pytest.raises(ValueError, match="photon_energy"):
        drive_amplitude_from_power(-120.0, 7.25, photon_energy="joule")


def _synthetic_es(m2_values):
    """Three-level eigensystem with prescribed |<0|q_j|1>|^2 per junction."""
    qs = []
    for m2 in m2_values:
        q = np.zeros((3, 3), dtype=complex)
        q[0, 1] = q[1, 0] = math.sqrt(m2)
        qs.append(q)
    return EigenSystem(omega_k=np.array([0.0, 7.25, 8.1]),
                       states=np.zeros((9, 3)), q_elements=tuple(qs))


def test_saturation_estimate_frozen_value():
    """One photon per excited-state lifetime: frozen reference number."""
    es = _synthetic_es([0.3, 0.1, 0.05])
    assert saturation_estimate(es, 0.27, 7.25) == pytest.approx(-124.0989,
                                                                abs=5e-4)


def test_saturation_estimate_scalings():
    es = _synthetic_es([0.3, 0.1, 0.05])
    base = saturation_estimate(es, 0.27, 7.25)
    # double the coupling rate: one photon arrives 3.01 dB sooner
    assert saturation_estimate(es, 0.54, 7.25) - base == pytest.approx(
        10 * math.log10(2), abs=1e-9)
    # double the frequency: photons carry twice the energy
    assert saturation_estimate(es, 0.27, 14.5) - base == pytest.approx(
        10 * math.log10(2), abs=1e-9)


def test_saturation_estimate_needs_matrix_element():
    es = _synthetic_es([0.0, 0.0, 0.0])
    with pytest.raises(ValueError, match="matrix elements vanish"):
        saturation_estimate(es, 0.27, 7.25)


def test_power_sweep_validation(small_params, op_bias, sector0):
    with pytest.raises(ValueError, match="three points"):
        power_sweep(small_params, op_bias, sector0, 7.272, [-140.0, -120.0])


def test_power_sweep_not_bracketed(small_params, op_bias, sector0):
    # far below saturation the fidelity never compresses by 3 dB
    with pytest.raises(ValueError, match="bracket"):
        power_sweep(small_params, op_bias, sector0, 7.272,
                    [-170.0, -165.0, -160.0])


def test_power_sweep_compression(small_params, op_bias, sector0):
    grid = np.arange(-150.0, -99.0, 5.0)
    rep = power_sweep(small_params, op_bias, sector0, 7.272, grid)
    assert rep.direction == "cw"
    assert rep.plateau_F == pytest.approx(rep.F[0])
    assert rep.F_db_drop[0] == 0.0
    assert -135.0 < rep.P_3dB < -110.0
    assert -135.0 < rep.P_sat < -110.0
    # compression is monotone once under way
    k = int(np.argmax(rep.F_db_drop >= 3.0))
    assert np.all(np.diff(rep.F_db_drop[k:]) > 0)


def test_power_sweep_unsorted_grid_is_sorted(small_params, op_bias, sector0):
    grid = [-120.0, -150.0, -135.0, -105.0]
    # the coarse grid also leaves the plateau under-resolved: warn, don't fail
    with pytest.warns(UserWarning, match="plateau"):
        rep = power_sweep(small_params, op_bias, sector0, 7.272, grid)
    assert np.all(np.diff(rep.power_dbm) > 0)


def test_eigensystem_fixture_sanity(fitted_params, op_bias, sector0):
    """The saturation estimate on the fitted device stays in the expected
    window around the measured compression point."""
    es = device_eigensystem(fitted_params, op_bias, sector0)
    p_sat = saturation_estimate(es, fitted_params.Gamma, 7.272185)
    assert p_sat == pytest.approx(-122.8, abs=0.5)

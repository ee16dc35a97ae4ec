import numpy as np
import pytest

from fanocirc.device import DeviceParams, BiasPoint, QuasiparticleSector

# filled by test_acceptance; echoed after the run so the per-criterion
# verdicts are visible even when stdout capture is on
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fitted_params() -> DeviceParams:
    """Device with junction energies fitted to the measured spectra."""
    return DeviceParams(E_C_sigma=3.09, E_J=(14.73, 15.15, 15.22), C_X=76.0,
                        Gamma=0.27, n_cut=7, n_levels=5)


@pytest.fixture(scope="session")
def small_params() -> DeviceParams:
    """Same device at a cheaper truncation for unit-level checks."""
    return DeviceParams(E_C_sigma=3.09, E_J=(14.73, 15.15, 15.22), C_X=76.0,
                        Gamma=0.27, n_cut=7, n_levels=4)


@pytest.fixture(scope="session")
def op_bias() -> BiasPoint:
    """Clockwise operating point of the fitted device (third gate grounded)."""
    return BiasPoint(phi_x=2.765021, n_g=(0.0, 0.418599, 0.0))


@pytest.fixture(scope="session")
def sector0() -> QuasiparticleSector:
    return QuasiparticleSector(0)


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20260814)

"""Passive on-chip microwave circulator simulator.

Models a three-junction superconducting loop capacitively coupled to
three semi-infinite waveguides, composes the driven open-system network,
and solves for steady-state scattering, circulation fidelities, bias
optima and power handling.
"""

from .device import (
    ALL_SECTORS,
    BiasPoint,
    DeviceParams,
    EigenSystem,
    QuasiparticleSector,
    TruncationWarning,
    build_loop_hamiltonian,
    charge_operators,
    coupling_operators,
    device_eigensystem,
    eigensystem,
    junction_energies_from_spread,
    junction_spread,
    transition_spectrum,
)
from .network import (
    CapacitanceMatrix,
    WaveguideScattering,
    build_capacitance_matrix,
    shunt_coupling_z,
    waveguide_smatrix,
    waveguide_smatrix_finite,
    waveguide_smatrix_limit,
)
from .slh import (
    ComposedSystem,
    SLHTriple,
    compose_circulator,
    compose_via_algebra,
    concat,
    drive_triple,
    feedback_reduce,
    identity_triple,
    series,
    static_triple,
)
from .dynamics import (
    Liouvillian,
    LoopResponse,
    ScatteringMatrix,
    SteadyState,
    build_liouvillian,
    evolve,
    loop_response,
    master_action_direct,
    rotating_hamiltonian,
    smatrix_adiabatic,
    smatrix_full,
    steady_state,
)
from .analysis import (
    FidelityReport,
    OptimizationResult,
    PerformanceReport,
    SaturationReport,
    SpreadRow,
    circulation_fidelities,
    drive_amplitude_from_power,
    fidelity_vs_spread_sweep,
    optimize_bias,
    performance_db,
    power_sweep,
    saturation_estimate,
)

__version__ = "0.1.0"

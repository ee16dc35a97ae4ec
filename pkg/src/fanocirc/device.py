"""Three-junction loop: Hamiltonian construction and diagonalization.

The loop consists of three superconducting islands connected pairwise by
Josephson junctions, threaded by a flux bias and gated by three charge
biases.  After eliminating the conserved total charge the system lives in
a two-charge Hilbert space spanned by |n'_1, n'_2> with n'_j integer.
Energies are specified as ordinary frequencies in GHz throughout; the
single angular conversion happens in :mod:`fanocirc.dynamics`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh

BOUNDARY_WEIGHT_TOL = 1e-6


class TruncationWarning(UserWarning):
    """Charge-basis truncation is too tight for the requested state."""


@dataclass(frozen=True)
class DeviceParams:
    """Electrical constants of the chip.

    E_C_sigma : charging energy / h in GHz.
    E_J       : three junction energies / h in GHz.
    C_X       : waveguide shunt capacitance in fF.
    C_C_tilde : series coupling capacitance in fF; math.inf selects the
                analytic limit form of the waveguide scattering block.
    Z_wg      : waveguide impedance in ohm.
    Gamma     : loop-waveguide coupling rate in GHz (ordinary frequency).
    n_cut     : charge-basis truncation, states n = -n_cut..n_cut per island.
    n_levels  : eigenlevels retained for the open-system dynamics.
    """

    E_C_sigma: float
    E_J: tuple[float, float, float]
    C_X: float
    C_C_tilde: float = math.inf
    Z_wg: float = 50.0
    Gamma: float = 0.27
    n_cut: int = 7
    n_levels: int = 5

    def __post_init__(self):
        object.__setattr__(self, "E_J", tuple(float(e) for e in self.E_J))
        if len(self.E_J) != 3:
            raise ValueError("E_J must hold exactly three junction energies")
        if self.E_C_sigma <= 0 or any(e <= 0 for e in self.E_J):
            raise ValueError("energies must be strictly positive")
        if self.C_X < 0:
            raise ValueError("C_X must be non-negative")
        if self.C_C_tilde <= 0:
            raise ValueError("C_C_tilde must be positive (use math.inf for the limit form)")
        if self.Z_wg <= 0:
            raise ValueError("Z_wg must be strictly positive")
        if self.Gamma <= 0:
            raise ValueError("Gamma must be strictly positive")
        if self.n_cut < 3:
            raise ValueError("n_cut must be at least 3")
        dim = (2 * self.n_cut + 1) ** 2
        if not 3 <= self.n_levels <= dim:
            raise ValueError(f"n_levels must lie in [3, {dim}]")


@dataclass(frozen=True)
class BiasPoint:
    """External controls: dimensionless flux (radians) and three gate charges.

    Only the differences n_g1 - n_g3 and n_g2 - n_g3 affect the spectrum.
    """

    phi_x: float
    n_g: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "n_g", tuple(float(g) for g in self.n_g))
        if len(self.n_g) != 3:
            raise ValueError("n_g must hold exactly three gate charges")

    @property
    def phi_x_reduced(self) -> float:
        return self.phi_x % (2 * math.pi)


@dataclass(frozen=True)
class QuasiparticleSector:
    """One of the four charge-parity configurations of the islands.

    A quasiparticle tunneling event offsets a gate charge by half a Cooper
    pair; the four distinct offset pairs on (n_g1, n_g2) enumerate the
    sectors seen in the measured spectra.
    """

    sector_id: int

    OFFSETS = ((0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5))

    def __post_init__(self):
        if self.sector_id not in (0, 1, 2, 3):
            raise ValueError("sector_id must be 0..3")

    @property
    def charge_offsets(self) -> tuple[float, float]:
        return self.OFFSETS[self.sector_id]


@dataclass(frozen=True)
class EigenSystem:
    """Retained eigenlevels of the loop plus projected charge operators.

    omega_k    : transition frequencies (E_k - E_0)/h in GHz, omega_0 = 0.
    states     : (dim, n_levels) eigenvector matrix in the charge basis.
    q_elements : three (n_levels, n_levels) matrices <k|q_j|l>.
    """

    omega_k: np.ndarray
    states: np.ndarray
    q_elements: tuple[np.ndarray, np.ndarray, np.ndarray]

    @property
    def n_levels(self) -> int:
        return len(self.omega_k)


def junction_energies_from_spread(E_J_mean: float, delta: float) -> tuple[float, float, float]:
    """Maximally asymmetric junction triple with relative spread delta.

    Returns (E_J(1 - delta/2), E_J, E_J(1 + delta/2)), the worst-case
    arrangement for circulation at a given spread.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if delta >= 2:
        raise ValueError("delta must be below 2 (junction energy would vanish)")
    return (E_J_mean * (1 - delta / 2), E_J_mean, E_J_mean * (1 + delta / 2))


def junction_spread(E_J) -> float:
    """Relative spread (max - min)/mean of a junction-energy triple."""
    e = [float(x) for x in E_J]
    if any(x <= 0 for x in e):
        raise ValueError("junction energies must be strictly positive")
    return (max(e) - min(e)) / (sum(e) / len(e))


@lru_cache(maxsize=8)
def _basis_ops(n_cut: int):
    """Single-island charge and translation matrices, kron'd to two islands."""
    dim = 2 * n_cut + 1
    n = np.arange(-n_cut, n_cut + 1, dtype=float)
    eye = np.eye(dim)
    num = np.diag(n)
    # T raises the island charge by one: T|n> = |n+1>
    T = np.eye(dim, k=-1)
    N1 = np.kron(num, eye)
    N2 = np.kron(eye, num)
    T1 = np.kron(T, eye)
    T2 = np.kron(eye, T)
    return n, N1, N2, T1, T2


def charge_operators(n_cut: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Island charge operators q_1 = n'_1, q_2 = -n'_2, q_3 = -n'_1 + n'_2."""
    _, N1, N2, _, _ = _basis_ops(n_cut)
    return N1, -N2, -N1 + N2


def build_loop_hamiltonian(params: DeviceParams, bias: BiasPoint,
                           sector: QuasiparticleSector = QuasiparticleSector(0)) -> np.ndarray:
    """Loop Hamiltonian in the two-charge basis, in GHz.

    Kinetic part: E_C [ (n'_1 - g_1)^2 + (n'_2 + g_2)^2 - n'_1 n'_2 ] with
    g_1 = (n_g1 + d_1 - n_g3)/2, g_2 = (n_g2 + d_2 - n_g3)/2 and (d_1, d_2)
    the sector offsets; the conserved total charge is fixed to zero.
    Each junction contributes -E_J cos(phase difference -/+ phi_x/3), with
    the cosines realized as half-sums of charge translations.
    """
    nc = params.n_cut
    n, N1, N2, T1, T2 = _basis_ops(nc)
    dim = 2 * nc + 1
    eye = np.eye(dim)

    d1, d2 = sector.charge_offsets
    g1 = 0.5 * (bias.n_g[0] + d1 - bias.n_g[2])
    g2 = 0.5 * (bias.n_g[1] + d2 - bias.n_g[2])

    kin = params.E_C_sigma * (
        np.kron(np.diag((n - g1) ** 2), eye)
        + np.kron(eye, np.diag((n + g2) ** 2))
        - N1 @ N2
    )

    ej1, ej2, ej3 = params.E_J
    phase = np.exp(-1j * bias.phi_x / 3)
    pot = -0.5 * (ej1 * phase * T1 + ej2 * phase * T2
                  + ej3 * np.conj(phase) * (T1 @ T2))
    pot = pot + pot.conj().T
    return kin + pot


def _check_truncation(vec: np.ndarray, n_cut: int):
    dim = 2 * n_cut + 1
    w = np.abs(vec.reshape(dim, dim)) ** 2
    boundary = w[0, :].sum() + w[-1, :].sum() + w[:, 0].sum() + w[:, -1].sum()
    if boundary > BOUNDARY_WEIGHT_TOL:
        # order of magnitude only, so repeated warnings deduplicate
        warnings.warn(
            f"ground state carries weight ~1e{math.ceil(math.log10(boundary))} "
            f"on boundary charge states; increase n_cut={n_cut}",
            TruncationWarning,
            stacklevel=3,
        )


def eigensystem(H: np.ndarray, n_levels: int, n_cut: int) -> EigenSystem:
    """Lowest n_levels eigenpairs and the projected charge operators."""
    vals, vecs = eigh(H, subset_by_index=(0, n_levels - 1))
    _check_truncation(vecs[:, 0], n_cut)
    omega = vals - vals[0]
    qs = tuple(vecs.conj().T @ q @ vecs for q in charge_operators(n_cut))
    return EigenSystem(omega_k=omega, states=vecs, q_elements=qs)


def device_eigensystem(params: DeviceParams, bias: BiasPoint,
                       sector: QuasiparticleSector = QuasiparticleSector(0)) -> EigenSystem:
    """Convenience wrapper: build, diagonalize, project in one call."""
    H = build_loop_hamiltonian(params, bias, sector)
    return eigensystem(H, params.n_levels, params.n_cut)


def coupling_operators(es: EigenSystem, Gamma: float) -> tuple[np.ndarray, ...]:
    """Lowering operators L_j = sqrt(Gamma) * upper-triangular part of q_j.

    Strictly upper triangular in energy ordering, so each operator only
    de-excites; Gamma carries the GHz units of the coupling rate.
    """
    root = math.sqrt(Gamma)
    return tuple(root * np.triu(q, k=1) for q in es.q_elements)


ALL_SECTORS = tuple(QuasiparticleSector(i) for i in range(4))


def transition_spectrum(params: DeviceParams, flux_grid,
                        sectors=ALL_SECTORS, n_transitions: int = 4,
                        n_g=(0.0, 0.0, 0.0)):
    """Transition frequencies omega_1..omega_n over a flux grid per sector.

    Returns a list of rows (phi_x, sector_id, omega_1, ..., omega_n).
    """
    n_keep = min(n_transitions, params.n_levels - 1)
    rows = []
    for phi in flux_grid:
        bias = BiasPoint(phi_x=float(phi), n_g=tuple(n_g))
        for sec in sectors:
            es = device_eigensystem(params, bias, sec)
            rows.append((float(phi), sec.sector_id, *es.omega_k[1:n_keep + 1]))
    return rows

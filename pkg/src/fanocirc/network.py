"""Waveguide network: capacitance matrix and its 6x6 scattering block.

Three semi-infinite waveguides couple to the loop through series capacitors
and to each other through shunt capacitors C_X.  The purely capacitive
six-port (three exterior, three interior ports) scatters instantaneously;
its unitary scattering matrix A follows from a Cayley transform of the
capacitance matrix, with a closed form in the strong-coupling limit of the
series capacitors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CapacitanceMatrix:
    """6x6 capacitance matrix in fF with block layout [[C_X - C_S, C_C], [C_C, -C_C]]."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (6, 6):
            raise ValueError("capacitance matrix must be 6x6")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class WaveguideScattering:
    """Unitary waveguide scattering block and its 3x3 partitions.

    Ports 1-3 are exterior (toward the drive lines), ports 4-6 interior
    (toward the loop).  z = 2*pi*f * Z_wg * C_X is the dimensionless shunt
    coupling at the evaluation frequency.
    """

    A: np.ndarray
    z: float
    condition: float = 1.0
    omega_d: float = float("nan")

    @property
    def A11(self) -> np.ndarray:
        return self.A[:3, :3]

    @property
    def A12(self) -> np.ndarray:
        return self.A[:3, 3:]

    @property
    def A21(self) -> np.ndarray:
        return self.A[3:, :3]

    @property
    def A22(self) -> np.ndarray:
        return self.A[3:, 3:]


def shunt_coupling_z(f_ghz: float, Z_wg: float, C_X_ff: float) -> float:
    """Dimensionless z = omega * Z_wg * C_X with omega the angular frequency.

    fF * GHz * ohm = 1e-6, so z(7.25 GHz, 50 ohm, 75 fF) = 0.171.
    """
    return TWO_PI * f_ghz * Z_wg * C_X_ff * 1e-6


def build_capacitance_matrix(C_X: float, C_C_tilde: float) -> CapacitanceMatrix:
    """Assemble the 6x6 block capacitance matrix from the partial blocks.

    C_Sigma block = (C_C_tilde + 2 C_X) * I, C_C block = C_C_tilde * I, and
    the C_X block is hollow with every off-diagonal equal to C_X.
    """
    if C_X < 0:
        raise ValueError("C_X must be non-negative")
    if not (C_C_tilde > 0) or math.isinf(C_C_tilde):
        raise ValueError("C_C_tilde must be positive and finite")
    eye = np.eye(3)
    ones = np.ones((3, 3))
    c_x_blk = C_X * (ones - eye)
    c_sigma_blk = (C_C_tilde + 2 * C_X) * eye
    c_c_blk = C_C_tilde * eye
    full = np.block([[c_x_blk - c_sigma_blk, c_c_blk],
                     [c_c_blk, -c_c_blk]])
    return CapacitanceMatrix(matrix=full)


def waveguide_smatrix_finite(omega_d: float, Z_wg: float,
                             C: CapacitanceMatrix) -> WaveguideScattering:
    """Scattering block A = (1 + i w Z C)^{-1} (1 - i w Z C) at frequency omega_d (GHz).

    The generator i*w*Z*C is anti-Hermitian (C real symmetric), so A is
    unitary to rounding.  The resolvent condition number is reported; a
    near-singular resolvent raises.
    """
    # fF * GHz * ohm -> dimensionless
    gen = 1j * TWO_PI * omega_d * Z_wg * 1e-6 * C.matrix
    M = np.eye(6) + gen
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(
            f"waveguide resolvent ill-conditioned at {omega_d} GHz (cond={cond:.3e})")
    A = np.linalg.solve(M, np.eye(6) - gen)
    # entry (0,1) of the exterior block is +C_X by construction
    z = shunt_coupling_z(omega_d, Z_wg, float(C.matrix[0, 1]))
    return WaveguideScattering(A=A, z=z, condition=cond, omega_d=float(omega_d))


def waveguide_smatrix_limit(z: float, omega_d: float = float("nan")) -> WaveguideScattering:
    """Closed-form A in the strong series-capacitor limit.

    A11 = A22 = u (J - 3I) and A12 = A21 = u (J + (2i/z) I) with
    u = z/(2i + 3z) and J the all-ones matrix.  The z -> 0 limit is taken
    analytically: A11 = 0, A12 = I.
    """
    if z < 0:
        raise ValueError("z must be non-negative")
    eye = np.eye(3, dtype=complex)
    ones = np.ones((3, 3), dtype=complex)
    if z == 0:
        a11 = np.zeros((3, 3), dtype=complex)
        a12 = eye.copy()
    else:
        u = z / (2j + 3 * z)
        a11 = u * (ones - 3 * eye)
        a12 = u * ones + (2j * u / z) * eye
    A = np.block([[a11, a12], [a12, a11]])
    return WaveguideScattering(A=A, z=float(z), omega_d=float(omega_d))


def waveguide_smatrix(params, omega_d: float) -> WaveguideScattering:
    """Dispatch on C_C_tilde: analytic limit when infinite, Cayley otherwise."""
    if math.isinf(params.C_C_tilde):
        z = shunt_coupling_z(omega_d, params.Z_wg, params.C_X)
        return waveguide_smatrix_limit(z, omega_d=omega_d)
    C = build_capacitance_matrix(params.C_X, params.C_C_tilde)
    return waveguide_smatrix_finite(omega_d, params.Z_wg, C)

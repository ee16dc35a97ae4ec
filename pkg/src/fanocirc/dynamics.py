"""Rotating-frame master equation: steady states, evolution, S-matrices.

Everything upstream works in ordinary frequency units (GHz); this module
applies the single angular conversion when assembling the Liouvillian
(time unit ns, rates rad/ns): Hamiltonians pick up 2*pi, coupling
operators sqrt(2*pi).  The scattering matrix follows from the
input-output relation S_ji = <L_tot,j> / alpha_i evaluated on the driven
steady state; the adiabatic path eliminates the excited-state dynamics
and is exact in the linear-response limit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .device import (
    BiasPoint,
    DeviceParams,
    EigenSystem,
    QuasiparticleSector,
    coupling_operators,
    device_eigensystem,
)
from .network import waveguide_smatrix
from .slh import ComposedSystem, compose_circulator

TWO_PI = 2.0 * math.pi

# adaptive weak-drive settings: keep total excited population below this
EXCITED_POP_TARGET = 1e-3
GROUND_POP_WARN = 0.99
_DEFAULT_ALPHA = 3e-3


@dataclass(frozen=True)
class Liouvillian:
    """Vectorized master-equation generator (column-stacking convention).

    matrix acts on vec(rho) with vec index b*d + a for rho[a, b]; units
    are rad/ns.  omega_d (GHz) and the drive amplitudes tag the frame.
    """

    matrix: np.ndarray
    omega_d: float
    alpha: np.ndarray
    dim: int

    def __post_init__(self):
        d = self.dim
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (d * d, d * d):
            raise ValueError(f"superoperator must be {d*d}x{d*d}, got {m.shape}")
        # trace preservation: the trace row must annihilate the generator
        tr = _trace_row(d)
        dev = float(np.max(np.abs(tr @ m)))
        scale = max(1.0, float(np.max(np.abs(m))))
        if dev > 1e-10 * scale:
            raise ValueError(f"generator is not trace-preserving (dev={dev:.3e})")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class SteadyState:
    """Stationary density operator and the residual norm of its derivative."""

    rho: np.ndarray
    residual: float

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise ValueError("steady state must be Hermitian to 1e-10")
        if abs(np.trace(rho).real - 1.0) > 1e-10:
            raise ValueError("steady state must have unit trace to 1e-10")
        if np.min(np.linalg.eigvalsh(rho)) < -1e-8:
            raise ValueError("steady state has an eigenvalue below -1e-8")
        object.__setattr__(self, "rho", rho)

    @property
    def ground_population(self) -> float:
        return float(self.rho[0, 0].real)


@dataclass(frozen=True)
class ScatteringMatrix:
    """3x3 scattering matrix at a drive frequency, tagged by method."""

    S: np.ndarray
    omega_d: float
    method: str

    def __post_init__(self):
        S = np.asarray(self.S, dtype=complex)
        if S.shape != (3, 3):
            raise ValueError("S must be 3x3")
        if self.method not in ("full", "adiabatic"):
            raise ValueError("method must be 'full' or 'adiabatic'")
        peak = float(np.max(np.abs(S)))
        if peak > 1.0 + 1e-3:
            raise ValueError(f"scattering element exceeds passivity bound (|S|={peak:.6f})")
        object.__setattr__(self, "S", S)


@dataclass(frozen=True)
class LoopResponse:
    """Loop-mediated response R_loop with per-level rates and detunings.

    Gamma_k are the complex waveguide-induced rates (real part decay,
    imaginary part frequency shift) and Delta_omega_k = 2*pi*(omega_k -
    omega_d) the angular detunings, both in rad/ns.
    """

    R_loop: np.ndarray
    Gamma_k: np.ndarray
    Delta_omega_k: np.ndarray


def _trace_row(d: int) -> np.ndarray:
    tr = np.zeros((1, d * d), dtype=complex)
    tr[0, :: d + 1] = 1.0
    return tr


def rotating_hamiltonian(es: EigenSystem, omega_d: float) -> np.ndarray:
    """Diagonal rotating-frame loop Hamiltonian in GHz: diag(0, omega_k - omega_d)."""
    shifts = np.concatenate([[0.0], es.omega_k[1:] - omega_d])
    return np.diag(shifts).astype(complex)


def build_liouvillian(cs: ComposedSystem, omega_d: float) -> Liouvillian:
    """Vectorized generator of the rotating-frame master equation.

    The single 2*pi conversion happens here: H -> 2*pi*H, L -> sqrt(2*pi)*L.
    """
    d = cs.dim
    H = TWO_PI * cs.H_tot_rot
    eye = np.eye(d, dtype=complex)
    sup = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for j in range(cs.L_tot.shape[0]):
        L = math.sqrt(TWO_PI) * cs.L_tot[j]
        LdL = L.conj().T @ L
        sup += (np.kron(L.conj(), L)
                - 0.5 * np.kron(eye, LdL)
                - 0.5 * np.kron(LdL.T, eye))
    return Liouvillian(matrix=sup, omega_d=float(omega_d),
                       alpha=np.asarray(cs.alpha, dtype=complex), dim=d)


def master_action_direct(cs: ComposedSystem, rho: np.ndarray) -> np.ndarray:
    """Term-by-term master-equation derivative, unvectorized.

    Independent oracle for the superoperator: -i[H, rho] plus the three
    dissipators, with the same unit conventions as build_liouvillian.
    """
    H = TWO_PI * cs.H_tot_rot
    out = -1j * (H @ rho - rho @ H)
    for j in range(cs.L_tot.shape[0]):
        L = math.sqrt(TWO_PI) * cs.L_tot[j]
        LdL = L.conj().T @ L
        out += L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)
    return out


def steady_state(liou: Liouvillian) -> SteadyState:
    """Stationary state via null-space extraction with a trace constraint.

    The kernel dimension is checked first; the state itself comes from a
    bordered least-squares solve (generator rows plus the trace row).
    """
    sup = liou.matrix
    d = liou.dim
    svals = np.linalg.svd(sup, compute_uv=False)
    scale = svals[0] if svals[0] > 0 else 1.0
    null_dim = int(np.sum(svals < 1e-10 * scale))
    if null_dim == 0:
        raise ValueError("generator has no stationary state (empty kernel)")
    if null_dim > 1:
        raise ValueError(
            f"generator kernel is {null_dim}-dimensional; the steady state is "
            "not unique (dark state or symmetry/degeneracy: check for "
            "decoupled levels or vanishing rates)")

    A = np.vstack([sup, _trace_row(d)])
    b = np.zeros(d * d + 1, dtype=complex)
    b[-1] = 1.0
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    rho = x.reshape((d, d), order="F")
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    residual = float(np.linalg.norm(sup @ rho.flatten(order="F")))
    if residual > 1e-10:
        raise RuntimeError(f"steady-state solve did not converge (residual={residual:.3e})")
    return SteadyState(rho=rho, residual=residual)


def evolve(liou: Liouvillian, rho0: np.ndarray, t_final: float,
           dt: float) -> np.ndarray:
    """Integrate the master equation with classic fourth-order steps.

    For a linear autonomous generator the Runge-Kutta update is the exact
    degree-4 Taylor polynomial of exp(dt*L), applied per step; dt must
    resolve the fastest rate (dt * max|omega| < 0.1, bounded by the row-sum
    norm).  Trace is checked to 1e-8 over the run.
    """
    if dt <= 0 or t_final < 0:
        raise ValueError("dt must be positive and t_final non-negative")
    scale = float(np.linalg.norm(liou.matrix, np.inf))
    if dt * scale >= 0.1:
        raise ValueError(
            f"step too large: dt*max|omega| = {dt * scale:.3f} >= 0.1; "
            f"reduce dt below {0.1 / scale if scale > 0 else math.inf:.3e} ns")
    d = liou.dim
    rho0 = np.asarray(rho0, dtype=complex)
    vec = rho0.flatten(order="F")
    tr0 = float(np.trace(rho0).real)

    def stepper(h: float) -> np.ndarray:
        M = h * liou.matrix
        eye = np.eye(d * d, dtype=complex)
        # Horner form of I + M + M^2/2 + M^3/6 + M^4/24
        return eye + M @ (eye + M @ (eye + M @ (eye + M / 4.0) / 3.0) / 2.0)

    n_full = int(t_final / dt)
    P = stepper(dt)
    for _ in range(n_full):
        vec = P @ vec
    rem = t_final - n_full * dt
    if rem > 1e-15 * max(t_final, dt):
        vec = stepper(rem) @ vec
    rho = vec.reshape((d, d), order="F")
    drift = abs(float(np.trace(rho).real) - tr0)
    if drift > 1e-8:
        raise RuntimeError(f"trace drifted by {drift:.3e} during evolution")
    return rho


def _compose_at(params: DeviceParams, es: EigenSystem, omega_d: float,
                alpha) -> ComposedSystem:
    A = waveguide_smatrix(params, omega_d)
    L0 = coupling_operators(es, params.Gamma)
    H_rot = rotating_hamiltonian(es, omega_d)
    return compose_circulator(A, L0, H_rot, alpha)


def smatrix_full(params: DeviceParams, bias: BiasPoint,
                 sector: QuasiparticleSector = QuasiparticleSector(0),
                 omega_d: float = 7.25,
                 alpha_mag: float | None = None) -> ScatteringMatrix:
    """Scattering matrix from driven steady states, one port at a time.

    S_ji = Tr(L_tot,j rho_ss) / alpha_i; any amplitude-to-voltage
    conversion factor cancels in the ratio.  When alpha_mag is omitted it
    is reduced adaptively until the total excited population stays below
    EXCITED_POP_TARGET; an explicit alpha_mag is used as-is, with a
    warning when the ground population drops under 0.99.
    """
    es = device_eigensystem(params, bias, sector)
    adaptive = alpha_mag is None
    amp = _DEFAULT_ALPHA if adaptive else float(alpha_mag)
    if amp <= 0:
        raise ValueError("alpha_mag must be positive")

    for _ in range(4):
        S = np.zeros((3, 3), dtype=complex)
        worst_excited = 0.0
        for i in range(3):
            alpha = np.zeros(3, dtype=complex)
            alpha[i] = amp
            cs = _compose_at(params, es, omega_d, alpha)
            ss = steady_state(build_liouvillian(cs, omega_d))
            worst_excited = max(worst_excited, 1.0 - ss.ground_population)
            for j in range(3):
                S[j, i] = np.trace(cs.L_tot[j] @ ss.rho) / amp
        if not adaptive or worst_excited <= EXCITED_POP_TARGET:
            break
        # population scales as amp^2: aim at half the target
        amp *= math.sqrt(0.5 * EXCITED_POP_TARGET / worst_excited)
    if 1.0 - worst_excited < GROUND_POP_WARN:
        warnings.warn(
            f"ground-state population {1.0 - worst_excited:.4f} < {GROUND_POP_WARN}; "
            "drive too strong for linear response", UserWarning, stacklevel=2)
    return ScatteringMatrix(S=S, omega_d=float(omega_d), method="full")


def loop_response(es: EigenSystem, cs: ComposedSystem,
                  omega_d: float) -> LoopResponse:
    """Adiabatically eliminated loop response R_loop.

    The ground-to-excited coherences relax through the kernel
    K = (1/2) [L_loop^dag W L_loop] restricted to the excited block, with
    W = (1 + A22)(1 - A22)^{-1}; then
    R_loop = -V (i*Delta + K)^{-1} V^dag with V_ik = <0|L_wl,i|k>.
    Exposed per-level rates are the kernel diagonal, Gamma_k = 2 K_kk.
    """
    d = cs.dim
    L0 = math.sqrt(TWO_PI) * cs.L_loop
    L_wl = math.sqrt(TWO_PI) * cs.L_wl
    A22 = cs.A.A22
    eye = np.eye(3, dtype=complex)
    W = (eye + A22) @ np.linalg.inv(eye - A22)
    X = np.einsum("jk,jqa,kqc->ac", W, L0.conj(), L0)
    K = 0.5 * X[1:, 1:]
    Gamma_k = 2.0 * np.diag(K).copy()
    delta = TWO_PI * (es.omega_k[1:] - omega_d)
    V = L_wl[:, 0, 1:]
    R = -V @ np.linalg.solve(1j * np.diag(delta) + K, V.conj().T)
    return LoopResponse(R_loop=R, Gamma_k=Gamma_k, Delta_omega_k=delta)


def smatrix_adiabatic_from_es(es: EigenSystem, params: DeviceParams,
                              omega_d: float) -> ScatteringMatrix:
    """Adiabatic scattering matrix from a precomputed eigensystem."""
    cs = _compose_at(params, es, omega_d, np.zeros(3))
    lr = loop_response(es, cs, omega_d)
    S = (np.eye(3, dtype=complex) + lr.R_loop) @ cs.S_wl
    return ScatteringMatrix(S=S, omega_d=float(omega_d), method="adiabatic")


def smatrix_adiabatic(params: DeviceParams, bias: BiasPoint,
                      sector: QuasiparticleSector = QuasiparticleSector(0),
                      omega_d: float = 7.25) -> ScatteringMatrix:
    """Weak-drive scattering matrix S = (1 + R_loop) S_wl."""
    es = device_eigensystem(params, bias, sector)
    return smatrix_adiabatic_from_es(es, params, omega_d)

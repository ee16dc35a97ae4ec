"""Cascade algebra for open scattering networks (SLH triples).

A triple (S, L, H) describes an n-port component: S is an n x n complex
scattering block with scalar entries, L a vector of n coupling operators
on the loop Hilbert space, H the component Hamiltonian.  Series products,
concatenation and feedback elimination follow the standard composition
rules for cascaded quantum networks.  compose_circulator specializes the
pipeline drive -> waveguide block -> loop and returns the closed-form
reduced system used by the dynamics solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import WaveguideScattering

HERM_TOL = 1e-12
_COND_LIMIT = 1e12


def _op_stack(L, n_ports: int) -> np.ndarray:
    """Coerce a sequence of coupling operators to a (n_ports, d, d) array."""
    arr = np.asarray(L, dtype=complex)
    if arr.ndim != 3 or arr.shape[0] != n_ports or arr.shape[1] != arr.shape[2]:
        raise ValueError(
            f"expected {n_ports} square coupling operators, got array of shape {arr.shape}")
    return arr


def _check_hermitian(H: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.max(np.abs(H))) if H.size else 1.0)
    dev = float(np.max(np.abs(H - H.conj().T)))
    if dev > HERM_TOL * scale:
        raise ValueError(f"{name} must be Hermitian (max deviation {dev:.3e})")


@dataclass(frozen=True)
class SLHTriple:
    """Immutable (S, L, H) triple with scalar scattering entries."""

    n_ports: int
    S: np.ndarray
    L: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S, dtype=complex)
        if S.shape != (self.n_ports, self.n_ports):
            raise ValueError(f"S must be {self.n_ports}x{self.n_ports}, got {S.shape}")
        L = _op_stack(self.L, self.n_ports)
        H = np.asarray(self.H, dtype=complex)
        if H.shape != L.shape[1:]:
            raise ValueError("H must act on the same space as the coupling operators")
        _check_hermitian(H, "H")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "H", H)

    @property
    def dim(self) -> int:
        return self.H.shape[0]


def identity_triple(n_ports: int, dim: int) -> SLHTriple:
    """Passive pass-through: S = 1, no coupling, no Hamiltonian."""
    return SLHTriple(n_ports=n_ports, S=np.eye(n_ports, dtype=complex),
                     L=np.zeros((n_ports, dim, dim), dtype=complex),
                     H=np.zeros((dim, dim), dtype=complex))


def static_triple(S: np.ndarray, dim: int) -> SLHTriple:
    """Purely scattering component (no coupling, no Hamiltonian)."""
    S = np.asarray(S, dtype=complex)
    n = S.shape[0]
    return SLHTriple(n_ports=n, S=S,
                     L=np.zeros((n, dim, dim), dtype=complex),
                     H=np.zeros((dim, dim), dtype=complex))


def drive_triple(alpha, dim: int) -> SLHTriple:
    """Classical displacement of the input fields: L_j = alpha_j * identity."""
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    n = alpha.size
    eye = np.eye(dim, dtype=complex)
    L = alpha[:, None, None] * eye[None, :, :]
    return SLHTriple(n_ports=n, S=np.eye(n, dtype=complex), L=L,
                     H=np.zeros((dim, dim), dtype=complex))


def series(G2: SLHTriple, G1: SLHTriple) -> SLHTriple:
    """Series product with G1 upstream feeding G2 downstream.

    S = S2 S1, L = L2 + S2 L1, and the interference term
    -(i/2)(L2^dag S2 L1 - h.c.) adds to H1 + H2.
    """
    if G1.n_ports != G2.n_ports:
        raise ValueError(f"port mismatch in series: {G2.n_ports} vs {G1.n_ports}")
    if G1.dim != G2.dim:
        raise ValueError("series requires triples on the same Hilbert space")
    S = G2.S @ G1.S
    L = G2.L + np.tensordot(G2.S, G1.L, axes=(1, 0))
    X = np.einsum("jk,jqa,kqc->ac", G2.S, G2.L.conj(), G1.L)
    H = G1.H + G2.H - 0.5j * (X - X.conj().T)
    return SLHTriple(n_ports=G1.n_ports, S=S, L=L, H=H)


def concat(G_a: SLHTriple, G_b: SLHTriple) -> SLHTriple:
    """Concatenation: block-diagonal S, stacked L, summed H."""
    if G_a.dim != G_b.dim:
        raise ValueError("concat requires triples on the same Hilbert space")
    n = G_a.n_ports + G_b.n_ports
    S = np.zeros((n, n), dtype=complex)
    S[:G_a.n_ports, :G_a.n_ports] = G_a.S
    S[G_a.n_ports:, G_a.n_ports:] = G_b.S
    L = np.concatenate([G_a.L, G_b.L], axis=0)
    return SLHTriple(n_ports=n, S=S, L=L, H=G_a.H + G_b.H)


def feedback_reduce(G: SLHTriple, out_ports, in_ports) -> SLHTriple:
    """Eliminate a feedback loop connecting out_ports back into in_ports.

    With o the fed-back outputs, i the fed-back inputs, e the retained
    exterior ports and R = (1 - S_oi)^{-1}:

        S' = S_ee + S_ei R S_oe
        L' = L_e + S_ei R L_o
        H' = H - (i/2)((sum_j L_j^dag S_ji) R L_o - h.c.)

    Raises when the resolvent is singular; its condition number is
    included in the error message.
    """
    out = tuple(int(p) for p in out_ports)
    inn = tuple(int(p) for p in in_ports)
    if len(out) != len(inn):
        raise ValueError("out_ports and in_ports must pair up one-to-one")
    n = G.n_ports
    for p in out + inn:
        if not 0 <= p < n:
            raise ValueError(f"port index {p} out of range for {n}-port triple")
    if len(set(out)) != len(out) or len(set(inn)) != len(inn):
        raise ValueError("feedback port indices must be distinct")
    ext_out = [p for p in range(n) if p not in out]
    ext_in = [p for p in range(n) if p not in inn]

    S_oi = G.S[np.ix_(out, inn)]
    M = np.eye(len(out), dtype=complex) - S_oi
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise ValueError(
            f"feedback resolvent (1 - S_internal) is singular (cond={cond:.3e})")
    R = np.linalg.inv(M)

    S_ei = G.S[np.ix_(ext_out, inn)]
    S_red = G.S[np.ix_(ext_out, ext_in)] + S_ei @ R @ G.S[np.ix_(out, ext_in)]
    L_out = G.L[list(out)]
    L_red = G.L[ext_out] + np.tensordot(S_ei @ R, L_out, axes=(1, 0))
    # the Hamiltonian correction sums over every output row, inner and outer
    T = G.S[:, list(inn)] @ R
    X = np.einsum("jk,jqa,kqc->ac", T, G.L.conj(), L_out)
    H_red = G.H - 0.5j * (X - X.conj().T)
    return SLHTriple(n_ports=len(ext_out), S=S_red, L=L_red, H=H_red)


@dataclass(frozen=True)
class ComposedSystem:
    """Reduced three-port system after eliminating the interior ports.

    S_wl scatters waveguide inputs to outputs around the loop; L_wl couples
    the loop to the waveguides; H_s is the capacitive frequency-shift term,
    H_d the coherent drive term.  L_tot includes the scattered drive
    displacement and H_tot_rot the full rotating-frame Hamiltonian.  The
    ingredients (bare loop couplings, drive amplitudes, waveguide block)
    ride along for the dynamics solvers.
    """

    S_wl: np.ndarray
    L_wl: np.ndarray
    H_s: np.ndarray
    H_d: np.ndarray
    L_tot: np.ndarray
    H_tot_rot: np.ndarray
    alpha: np.ndarray
    L_loop: np.ndarray
    A: WaveguideScattering

    def __post_init__(self):
        _check_hermitian(np.asarray(self.H_s), "H_s")
        _check_hermitian(np.asarray(self.H_d), "H_d")

    @property
    def dim(self) -> int:
        return self.H_tot_rot.shape[0]


def compose_circulator(A: WaveguideScattering, L_loop, H_loop_rot,
                       alpha=(0.0, 0.0, 0.0)) -> ComposedSystem:
    """Compose drive, waveguide network and loop into the reduced system.

    H_loop_rot must already be in the rotating frame (omega_k - omega_d on
    the diagonal).  Closed form of the feedback-eliminated pipeline:
    S_wl = A11 + A12 (1-A22)^{-1} A21, L_wl = A12 (1-A22)^{-1} L_loop,
    H_s = -(i/2)(L_loop^dag A_s L_loop - h.c.) with A_s = A22 (1-A22)^{-1},
    then the drive enters through L_tot = L_wl + S_wl alpha and
    H_d = -(i/2)(L_wl^dag S_wl alpha - h.c.).
    """
    L_arr = _op_stack(L_loop, 3)
    dim = L_arr.shape[1]
    H0 = np.asarray(H_loop_rot, dtype=complex)
    alpha = np.asarray(alpha, dtype=complex).reshape(3)

    M = np.eye(3, dtype=complex) - A.A22
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise ValueError(
            f"feedback resolvent singular at drive frequency {A.omega_d} GHz "
            f"(cond={cond:.3e})")
    R = np.linalg.inv(M)

    S_wl = A.A11 + A.A12 @ R @ A.A21
    A_s = A.A22 @ R
    L_wl = np.tensordot(A.A12 @ R, L_arr, axes=(1, 0))
    X = np.einsum("jk,jqa,kqc->ac", A_s, L_arr.conj(), L_arr)
    H_s = -0.5j * (X - X.conj().T)

    beta = S_wl @ alpha
    Y = np.einsum("j,jca->ac", beta, L_wl.conj())
    H_d = -0.5j * (Y - Y.conj().T)
    eye = np.eye(dim, dtype=complex)
    L_tot = L_wl + beta[:, None, None] * eye[None, :, :]
    H_tot_rot = H0 + H_s + H_d
    return ComposedSystem(S_wl=S_wl, L_wl=L_wl, H_s=H_s, H_d=H_d,
                          L_tot=L_tot, H_tot_rot=H_tot_rot,
                          alpha=alpha, L_loop=L_arr, A=A)


def compose_via_algebra(A: WaveguideScattering, L_loop, H_loop_rot,
                        alpha=(0.0, 0.0, 0.0)) -> SLHTriple:
    """Same composition built step by step from the algebra primitives.

    Exists as an independent cross-check on compose_circulator: series the
    loop into the waveguide block, feed the interior ports back, then feed
    the drive displacement in upstream.
    """
    L_arr = _op_stack(L_loop, 3)
    dim = L_arr.shape[1]
    G_loop = SLHTriple(n_ports=3, S=np.eye(3, dtype=complex), L=L_arr,
                       H=np.asarray(H_loop_rot, dtype=complex))
    G_pass = identity_triple(3, dim)
    G_wg = static_triple(A.A, dim)
    G_aug = series(G_wg, concat(G_pass, G_loop))
    G_fb = feedback_reduce(G_aug, out_ports=(3, 4, 5), in_ports=(3, 4, 5))
    return series(G_fb, drive_triple(alpha, dim))

import numpy as np
import pytest

from fanocirc.device import BiasPoint, coupling_operators, device_eigensystem
from fanocirc.network import waveguide_smatrix, waveguide_smatrix_limit
from fanocirc.slh import (
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


def _rand_triple(rng, n_ports, dim, passive=False):
    w = rng.normal(size=(n_ports, n_ports)) + 1j * rng.normal(size=(n_ports, n_ports))
    S, _ = np.linalg.qr(w)
    L = rng.normal(size=(n_ports, dim, dim)) + 1j * rng.normal(size=(n_ports, dim, dim))
    if passive:
        L = 0 * L
    h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    H = 0.5 * (h + h.conj().T)
    return SLHTriple(n_ports=n_ports, S=S, L=L, H=H)


def test_triple_validation():
    with pytest.raises(ValueError, match="S must be"):
        SLHTriple(n_ports=2, S=np.eye(3), L=np.zeros((2, 2, 2)), H=np.zeros((2, 2)))
    with pytest.raises(ValueError, match="coupling operators"):
        SLHTriple(n_ports=2, S=np.eye(2), L=np.zeros((3, 2, 2)), H=np.zeros((2, 2)))
    with pytest.raises(ValueError, match="Hermitian"):
        SLHTriple(n_ports=1, S=np.eye(1), L=np.zeros((1, 2, 2)),
                  H=np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_series_identity_neutral(rng):
    G = _rand_triple(rng, 3, 4)
    I = identity_triple(3, 4)
    for out in (series(I, G), series(G, I)):
        assert np.allclose(out.S, G.S)
        assert np.allclose(out.L, G.L)
        assert np.allclose(out.H, G.H)


def test_series_is_associative(rng):
    G1 = _rand_triple(rng, 2, 3)
    G2 = _rand_triple(rng, 2, 3)
    G3 = _rand_triple(rng, 2, 3)
    a = series(G3, series(G2, G1))
    b = series(series(G3, G2), G1)
    assert np.allclose(a.S, b.S)
    assert np.allclose(a.L, b.L)
    assert np.allclose(a.H, b.H)


def test_series_static_scatterers_multiply(rng):
    w1, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    w2, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    out = series(static_triple(w2, 2), static_triple(w1, 2))
    assert np.allclose(out.S, w2 @ w1)
    assert np.allclose(out.L, 0.0)
    assert np.allclose(out.H, 0.0)


def test_series_port_mismatch(rng):
    with pytest.raises(ValueError, match="port mismatch"):
        series(_rand_triple(rng, 2, 3), _rand_triple(rng, 3, 3))


def test_drive_triple_displaces():
    G = drive_triple([1.0 + 0.5j, 0.0, -2.0], dim=3)
    assert G.n_ports == 3
    assert np.allclose(G.L[0], (1.0 + 0.5j) * np.eye(3))
    assert np.allclose(G.L[1], 0.0)


def test_concat_blocks(rng):
    Ga = _rand_triple(rng, 2, 3)
    Gb = _rand_triple(rng, 1, 3)
    G = concat(Ga, Gb)
    assert G.n_ports == 3
    assert np.allclose(G.S[:2, :2], Ga.S)
    assert np.allclose(G.S[2:, 2:], Gb.S)
    assert np.allclose(G.S[:2, 2:], 0.0)
    assert np.allclose(G.L[:2], Ga.L)
    assert np.allclose(G.H, Ga.H + Gb.H)


def test_feedback_validation(rng):
    G = _rand_triple(rng, 4, 2)
    with pytest.raises(ValueError, match="one-to-one"):
        feedback_reduce(G, (0, 1), (2,))
    with pytest.raises(ValueError, match="out of range"):
        feedback_reduce(G, (7,), (0,))
    with pytest.raises(ValueError, match="distinct"):
        feedback_reduce(G, (1, 1), (2, 3))


def test_feedback_singular_resolvent():
    # S_oi = 1 makes (1 - S_oi) exactly singular
    G = identity_triple(2, 2)
    with pytest.raises(ValueError, match="singular"):
        feedback_reduce(G, (1,), (1,))


def test_feedback_matches_series_for_cascade(rng):
    """Wiring the first block's output into the second reproduces series().

    This is the textbook network identity the reduction must obey: a
    concatenation with one internal connection collapses to the cascade.
    """
    dim = 3
    Ga = _rand_triple(rng, 1, dim)
    Gb = _rand_triple(rng, 1, dim)
    big = concat(Ga, Gb)
    red = feedback_reduce(big, out_ports=(0,), in_ports=(1,))
    ser = series(Gb, Ga)
    assert np.allclose(red.S, ser.S)
    assert np.allclose(red.L, ser.L)
    assert np.allclose(red.H, ser.H)


def _loop_ingredients(params, bias, sector, omega_d):
    es = device_eigensystem(params, bias, sector)
    Ls = coupling_operators(es, params.Gamma)
    H_rot = np.diag(es.omega_k) - omega_d * np.diag(np.arange(params.n_levels))
    return es, Ls, H_rot


def test_closed_form_matches_algebraic_pipeline(small_params, op_bias, sector0):
    """The hand-reduced composition equals the generic SLH network reduction."""
    omega_d = 7.27
    _, Ls, H_rot = _loop_ingredients(small_params, op_bias, sector0, omega_d)
    A = waveguide_smatrix(small_params, omega_d)
    alpha = (0.011, 0.0, 0.0)
    fast = compose_circulator(A, Ls, H_rot, alpha)
    slow = compose_via_algebra(A, Ls, H_rot, alpha)
    assert np.max(np.abs(fast.S_wl - slow.S)) < 1e-10
    assert np.max(np.abs(fast.L_tot - slow.L)) < 1e-10
    assert np.max(np.abs(fast.H_tot_rot - slow.H)) < 1e-10


def test_compose_zero_shunt_passthrough(small_params, op_bias, sector0):
    """With z = 0 the network is transparent: S_wl = 1, L_wl = bare loop."""
    omega_d = 7.27
    _, Ls, H_rot = _loop_ingredients(small_params, op_bias, sector0, omega_d)
    A = waveguide_smatrix_limit(0.0, omega_d=omega_d)
    cs = compose_circulator(A, Ls, H_rot)
    assert np.allclose(cs.S_wl, np.eye(3))
    assert np.max(np.abs(cs.L_wl - np.asarray(Ls))) < 1e-12
    assert np.max(np.abs(cs.H_s)) < 1e-12


def test_compose_undriven_has_no_drive_term(small_params, op_bias, sector0):
    omega_d = 7.27
    _, Ls, H_rot = _loop_ingredients(small_params, op_bias, sector0, omega_d)
    A = waveguide_smatrix(small_params, omega_d)
    cs = compose_circulator(A, Ls, H_rot)
    assert np.max(np.abs(cs.H_d)) == 0.0
    assert np.max(np.abs(cs.L_tot - cs.L_wl)) == 0.0


def test_compose_swl_unitary(small_params, op_bias, sector0):
    omega_d = 7.27
    _, Ls, H_rot = _loop_ingredients(small_params, op_bias, sector0, omega_d)
    A = waveguide_smatrix(small_params, omega_d)
    cs = compose_circulator(A, Ls, H_rot)
    defect = np.max(np.abs(cs.S_wl.conj().T @ cs.S_wl - np.eye(3)))
    assert defect < 1e-12

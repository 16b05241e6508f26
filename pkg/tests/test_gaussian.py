import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from stellar.errors import DimensionError, ParameterRangeError, TruncationError
from stellar.fock import FockState, basis_state, fidelity, normalize_amplitudes, tensor
from stellar.gaussian import (
    GaussianCircuit,
    apply_circuit,
    beamsplitter_apply,
    displacement_matrix,
    gaussian_rows,
    n_passive,
    passive_matrix,
    photon_number_expectation,
    rotation_matrix,
    squeezing_matrix,
)
from stellar.states import coherent_amplitudes


def ladder(dim):
    return np.diag(np.sqrt(np.arange(1, dim)), 1)


def expm_displacement(alpha, dim):
    a = ladder(dim)
    return expm(alpha * a.T - np.conj(alpha) * a)


def expm_squeezing(r, phase, dim):
    a = ladder(dim)
    xi = r * np.exp(1j * phase)
    return expm(0.5 * (xi * a.T @ a.T - np.conj(xi) * a @ a))


def random_state(seed, modes=1, cutoff=5):
    rng = np.random.default_rng(seed)
    shape = (cutoff + 1,) * modes
    return FockState(modes, cutoff, normalize_amplitudes(rng.normal(size=shape) + 1j * rng.normal(size=shape)))


def test_displacement_examples():
    d = displacement_matrix(1.0, 40)
    assert d[0, 0] == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert d[0, 0] == pytest.approx(0.60653, abs=1e-5)
    assert np.array_equal(displacement_matrix(0.0, 8), np.eye(9))
    alpha = 0.7 - 0.4j
    ref = expm_displacement(alpha, 61)
    assert displacement_matrix(alpha, 60)[1, 0] == pytest.approx(alpha * math.exp(-abs(alpha) ** 2 / 2), abs=1e-14)
    assert abs(ref[1, 0] - alpha * math.exp(-abs(alpha) ** 2 / 2)) < 1e-10


def test_squeezing_examples():
    s = squeezing_matrix(1.0, 0.0, 80)
    assert s[0, 0] == pytest.approx(math.cosh(1.0) ** -0.5, abs=1e-15)
    assert s[0, 0] == pytest.approx(0.8051, abs=1e-4)
    ref = expm_squeezing(1.0, 0.0, 81)
    assert abs(ref[0, 0] - s[0, 0]) < 1e-8
    for r in (-0.8, 0.3, 1.7):
        m = squeezing_matrix(r, 0.4, 12)
        assert np.all(m[1::2, 0::2] == 0) and np.all(m[0::2, 1::2] == 0)
    assert np.allclose(squeezing_matrix(0.0, 0.0, 6), np.eye(7))
    with pytest.raises(ParameterRangeError):
        squeezing_matrix(3.1, 0.0, 5)


@pytest.mark.parametrize("alpha", [0.3, 1.0 + 0.5j, -1.2j, 2.0])
def test_displacement_matches_expm(alpha):
    # expm of the truncated generator is accurate well inside its cutoff
    ref = expm_displacement(alpha, 200)[:40, :40]
    assert np.abs(displacement_matrix(alpha, 39) - ref).max() < 1e-8


@pytest.mark.parametrize("r, phase", [(0.4, 0.0), (-1.0, 1.1), (1.5, 2.5)])
def test_squeezing_matches_expm(r, phase):
    ref = expm_squeezing(r, phase, 400)[:30, :30]
    assert np.abs(squeezing_matrix(r, phase, 29) - ref).max() < 1e-8


def test_combined_rows_match_product():
    r, theta, alpha = 0.8, 0.3, 1.1 - 0.6j
    ref = (expm_squeezing(r, theta, 300) @ expm_displacement(alpha, 300))[:25, :25]
    assert np.abs(gaussian_rows(r, theta, alpha, 25, 25) - ref).max() < 1e-8


def test_unitarity_on_resolved_block():
    # columns up to 20 stay inside cutoff 400 for |r| <= 1, |alpha| <= 2
    rng = np.random.default_rng(7)
    for _ in range(8):
        r = rng.uniform(-1, 1)
        alpha = 2 * math.sqrt(rng.uniform()) * np.exp(2j * math.pi * rng.uniform())
        m = gaussian_rows(r, rng.uniform(0, 2 * math.pi), alpha, 401, 401)
        err = np.abs(m.conj().T @ m - np.eye(401))[:21, :21].max()
        assert err < 1e-8


def test_rotation_examples():
    assert np.allclose(rotation_matrix(0.0, 5), np.eye(6))
    assert rotation_matrix(math.pi, 3)[1, 1] == pytest.approx(-1)
    assert rotation_matrix(math.pi / 2, 3)[2, 2] == pytest.approx(-1)


def test_beamsplitter_single_photon_sign():
    out = beamsplitter_apply(math.pi / 4, basis_state((1, 0), 1))
    s = -1.0
    assert out.amps[1, 0] == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert out.amps[0, 1] == pytest.approx(s / math.sqrt(2), abs=1e-15)
    theta = 0.37
    one = beamsplitter_apply(theta, basis_state((1, 0), 1))
    ref = expm(theta * np.array([[0, 1], [-1, 0]]))  # generator on (|1,0>, |0,1>)
    assert one.amps[1, 0] == pytest.approx(ref[0, 0])
    assert one.amps[0, 1] == pytest.approx(ref[1, 0])
    assert ref[1, 0] == pytest.approx(-math.sin(theta))


def test_beamsplitter_identity_and_errors():
    psi = random_state(1, 2, 4)
    out = beamsplitter_apply(0.0, psi)
    assert np.allclose(out.amps, psi.padded(out.cutoff).amps)
    with pytest.raises(DimensionError):
        beamsplitter_apply(0.3, psi, modes=(0, 0))
    with pytest.raises(DimensionError):
        beamsplitter_apply(0.3, psi, modes=(0, 2))


def test_hong_ou_mandel():
    out = beamsplitter_apply(math.pi / 4, basis_state((1, 1), 2))
    assert abs(out.amps[1, 1]) < 1e-15
    assert abs(out.amps[2, 0]) ** 2 == pytest.approx(0.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(-math.pi, math.pi), st.integers(2, 3))
def test_beamsplitter_conserves_photons(seed, theta, modes):
    psi = random_state(seed, modes, 3)
    pair = (0, modes - 1)
    out = beamsplitter_apply(theta, psi, pair)
    assert photon_number_expectation(out) == pytest.approx(photon_number_expectation(psi), abs=1e-10)
    assert out.norm_squared == pytest.approx(1.0, abs=1e-12)


def test_apply_circuit_identity():
    psi = random_state(5, 2, 4)
    out = apply_circuit(GaussianCircuit.identity(2), psi)
    assert np.allclose(out.amps, psi.amps, atol=1e-14)


def test_displacement_gives_coherent_state():
    g = GaussianCircuit(1, alphas=(1.0,))
    out = apply_circuit(g, basis_state(0, 40))
    coh = FockState(1, 40, coherent_amplitudes(1.0, 40))
    assert fidelity(out, coh) >= 1 - 1e-10


def test_apply_circuit_leak_error():
    g = GaussianCircuit(1, alphas=(3.0,), rs=(1.0,))
    with pytest.raises(TruncationError) as info:
        apply_circuit(g, basis_state(0, 10))
    assert info.value.leak > 1e-6


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_unitarity_on_random_states(seed):
    rng = np.random.default_rng(seed)
    psi = random_state(seed, 1, 6)
    g = GaussianCircuit(
        1,
        passive=(rng.uniform(0, 6.3),),
        alphas=(2 * math.sqrt(rng.uniform()) * np.exp(2j * math.pi * rng.uniform()),),
        rs=(rng.uniform(-1, 1),),
    )
    out = apply_circuit(g, psi, out_cutoff=300)
    assert out.norm_squared == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_fidelity_gaussian_invariance(seed):
    rng = np.random.default_rng(seed)
    a, b = random_state(seed, 2, 3), random_state(seed + 1, 2, 3)
    g = GaussianCircuit(
        2,
        passive=tuple(rng.uniform(0, 2 * math.pi, n_passive(2))),
        alphas=tuple(rng.uniform(-1, 1, 2) + 1j * rng.uniform(-1, 1, 2)),
        rs=tuple(rng.uniform(-0.5, 0.5, 2)),
    )
    ga, gb = apply_circuit(g, a, out_cutoff=60), apply_circuit(g, b, out_cutoff=60)
    assert fidelity(ga, gb) == pytest.approx(fidelity(a, b), abs=1e-8)


def test_circuit_matches_mode_transformation():
    # the Fock action on a single photon reproduces the passive mode matrix
    rng = np.random.default_rng(3)
    for modes in (2, 3):
        passive = rng.uniform(0, 2 * math.pi, n_passive(modes))
        mat = passive_matrix(modes, passive)
        g = GaussianCircuit(modes, passive=tuple(passive))
        for i in range(modes):
            idx = [0] * modes
            idx[i] = 1
            out = apply_circuit(g, basis_state(tuple(idx), 1))
            for j in range(modes):
                jdx = [0] * modes
                jdx[j] = 1
                assert out.amps[tuple(jdx)] == pytest.approx(mat[j, i], abs=1e-12)


@pytest.mark.parametrize("modes", [2, 3, 4])
def test_passive_mesh_spans_unitary_group(modes):
    # Jacobian of the mode matrix at a generic point has rank m^2 = dim U(m)
    rng = np.random.default_rng(modes)
    x = rng.uniform(0, 2 * math.pi, n_passive(modes))
    h = 1e-6
    cols = []
    for k in range(x.size):
        dx = np.zeros_like(x)
        dx[k] = h
        d = (passive_matrix(modes, x + dx) - passive_matrix(modes, x - dx)) / (2 * h)
        cols.append(np.concatenate([d.real.ravel(), d.imag.ravel()]))
    assert np.linalg.matrix_rank(np.array(cols).T, tol=1e-6) == modes * modes
    u = passive_matrix(modes, x)
    assert np.allclose(u.conj().T @ u, np.eye(modes))


def test_circuit_json_roundtrip():
    g = GaussianCircuit(2, passive=(0.1, 0.2, 0.3, 0.4), alphas=(1 + 2j, -0.5j), rs=(0.2, -1.0))
    back = GaussianCircuit.from_json(g.to_json())
    assert back == g
    assert g.to_json()["mesh"] == "rect-bs-phase-v1"
    assert np.allclose(GaussianCircuit.from_vector(2, g.to_vector()).to_vector(), g.to_vector())
    with pytest.raises(ParameterRangeError):
        GaussianCircuit(1, rs=(3.5,))


def test_tensor_of_circuits_is_local():
    a, b = random_state(1, 1, 4), random_state(2, 1, 4)
    g = GaussianCircuit(2, alphas=(0.3, -0.2j), rs=(0.2, -0.1))
    ga = apply_circuit(GaussianCircuit(1, alphas=(0.3,), rs=(0.2,)), a, out_cutoff=40)
    gb = apply_circuit(GaussianCircuit(1, alphas=(-0.2j,), rs=(-0.1,)), b, out_cutoff=40)
    joint = apply_circuit(g, tensor(a, b), out_cutoff=40)
    assert np.allclose(joint.amps, tensor(ga, gb).amps, atol=1e-12)

from __future__ import annotations

from functools import reduce

import numpy as np
import pytest
from scipy.linalg import expm

from dqaoa.ising import IsingModel, brute_force_min, energy
from dqaoa.qaoa import (
    QaoaConfig,
    QaoaResult,
    ansatz,
    apply_mixer,
    apply_phase,
    expectation,
    hamiltonian_diagonal,
    optimize,
    sample_decode,
    uniform_state,
)

I2 = np.eye(2)
PAULI_Z = np.diag([1.0, -1.0])
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])


def op_on(k: int, n: int, op: np.ndarray) -> np.ndarray:
    mats = [I2] * n
    mats[k] = op
    # bit k of the index is qubit k, so the kron chain runs high bit first
    return reduce(np.kron, [mats[j] for j in reversed(range(n))])


def dense_hamiltonian(model: IsingModel) -> np.ndarray:
    dim = 1 << model.n
    h = model.offset * np.eye(dim)
    for (i, j), w in model.quadratic.items():
        h += w * op_on(i, model.n, PAULI_Z) @ op_on(j, model.n, PAULI_Z)
    for i, w in model.linear.items():
        h += w * op_on(i, model.n, PAULI_Z)
    return h


def random_model(rng, n: int) -> IsingModel:
    lin = {i: float(rng.integers(-3, 4)) for i in range(n) if rng.random() < 0.7}
    quad = {
        (i, j): float(rng.integers(-3, 4))
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < 0.6
    }
    quad = {k: v for k, v in quad.items() if v}
    return IsingModel(n, lin, quad, offset=float(rng.integers(-2, 3)))


def test_diagonal_matches_dense_hamiltonian():
    rng = np.random.default_rng(0)
    for n in (1, 2, 3):
        for _ in range(5):
            model = random_model(rng, n)
            diag = hamiltonian_diagonal(model)
            dense = dense_hamiltonian(model)
            assert np.allclose(diag, np.diag(dense), atol=1e-12)


def test_phase_layer_matches_expm():
    rng = np.random.default_rng(1)
    for n in (1, 2, 3):
        model = random_model(rng, n)
        diag = hamiltonian_diagonal(model)
        state = uniform_state(n)
        for gamma in (0.3, 1.7):
            u = expm(-1j * gamma * dense_hamiltonian(model))
            assert np.allclose(apply_phase(state, gamma, diag), u @ state, atol=1e-10)


def test_mixer_layer_matches_expm():
    rng = np.random.default_rng(2)
    for n in (1, 2, 3):
        state = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        state /= np.linalg.norm(state)
        mixer = sum(op_on(k, n, PAULI_X) for k in range(n))
        for beta in (0.2, 2.9):
            u = expm(-1j * beta * mixer)
            assert np.allclose(apply_mixer(state, beta), u @ state, atol=1e-10)


def test_full_ansatz_matches_dense_circuit():
    rng = np.random.default_rng(3)
    for n in (2, 3):
        model = random_model(rng, n)
        diag = hamiltonian_diagonal(model)
        gammas, betas = rng.uniform(0, np.pi, 2), rng.uniform(0, 2 * np.pi, 2)
        mixer = sum(op_on(k, n, PAULI_X) for k in range(n))
        state = uniform_state(n)
        for g, b in zip(gammas, betas):
            state = expm(-1j * b * mixer) @ (expm(-1j * g * dense_hamiltonian(model)) @ state)
        assert np.allclose(ansatz(diag, gammas, betas), state, atol=1e-10)


def test_norm_preserved_over_hundred_layers():
    rng = np.random.default_rng(4)
    model = random_model(rng, 4)
    diag = hamiltonian_diagonal(model)
    gammas = rng.uniform(0, np.pi, 100)
    betas = rng.uniform(0, 2 * np.pi, 100)
    state = ansatz(diag, gammas, betas)
    assert abs(np.linalg.norm(state) - 1.0) < 1e-10


def test_uniform_state_expectation_is_offset():
    rng = np.random.default_rng(5)
    for _ in range(10):
        model = random_model(rng, 4)
        diag = hamiltonian_diagonal(model)
        assert expectation(uniform_state(4), diag) == pytest.approx(
            model.offset, abs=1e-12
        )


def test_mixer_beta_zero_is_identity():
    state = uniform_state(3) * np.exp(1j * np.arange(8))
    assert np.allclose(apply_mixer(state, 0.0), state, atol=1e-15)


def test_mixer_half_pi_flips_bits():
    state = np.zeros(4, dtype=complex)
    state[0b00] = 1.0
    out = apply_mixer(state, np.pi / 2)
    # each qubit picks up a -i: |00> -> (-i)^2 |11>
    expected = np.zeros(4, dtype=complex)
    expected[0b11] = (-1j) ** 2
    assert np.allclose(out, expected, atol=1e-12)


def test_phase_and_expectation_dimension_checks():
    with pytest.raises(ValueError):
        apply_phase(uniform_state(2), 0.1, np.zeros(8))
    with pytest.raises(ValueError):
        expectation(uniform_state(2), np.zeros(8))


def test_solve_single_spin():
    model = IsingModel(1, {0: 1.0})
    res = optimize(model, QaoaConfig(seed=0, iterations=60))
    assert list(res.z) == [-1]
    assert res.value == -1.0


def test_solve_finds_ground_state_of_small_models():
    rng = np.random.default_rng(6)
    hits = 0
    for trial in range(10):
        model = random_model(rng, 5)
        res = optimize(model, QaoaConfig(seed=trial, p=2, iterations=40))
        _, best = brute_force_min(model)
        assert res.value >= best - 1e-12
        assert energy(model, res.z) == pytest.approx(res.value, abs=1e-9)
        hits += res.value == pytest.approx(best, abs=1e-9)
    # best-of-1024-shots decoding should land the optimum almost always
    assert hits >= 8


def test_solve_empty_model():
    res = optimize(IsingModel(0, offset=3.5))
    assert res.value == 3.5
    assert res.z.size == 0


def test_solve_is_deterministic_under_seed():
    model = IsingModel(4, {0: 1.0}, {(0, 1): -2.0, (2, 3): 1.0, (1, 2): 0.5})
    a = optimize(model, QaoaConfig(seed=11))
    b = optimize(model, QaoaConfig(seed=11))
    assert list(a.z) == list(b.z)
    assert a.value == b.value
    assert np.array_equal(a.gammas, b.gammas)


def test_argmax_decode_path():
    model = IsingModel(2, {0: -1.0, 1: -1.0})
    res = optimize(model, QaoaConfig(seed=0, decode="argmax", iterations=50))
    assert res.value == energy(model, res.z)


def test_fixed_angle_diagnostic_mode():
    # restarts=0: gamma=beta=0, the uniform state; expectation is the offset
    model = IsingModel(3, {0: 2.0}, {(0, 1): -1.0, (1, 2): 3.0})
    res = optimize(model, QaoaConfig(seed=5, restarts=0))
    assert res.expectation == pytest.approx(0.0, abs=1e-12)
    assert np.all(res.gammas == 0.0) and np.all(res.betas == 0.0)


def test_top_states_sorted_and_bounded():
    model = IsingModel(3, {0: 1.0, 1: -2.0}, {(0, 2): 1.5})
    res = optimize(model, QaoaConfig(seed=3))
    probs = [p for _, p in res.top_states]
    assert probs == sorted(probs, reverse=True)
    assert sum(probs) <= 1.0 + 1e-12
    assert len(res.top_states) <= 8


def test_sample_decode_on_basis_state():
    model = IsingModel(2, {0: 1.0, 1: 1.0})
    state = np.zeros(4, dtype=complex)
    state[0b10] = 1.0  # z = (+1, -1)
    z, val = sample_decode(state, model, QaoaConfig(seed=0, shots=4))
    assert list(z) == [1, -1]
    assert val == 0.0


def test_qubit_cap_enforced():
    with pytest.raises(ValueError, match="at most"):
        hamiltonian_diagonal(IsingModel(SIMULATOR_CAP_PLUS_ONE))


SIMULATOR_CAP_PLUS_ONE = 21


def test_config_validation():
    with pytest.raises(ValueError):
        QaoaConfig(p=0)
    with pytest.raises(ValueError):
        QaoaConfig(decode="median")
    with pytest.raises(ValueError):
        QaoaConfig(shots=0)
    with pytest.raises(ValueError):
        QaoaConfig(restarts=-1)
    QaoaConfig(restarts=0)  # diagnostic mode is allowed


def test_ansatz_rejects_mismatched_angles():
    diag = hamiltonian_diagonal(IsingModel(2, {0: 1.0}))
    with pytest.raises(ValueError):
        ansatz(diag, [0.1, 0.2], [0.3])

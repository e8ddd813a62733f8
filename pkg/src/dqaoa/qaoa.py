"""Statevector QAOA for small Ising models.

Basis convention: bit k of the amplitude index addresses qubit k, and a
clear bit means z_k = +1 (so z = 1 - 2*bit). Cost layers multiply by
exp(-i*gamma*E) on the energy diagonal; mixer layers rotate every qubit
with exp(-i*beta*X).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .ising import IsingModel, all_energies

SIMULATOR_CAP = 20
TOP_K = 8


@dataclass
class QaoaConfig:
    p: int = 1
    iterations: int = 20
    restarts: int = 5
    shots: int = 1024
    seed: int | None = None
    decode: str = "shots"

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.iterations < 1 or self.shots < 1:
            raise ValueError("iterations and shots must be >= 1")
        if self.restarts < 0:
            # restarts=0 is the fixed-angle diagnostic mode (gamma=beta=0)
            raise ValueError("restarts must be >= 0")
        if self.decode not in ("shots", "argmax"):
            raise ValueError("decode must be 'shots' or 'argmax'")


@dataclass
class QaoaResult:
    z: np.ndarray
    value: float
    expectation: float
    gammas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    betas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    top_states: list[tuple[int, float]] = field(default_factory=list)


def hamiltonian_diagonal(model: IsingModel) -> np.ndarray:
    if model.n > SIMULATOR_CAP:
        raise ValueError(
            f"simulator handles at most {SIMULATOR_CAP} qubits, got {model.n}"
        )
    return all_energies(model)


def uniform_state(n: int) -> np.ndarray:
    dim = 1 << n
    return np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)


def apply_phase(state: np.ndarray, gamma: float, diag: np.ndarray) -> np.ndarray:
    if state.shape != diag.shape:
        raise ValueError("state and diagonal dimensions differ")
    return state * np.exp(-1j * gamma * diag)


def apply_mixer(state: np.ndarray, beta: float) -> np.ndarray:
    n = int(state.size).bit_length() - 1
    if state.size != 1 << n:
        raise ValueError("state length must be a power of two")
    c, s = np.cos(beta), np.sin(beta)
    out = state
    for k in range(n):
        # axis 1 of this view runs over bit k of the index
        view = out.reshape(-1, 2, 1 << k)
        a, b = view[:, 0, :], view[:, 1, :]
        out = np.stack((c * a - 1j * s * b, -1j * s * a + c * b), axis=1).reshape(-1)
    return out


def ansatz(diag: np.ndarray, gammas, betas) -> np.ndarray:
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    if gammas.shape != betas.shape:
        raise ValueError("gammas and betas must have equal length")
    n = int(diag.size).bit_length() - 1
    state = uniform_state(n)
    for g, b in zip(gammas, betas):
        state = apply_mixer(apply_phase(state, g, diag), b)
    return state


def expectation(state: np.ndarray, diag: np.ndarray) -> float:
    if state.shape != diag.shape:
        raise ValueError("state and diagonal dimensions differ")
    return float(np.sum(np.abs(state) ** 2 * diag).real)


def _top_states(probs: np.ndarray, k: int = TOP_K) -> list[tuple[int, float]]:
    order = np.argsort(-probs, kind="stable")[:k]
    return [(int(i), float(probs[i])) for i in order]


def sample_decode(
    state: np.ndarray, model: IsingModel, config: QaoaConfig | None = None, rng=None
) -> tuple[np.ndarray, float]:
    """Pick a bitstring from the final state: lowest-energy sample out of
    `shots` draws, or the most probable basis state (ties to lowest index)."""
    cfg = config or QaoaConfig()
    diag = hamiltonian_diagonal(model)
    if state.shape != diag.shape:
        raise ValueError("state and model dimensions differ")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    probs = np.abs(state) ** 2
    probs = probs / probs.sum()
    if cfg.decode == "argmax":
        idx = int(np.argmax(probs))
    else:
        sampled = rng.choice(probs.size, size=cfg.shots, p=probs)
        uniq = np.unique(sampled)
        idx = int(uniq[np.argmin(diag[uniq])])
    return _index_to_spins(idx, model.n), float(diag[idx])


def _index_to_spins(idx: int, n: int) -> np.ndarray:
    bits = (idx >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(int)


def optimize(model: IsingModel, config: QaoaConfig | None = None) -> QaoaResult:
    """Restarted Nelder-Mead over the 2p angles, then decode the best state.

    restarts=0 skips the search and evaluates fixed angles gamma=beta=0
    (uniform superposition), useful as a diagnostic baseline.
    """
    cfg = config or QaoaConfig()
    if model.n == 0:
        return QaoaResult(np.zeros(0, dtype=int), model.offset, model.offset)
    diag = hamiltonian_diagonal(model)
    rng = np.random.default_rng(cfg.seed)

    def objective(params):
        return expectation(ansatz(diag, params[: cfg.p], params[cfg.p:]), diag)

    if cfg.restarts == 0:
        best_params = np.zeros(2 * cfg.p)
        best_val = objective(best_params)
    else:
        best_val, best_params = np.inf, None
        for _ in range(cfg.restarts):
            x0 = np.concatenate(
                (rng.uniform(0.0, np.pi, cfg.p), rng.uniform(0.0, 2.0 * np.pi, cfg.p))
            )
            res = minimize(
                objective, x0, method="Nelder-Mead", options={"maxfev": cfg.iterations}
            )
            if res.fun < best_val:
                best_val, best_params = float(res.fun), np.asarray(res.x)

    gammas = best_params[: cfg.p]
    betas = np.mod(best_params[cfg.p:], 2.0 * np.pi)  # exact period of the mixer
    state = ansatz(diag, gammas, betas)
    z, value = sample_decode(state, model, cfg, rng)
    probs = np.abs(state) ** 2
    return QaoaResult(z, value, float(best_val), gammas, betas, _top_states(probs))

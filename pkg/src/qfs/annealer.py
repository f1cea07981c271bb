"""Quantum annealing simulation.

State evolution under H(s) = A(s) H_D + B(s) H_QUBO with the linear
schedule A(s) = 1-s, B(s) = s, starting from the uniform superposition
(the ground state of the driver H_D = -sum_p sigma_x).  Times are
dimensionless (hbar = 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import expm_multiply

from . import hilbert
from .qubo import QuboInstance
from .selection import SelectionResult, selected_indices

DEFAULT_TAU = 50.0
DEFAULT_DS = 0.01
GROUND_TOL = 1e-10


@dataclass
class AnnealSchedule:
    tau: float = DEFAULT_TAU
    ds: float = DEFAULT_DS

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if not 0.0 < self.ds <= 1.0:
            raise ValueError("ds must lie in (0, 1]")
        steps = 1.0 / self.ds
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(f"1/ds = {steps} is not an integer step count")
        self.num_steps = int(round(steps))

    @staticmethod
    def a(s: float) -> float:
        return 1.0 - s

    @staticmethod
    def b(s: float) -> float:
        return s


def init_state(d: int) -> np.ndarray:
    """Uniform superposition over all 2^d bitstrings."""
    if not 1 <= d <= hilbert.MAX_QUBITS:
        raise ValueError(f"d={d} outside [1, {hilbert.MAX_QUBITS}]")
    n = 1 << d
    return np.full(n, 1.0 / np.sqrt(n), dtype=complex)


def evolve(
    instance: QuboInstance,
    schedule: AnnealSchedule | None = None,
    method: str = "trotter2",
    state: np.ndarray | None = None,
) -> np.ndarray:
    """Evolve from the uniform superposition to s = 1.

    ``trotter2``: matrix-free symmetric splitting, half driver / full
    diagonal phase / half driver per step.  ``exact_step``: exact sparse
    matrix exponential of H(s_k) per step (reference path, small d).
    H(s) is sampled at the step midpoints s_k = (k + 1/2) * ds.
    """
    schedule = schedule or AnnealSchedule()
    instance.validate()
    d = instance.d
    psi = init_state(d) if state is None else state.astype(complex).copy()
    if schedule.tau == 0.0:
        return psi
    diag = hilbert.diagonal_energies(instance.J, instance.h, instance.beta)
    dt = schedule.tau * schedule.ds

    if method == "trotter2":
        # Substep so the splitting error stays small when tau*ds is large;
        # the schedule is still sampled once per ds step (midpoint rule).
        m = max(1, int(np.ceil(dt / 0.5)))
        dt_sub = dt / m
        for k in range(schedule.num_steps):
            s = (k + 0.5) * schedule.ds
            theta = 0.5 * dt_sub * schedule.a(s)
            phase = np.exp(-1j * dt_sub * schedule.b(s) * diag)
            for _ in range(m):
                hilbert.rotate_x_all(psi, d, theta)
                psi *= phase
                hilbert.rotate_x_all(psi, d, theta)
    elif method == "exact_step":
        if d > 14:
            raise ValueError("exact_step is the small-d reference path (d <= 14)")
        hd = hilbert.driver_matrix(d)
        hq = diags(diag)
        for k in range(schedule.num_steps):
            s = (k + 0.5) * schedule.ds
            hmat = schedule.a(s) * hd + schedule.b(s) * hq
            psi = expm_multiply(-1j * dt * hmat.tocsc(), psi)
    else:
        raise ValueError(f"unknown evolution method {method!r}")

    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-9:
        raise RuntimeError(f"evolution lost normalization: |psi| = {norm}")
    return psi


def sample(state: np.ndarray, n_shots: int, seed: int | None = None) -> dict[str, int]:
    """Measure ``n_shots`` i.i.d. outcomes from |amplitude|^2."""
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    probs = np.abs(state) ** 2
    probs = probs / probs.sum()
    d = int(np.log2(state.shape[0]))
    rng = np.random.default_rng(seed)
    draws = rng.choice(state.shape[0], size=n_shots, p=probs)
    counts = np.bincount(draws, minlength=state.shape[0])
    return {
        hilbert.index_to_bitstring(i, d): int(counts[i]) for i in np.flatnonzero(counts)
    }


def argmax_bitstring(state: np.ndarray) -> str:
    """Most probable outcome; ties resolve to the lowest numeric bitstring."""
    probs = np.abs(state) ** 2
    d = int(np.log2(state.shape[0]))
    return hilbert.index_to_bitstring(int(np.argmax(probs)), d)


def fidelity(state: np.ndarray, instance: QuboInstance) -> float:
    """Squared projection of the state onto the classical ground space."""
    diag = hilbert.diagonal_energies(instance.J, instance.h, instance.beta)
    mask = diag <= diag.min() + GROUND_TOL
    return float(np.sum(np.abs(state[mask]) ** 2))


def auto_shots(d: int) -> int:
    return d * d if d > 1 else 1


def anneal_select(
    instance: QuboInstance,
    schedule: AnnealSchedule | None = None,
    method: str = "trotter2",
    n_shots: int | None = None,
    seed: int | None = None,
    pick: str = "mode",
) -> SelectionResult:
    """Evolve, sample and report the selected feature maps.

    ``pick='mode'`` reports the histogram mode (lowest numeric bitstring
    on ties); ``pick='argmax'`` reports the deterministic most-probable
    state regardless of shot noise.
    """
    from .qubo import energy as qubo_energy

    state = evolve(instance, schedule, method=method)
    shots = auto_shots(instance.d) if n_shots is None else n_shots
    hist = sample(state, shots, seed=seed)
    if pick == "argmax":
        bits = argmax_bitstring(state)
    elif pick == "mode":
        best = max(hist.values())
        bits = min(b for b, c in hist.items() if c == best)
    else:
        raise ValueError(f"unknown pick mode {pick!r}")
    return SelectionResult(
        image_id=instance.image_id,
        class_label=instance.class_label,
        bitstring=bits,
        selected_fm_indices=selected_indices(bits, instance.index_map),
        energy=qubo_energy(instance, bits),
        method="qa",
        n_shots=shots,
        histogram=hist,
    )

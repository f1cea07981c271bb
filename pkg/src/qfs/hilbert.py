"""Low-level Hilbert-space helpers shared by the annealer and spectrum modules.

Conventions
-----------
A computational basis state of ``d`` qubits is labeled by an integer index
``i`` in ``[0, 2^d)``.  Variable ``p`` (the p-th filtered feature map) lives
on bit ``d-1-p`` of the index, i.e. variable 0 is the most significant bit.
With this layout the integer ordering of basis indices coincides with the
numeric ordering of the bitstrings read left to right, so "lowest numeric
bitstring" tie-breaks reduce to "lowest index".
"""

from __future__ import annotations

import numpy as np

# 2^26 complex128 amplitudes ~ 1 GiB; beyond this the SA solver takes over.
MAX_QUBITS = 26


def index_to_bitstring(i: int, d: int) -> str:
    """Render basis index ``i`` as the bitstring z_0 z_1 ... z_{d-1}."""
    return format(i, f"0{d}b")


def bitstring_to_index(bits: str) -> int:
    return int(bits, 2)


def bitstring_to_array(bits: str) -> np.ndarray:
    return np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")


def diagonal_energies(J: np.ndarray, h: np.ndarray, beta: float) -> np.ndarray:
    """Classical energies of all 2^d bitstrings, ordered by basis index.

    E(z) = (1-beta) * sum_{p<q} J_pq z_p z_q - beta * sum_p h_p z_p

    Built incrementally, appending one variable at a time, so no 2^d x d
    bit matrix is ever materialized.  Variables are appended from p = d-1
    down to p = 0 so that the final layout matches the bit convention
    above (variable 0 on the most significant bit).
    """
    d = h.shape[0]
    if d > MAX_QUBITS:
        raise ValueError(f"d={d} exceeds the 2^{MAX_QUBITS} diagonal cap")
    E = np.zeros(1)
    for p in range(d - 1, -1, -1):
        # Coupling of variable p with the already-placed variables q > p,
        # resolved per state of those variables.
        n_placed = E.shape[0]
        add = np.full(n_placed, -beta * h[p])
        if n_placed > 1:
            jsum = np.zeros(n_placed)
            for q in range(p + 1, d):
                b = d - 1 - q
                jsum.reshape(-1, 2, 1 << b)[:, 1, :] += J[p, q]
            add += (1.0 - beta) * jsum
        E = np.concatenate([E, E + add])
    return E


def apply_driver(v: np.ndarray, d: int) -> np.ndarray:
    """Apply H_D = -sum_p sigma_x^(p) to a state vector."""
    out = np.zeros_like(v)
    for b in range(d):
        out -= v.reshape(-1, 2, 1 << b)[:, ::-1, :].reshape(v.shape)
    return out


def rotate_x_all(psi: np.ndarray, d: int, theta: float) -> None:
    """Apply prod_p exp(i*theta*sigma_x^(p)) in place.

    This is the exact exponential of -i*theta*H_D since the single-qubit
    rotations commute.
    """
    c = np.cos(theta)
    s = 1j * np.sin(theta)
    for b in range(d):
        view = psi.reshape(-1, 2, 1 << b)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] = c * a0 + s * a1
        view[:, 1, :] = s * a0 + c * a1


def driver_matrix(d: int):
    """Sparse CSR matrix of H_D = -sum_p sigma_x^(p)."""
    from scipy import sparse

    n = 1 << d
    rows = np.repeat(np.arange(n), d)
    cols = np.empty(n * d, dtype=np.int64)
    for b in range(d):
        cols[b::d] = np.arange(n) ^ (1 << b)
    data = np.full(n * d, -1.0)
    return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

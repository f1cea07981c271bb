"""Classical reference solvers: exhaustive search and simulated annealing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from . import hilbert
from .qubo import QuboInstance
from .selection import SelectionResult, selected_indices

BRUTE_FORCE_CAP = 24
TIE_TOL = 1e-12
MAX_REPORTED_TIES = 16


@dataclass
class SaParams:
    num_reads: int = 1000
    num_sweeps: int = 1000
    sweeps_per_beta: int = 1
    beta_schedule: str = "linear"
    beta_range: tuple[float, float] | None = None  # None -> auto from the energy scale
    seed: int = 0

    def validate(self) -> None:
        if min(self.num_reads, self.num_sweeps, self.sweeps_per_beta) < 1:
            raise ValueError("all SA counts must be >= 1")
        if self.beta_schedule != "linear":
            raise ValueError(f"unsupported beta schedule {self.beta_schedule!r}")
        if self.beta_range is not None and not self.beta_range[0] < self.beta_range[1]:
            raise ValueError("beta_range must be increasing")


def auto_beta_range(instance: QuboInstance) -> tuple[float, float]:
    """Inverse-temperature ramp spanning the instance's energy scale."""
    scale = max(float(instance.h.max(initial=0.0)), float(instance.J.max(initial=0.0)))
    if scale <= 0.0:
        scale = 1.0
    return 0.1 / scale, 10.0 / scale


def brute_force(instance: QuboInstance) -> SelectionResult:
    """Exact ground state by enumerating all 2^d energies.

    Ties within 1e-12 are reported in the histogram (up to 16 of them);
    the canonical answer is the lowest numeric bitstring.
    """
    instance.validate()
    if instance.d > BRUTE_FORCE_CAP:
        raise ValueError(f"d={instance.d} exceeds brute-force cap {BRUTE_FORCE_CAP}")
    diag = hilbert.diagonal_energies(instance.J, instance.h, instance.beta)
    emin = float(diag.min())
    ties = np.flatnonzero(diag <= emin + TIE_TOL)
    best = int(ties[0])  # index order == numeric bitstring order
    bits = hilbert.index_to_bitstring(best, instance.d)
    hist = {
        hilbert.index_to_bitstring(int(i), instance.d): 1
        for i in ties[:MAX_REPORTED_TIES]
    }
    return SelectionResult(
        image_id=instance.image_id,
        class_label=instance.class_label,
        bitstring=bits,
        selected_fm_indices=selected_indices(bits, instance.index_map),
        energy=emin,
        method="exact",
        n_shots=len(hist),
        histogram=hist,
        degeneracy=int(ties.size),
    )


@njit(cache=True)
def _sa_read(Jq, hl, betas, sweeps_per_beta, seed):  # pragma: no cover - jitted
    d = hl.shape[0]
    np.random.seed(seed)
    z = (np.random.random(d) < 0.5).astype(np.int8)
    for b in range(betas.shape[0]):
        beta = betas[b]
        for _ in range(sweeps_per_beta):
            order = np.random.permutation(d)
            for idx in range(d):
                p = order[idx]
                field = -hl[p]
                for q in range(d):
                    if z[q]:
                        field += Jq[p, q]
                de = field if z[p] == 0 else -field
                if de <= 0.0 or np.random.random() < np.exp(-beta * de):
                    z[p] = 1 - z[p]
    # zero-temperature quench: descend greedily so each read ends in a
    # local minimum (removes stray thermal flips from the last sweep)
    improved = True
    while improved:
        improved = False
        for p in range(d):
            field = -hl[p]
            for q in range(d):
                if z[q]:
                    field += Jq[p, q]
            de = field if z[p] == 0 else -field
            if de < 0.0:
                z[p] = 1 - z[p]
                improved = True
    return z


@njit(cache=True, parallel=True)
def _sa_reads(Jq, hl, betas, sweeps_per_beta, seeds):  # pragma: no cover - jitted
    out = np.empty((seeds.shape[0], hl.shape[0]), dtype=np.int8)
    for r in prange(seeds.shape[0]):
        out[r] = _sa_read(Jq, hl, betas, sweeps_per_beta, seeds[r])
    return out


def simulated_anneal(instance: QuboInstance, params: SaParams | None = None) -> SelectionResult:
    """Metropolis single-spin-flip SA over a linear inverse-temperature ramp.

    Each read is one independent restart with its own RNG stream derived
    from (seed, read index); the best energy across reads is returned and
    the histogram collects the per-read final states.
    """
    from .qubo import energy as qubo_energy

    params = params or SaParams()
    params.validate()
    instance.validate()
    lo, hi = params.beta_range or auto_beta_range(instance)
    betas = np.linspace(lo, hi, params.num_sweeps)
    # Pre-weighted couplings so the jitted kernel sees the plain energy
    # function E(z) = sum Jq z z / const - sum hl z.
    Jq = (1.0 - instance.beta) * instance.J
    hl = instance.beta * instance.h
    read_seeds = (
        np.random.SeedSequence(params.seed).generate_state(params.num_reads) & 0x7FFFFFFF
    ).astype(np.int64)
    finals = _sa_reads(Jq, hl, betas, params.sweeps_per_beta, read_seeds)

    best_bits = None
    best_energy = np.inf
    hist: dict[str, int] = {}
    for r in range(params.num_reads):
        bits = "".join("1" if v else "0" for v in finals[r])
        hist[bits] = hist.get(bits, 0) + 1
        e = qubo_energy(instance, bits)
        if e < best_energy - TIE_TOL or (abs(e - best_energy) <= TIE_TOL and (best_bits is None or bits < best_bits)):
            best_energy, best_bits = e, bits
    return SelectionResult(
        image_id=instance.image_id,
        class_label=instance.class_label,
        bitstring=best_bits,
        selected_fm_indices=selected_indices(best_bits, instance.index_map),
        energy=float(best_energy),
        method="sa",
        n_shots=params.num_reads,
        histogram=hist,
    )

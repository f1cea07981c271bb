"""Instantaneous spectrum of H(s), minimum-gap tracking and law fitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.sparse.linalg import LinearOperator, eigsh

from . import hilbert
from .annealer import AnnealSchedule, GROUND_TOL
from .qubo import QuboInstance

DENSE_CUTOFF = 9  # below this, full diagonalization is cheaper than Lanczos


class SpectrumError(Exception):
    """Eigensolver failure (non-convergence)."""


@dataclass
class SpectrumTrace:
    s_grid: np.ndarray
    e0: np.ndarray
    e1: np.ndarray
    delta_min: float
    s_min: float
    ground_degeneracy_at_end: int


@dataclass
class LandauZenerFit:
    lam: float
    residual: float  # sum of squared residuals in fidelity space
    n_used: int


@dataclass
class GapScalingFit:
    exponent: float
    intercept: float
    per_d_means: dict[int, float]
    per_d_quartiles: dict[int, tuple[float, float]]
    hardest_instances: dict[int, float]


def _hamiltonian_operator(diag: np.ndarray, d: int, s: float) -> LinearOperator:
    a, b = 1.0 - s, s
    bdiag = b * diag

    def matvec(v):
        return a * hilbert.apply_driver(v, d) + bdiag * v

    n = diag.shape[0]
    return LinearOperator((n, n), matvec=matvec, dtype=float)


def low_spectrum(
    instance: QuboInstance,
    s: float,
    k: int = 2,
    method: str = "auto",
    return_vectors: bool = False,
):
    """The k lowest eigenvalues of H(s), ascending (with multiplicity).

    ``auto`` routes small systems to dense diagonalization and the rest to
    matrix-free Lanczos; ``dense``/``lanczos`` force a path.
    """
    instance.validate()
    d = instance.d
    n = 1 << d
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, 2^d]")
    diag = hilbert.diagonal_energies(instance.J, instance.h, instance.beta)

    if s == 1.0:
        # Diagonal Hamiltonian: eigenpairs are the classical states.
        order = np.argsort(diag, kind="stable")[:k]
        vals = diag[order]
        if return_vectors:
            vecs = np.zeros((n, k))
            vecs[order, np.arange(k)] = 1.0
            return vals, vecs
        return vals

    if method == "auto":
        method = "dense" if (d <= DENSE_CUTOFF or k >= n - 1) else "lanczos"
    if method == "dense":
        hmat = (1.0 - s) * hilbert.driver_matrix(d).toarray() + s * np.diag(diag)
        vals, vecs = eigh(hmat)
        return (vals[:k], vecs[:, :k]) if return_vectors else vals[:k]
    if method == "lanczos":
        op = _hamiltonian_operator(diag, d, s)
        try:
            vals, vecs = eigsh(op, k=k, which="SA", tol=1e-10, maxiter=max(1000, 5 * n // k))
        except Exception as exc:  # ArpackNoConvergence and friends
            raise SpectrumError(f"Lanczos failed at s={s}: {exc}") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        return (vals, vecs) if return_vectors else vals
    raise ValueError(f"unknown method {method!r}")


def gap_trace(instance: QuboInstance, schedule: AnnealSchedule | None = None) -> SpectrumTrace:
    """E0, E1 on the s-grid plus the minimum gap and its location.

    The grid contains both endpoints; s_min is the first grid point where
    the minimum gap is attained.
    """
    schedule = schedule or AnnealSchedule()
    s_grid = np.arange(schedule.num_steps + 1) * schedule.ds
    s_grid[-1] = 1.0
    e0 = np.empty_like(s_grid)
    e1 = np.empty_like(s_grid)
    for i, s in enumerate(s_grid):
        vals = low_spectrum(instance, float(s), k=2)
        e0[i], e1[i] = vals[0], vals[1]
    gaps = e1 - e0
    imin = int(np.argmin(gaps))
    diag = hilbert.diagonal_energies(instance.J, instance.h, instance.beta)
    degeneracy = int(np.sum(diag <= diag.min() + GROUND_TOL))
    return SpectrumTrace(
        s_grid=s_grid,
        e0=e0,
        e1=e1,
        delta_min=float(max(gaps[imin], 0.0)),
        s_min=float(s_grid[imin]),
        ground_degeneracy_at_end=degeneracy,
    )


def fit_landau_zener(points) -> LandauZenerFit:
    """Fit F = 1 - exp(-lambda * delta^2) on (delta_min, fidelity) pairs.

    Linearized least squares of -ln(1-F) on delta^2 through the origin,
    excluding saturated points (F within 1e-12 of 1).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (delta_min, fidelity) points")
    delta, fid = pts[:, 0], pts[:, 1]
    if np.any((fid < 0) | (fid > 1)):
        raise ValueError("fidelities must lie in [0, 1]")
    keep = fid < 1.0 - 1e-12
    if not np.any(keep):
        raise ValueError("all points saturated at F = 1; nothing to fit")
    x = delta[keep] ** 2
    y = -np.log1p(-fid[keep])
    denom = float(x @ x)
    if denom == 0.0:
        raise ValueError("degenerate fit: all gaps are zero")
    lam = max(float(x @ y) / denom, 0.0)
    pred = 1.0 - np.exp(-lam * delta**2)
    residual = float(np.sum((pred - fid) ** 2))
    return LandauZenerFit(lam=lam, residual=residual, n_used=int(keep.sum()))


def fit_gap_scaling(samples: dict[int, list[float]]) -> GapScalingFit:
    """Log-log regression of the mean minimum gap against d."""
    usable = {int(d): np.asarray(v, dtype=float) for d, v in samples.items() if len(v) >= 3}
    if len(usable) < 2:
        raise ValueError("need >= 2 distinct d values with >= 3 samples each")
    ds = np.array(sorted(usable))
    means = np.array([usable[d].mean() for d in ds])
    if np.any(means <= 0):
        raise ValueError("non-positive mean gap; cannot fit on log axes")
    exponent, intercept = np.polyfit(np.log(ds), np.log(means), 1)
    return GapScalingFit(
        exponent=float(exponent),
        intercept=float(intercept),
        per_d_means={int(d): float(usable[d].mean()) for d in ds},
        per_d_quartiles={
            int(d): (float(np.percentile(usable[d], 25)), float(np.percentile(usable[d], 75)))
            for d in ds
        },
        hardest_instances={int(d): float(usable[d].min()) for d in ds},
    )

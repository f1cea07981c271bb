"""Instance generators used by the test and acceptance suites.

``signature_instance`` mirrors the statistics the record pipeline
produces: a set of informative maps on nearly disjoint spatial supports
(so their mutual cosine similarities are small) plus a few redundant
near-duplicates with negligible importance.  ``uniform_instance`` is an
unstructured ensemble for property tests.
"""

from __future__ import annotations

import numpy as np

from .qubo import QuboInstance, assemble_qubo


def signature_instance(d: int, rng: np.random.Generator, beta: float = 0.7, npix: int = 64) -> QuboInstance:
    n_red = int(rng.integers(0, max(1, d // 3) + 1))
    n_sig = d - n_red
    maps = np.full((d, npix), 0.01)
    block = npix // max(n_sig, 1)
    for p in range(n_sig):
        sl = slice(p * block, (p + 1) * block)
        maps[p, sl] += np.abs(rng.normal(1.0, 0.3, size=block))
    h = np.empty(d)
    h[:n_sig] = rng.uniform(0.75, 1.0, n_sig)
    for r in range(n_sig, d):
        partner = int(rng.integers(0, n_sig))
        maps[r] = maps[partner] * rng.uniform(0.8, 1.2) + np.abs(rng.normal(0, 0.01, npix))
        h[r] = rng.uniform(0.01, 0.05)
    h /= h.max()
    unit = maps / np.linalg.norm(maps, axis=1, keepdims=True)
    J = np.clip(np.abs(unit @ unit.T), 0.0, 1.0)
    np.fill_diagonal(J, 0.0)
    return assemble_qubo(J, h, beta, np.arange(d))


def uniform_instance(d: int, rng: np.random.Generator, beta: float = 0.7) -> QuboInstance:
    J = rng.uniform(0.0, 1.0, size=(d, d))
    J = np.triu(J, k=1)
    J = J + J.T
    h = rng.uniform(0.05, 1.0, d)
    h /= h.max()
    return assemble_qubo(J, h, beta, np.arange(d))

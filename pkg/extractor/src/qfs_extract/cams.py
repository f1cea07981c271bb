"""Saliency maps at the hooked layer: GradCAM, GradCAM++ and the
selection-restricted map built from a ``qfs`` SelectionResult.

All maps are nonnegative and max-normalized to [0, 1].
"""

from __future__ import annotations

import numpy as np
import torch

from qfs.analytics import heatmap as qfs_heatmap
from qfs.archive import FeatureRecord
from qfs.qubo import filter_positive, importance
from qfs.selection import SelectionResult

from .extract import record_for_image

METHODS = ("gradcam", "gradcampp")


def _normalize(cam: np.ndarray) -> np.ndarray:
    cam = np.maximum(cam, 0.0)
    peak = cam.max()
    return cam / peak if peak > 0 else cam


def gradcam(activations: np.ndarray, gradients: np.ndarray) -> np.ndarray:
    """relu(sum_a mean(g_a) * A_a), max-normalized."""
    weights = gradients.reshape(gradients.shape[0], -1).mean(axis=1)
    return _normalize(np.tensordot(weights, activations, axes=1))


def gradcampp(activations: np.ndarray, gradients: np.ndarray) -> np.ndarray:
    """GradCAM++ weighting: alpha-weighted positive gradients per map."""
    g = gradients.astype(np.float64)
    a = activations.astype(np.float64)
    g2 = g**2
    g3 = g2 * g
    denom = 2.0 * g2 + np.sum(a, axis=(1, 2), keepdims=True) * g3
    alpha = np.where(denom != 0.0, g2 / np.where(denom != 0.0, denom, 1.0), 0.0)
    weights = np.sum(alpha * np.maximum(g, 0.0), axis=(1, 2))
    return _normalize(np.tensordot(weights, a, axes=1))


def cam_from_record(record: FeatureRecord, method: str) -> np.ndarray:
    if method == "gradcam":
        return gradcam(record.activations, record.gradients)
    if method == "gradcampp":
        return gradcampp(record.activations, record.gradients)
    raise ValueError(f"unknown CAM method {method!r}")


def fgradcam_map(
    record: FeatureRecord,
    selection: SelectionResult,
    upsample_to: tuple[int, int] | None = None,
) -> np.ndarray:
    """Importance-weighted sum of the selected maps (the toolkit's heatmap)."""
    _, imp = filter_positive(record, importance(record))
    emap = qfs_heatmap(record, imp, selection, upsample_to=upsample_to)
    return emap.upsampled if upsample_to is not None else emap.heat


def baseline_cams(
    model: torch.nn.Module,
    dataset,
    device: str = "cpu",
    limit: int | None = None,
    methods: tuple[str, ...] = METHODS,
    id_prefix: str = "img",
) -> dict[str, dict[str, np.ndarray]]:
    """Per-method {image_id: map} for the first ``limit`` images."""
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown CAM method {m!r}")
    out: dict[str, dict[str, np.ndarray]] = {m: {} for m in methods}
    n = len(dataset) if limit is None else min(limit, len(dataset))
    for idx in range(n):
        image, label = dataset[idx]
        rec = record_for_image(model, image, f"{id_prefix}-{idx:05d}", int(label), device)
        for m in methods:
            out[m][rec.image_id] = cam_from_record(rec, m)
    return out

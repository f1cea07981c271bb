"""Class-level aggregation: selection distributions, Bhattacharyya overlap,
coupling statistics and explanation heatmaps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .archive import FeatureRecord
from .qubo import ImportanceVector
from .selection import SelectionResult

DISPLAY_THRESHOLD = 0.10


@dataclass
class ClassDistribution:
    class_label: int
    p: np.ndarray  # length N_f, sums to 1 (unless empty)
    support_count: int  # total selected-FM occurrences in this class

    @property
    def empty(self) -> bool:
        return self.support_count == 0


@dataclass
class CorrelationMatrix:
    bc: np.ndarray  # raw K x K Bhattacharyya coefficients
    empty_classes: list[int]
    display_threshold: float = DISPLAY_THRESHOLD

    def displayed(self) -> np.ndarray:
        out = self.bc.copy()
        out[out < self.display_threshold] = 0.0
        return out


@dataclass
class ExplanationMap:
    image_id: str
    heat: np.ndarray  # H_f x W_f in [0, 1]
    upsampled: np.ndarray | None
    all_zero: bool


def class_distributions(
    selections: list[SelectionResult], num_classes: int, num_feature_maps: int
) -> list[ClassDistribution]:
    """Per-class frequency of each FM index across the class's selections.

    Each selected FM counts once per image (shot frequencies are not
    weighted in).
    """
    counts = np.zeros((num_classes, num_feature_maps))
    for sel in selections:
        for a in sel.selected_fm_indices:
            if not 0 <= a < num_feature_maps:
                raise ValueError(f"selection {sel.image_id}: FM index {a} out of range")
            counts[sel.class_label, a] += 1
    out = []
    for c in range(num_classes):
        total = counts[c].sum()
        p = counts[c] / total if total > 0 else np.zeros(num_feature_maps)
        out.append(ClassDistribution(class_label=c, p=p, support_count=int(total)))
    return out


def bhattacharyya(p: np.ndarray, q: np.ndarray) -> float:
    """Overlap sum_a sqrt(p_a q_a) of two normalized distributions."""
    return float(np.clip(np.sum(np.sqrt(np.asarray(p) * np.asarray(q))), 0.0, 1.0))


def correlation_matrix(distributions: list[ClassDistribution]) -> CorrelationMatrix:
    K = len(distributions)
    bc = np.zeros((K, K))
    for i in range(K):
        for j in range(i, K):
            bc[i, j] = bc[j, i] = bhattacharyya(distributions[i].p, distributions[j].p)
    empty = [d.class_label for d in distributions if d.empty]
    for c in empty:
        bc[c, :] = 0.0
        bc[:, c] = 0.0
    return CorrelationMatrix(bc=bc, empty_classes=empty)


def fit_j_distribution(j_values: np.ndarray, bins: int | None = None):
    """Sample mean/stddev of the off-diagonal couplings plus a histogram.

    Returns (mu, sigma, (bin_edges, counts)).  Bin width follows
    Freedman-Diaconis unless ``bins`` is given.
    """
    vals = np.asarray(j_values, dtype=float).ravel()
    if vals.size < 30:
        raise ValueError(f"need >= 30 coupling samples, got {vals.size}")
    mu = float(vals.mean())
    sigma = float(vals.std(ddof=0))
    if bins is None:
        iqr = np.subtract(*np.percentile(vals, [75, 25]))
        width = 2.0 * iqr / vals.size ** (1.0 / 3.0)
        if width <= 0:
            bins = 1
        else:
            bins = max(1, int(np.ceil((vals.max() - vals.min()) / width)))
    counts, edges = np.histogram(vals, bins=bins)
    return mu, sigma, (edges, counts)


def heatmap(
    record: FeatureRecord,
    importance: ImportanceVector,
    selection: SelectionResult,
    upsample_to: tuple[int, int] | None = None,
) -> ExplanationMap:
    """Weighted sum of the selected activation maps, clamped and max-normalized."""
    hf, wf = record.activations.shape[1:]
    heat = np.zeros((hf, wf))
    for a in selection.selected_fm_indices:
        heat += importance.alpha[a] * record.activations[a]
    heat = np.maximum(heat, 0.0)
    peak = heat.max()
    all_zero = peak == 0.0
    if not all_zero:
        heat = heat / peak
    upsampled = None
    if upsample_to is not None:
        upsampled = _bilinear_upsample(heat, upsample_to)
    return ExplanationMap(
        image_id=record.image_id, heat=heat, upsampled=upsampled, all_zero=all_zero
    )


def _bilinear_upsample(img: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    ht, wt = size
    hs, ws = img.shape
    # align-corners sampling grid
    ys = np.linspace(0, hs - 1, ht)
    xs = np.linspace(0, ws - 1, wt)
    y0 = np.clip(np.floor(ys).astype(int), 0, hs - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, ws - 1)
    y1 = np.clip(y0 + 1, 0, hs - 1)
    x1 = np.clip(x0 + 1, 0, ws - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = img[np.ix_(y0, x0)] * (1 - fx) + img[np.ix_(y0, x1)] * fx
    bot = img[np.ix_(y1, x0)] * (1 - fx) + img[np.ix_(y1, x1)] * fx
    return np.clip(top * (1 - fy) + bot * fy, 0.0, 1.0)

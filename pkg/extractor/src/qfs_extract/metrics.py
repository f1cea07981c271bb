"""Average Drop: confidence lost when the model only sees the pixels an
explanation map keeps.

drop_i = max(0, Y_i - E_i) / Y_i * 100, with Y_i the model's softmax
confidence in its predicted class on the full image and E_i the same
confidence on the map-masked image (pointwise product of the normalized
upsampled map with the image; optionally hard-thresholded first).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

ZERO_CONFIDENCE = 1e-12


@dataclass
class AverageDropReport:
    method: str
    per_class: dict[int, float]
    mean: float
    stderr: float
    n_used: int
    n_excluded: int

    def validate(self) -> None:
        drops = list(self.per_class.values()) + ([self.mean] if self.n_used else [])
        if any(not 0.0 <= v <= 100.0 for v in drops):
            raise ValueError("drop percentages must lie in [0, 100]")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "per_class": {str(c): v for c, v in self.per_class.items()},
            "mean": self.mean,
            "stderr": self.stderr,
            "n_used": self.n_used,
            "n_excluded": self.n_excluded,
        }


def masked_input(
    image: torch.Tensor, cam: np.ndarray, hard_threshold: float | None = None
) -> torch.Tensor:
    """Image times the map, upsampled (bilinear, align-corners) to pixel size."""
    mask = torch.as_tensor(np.clip(cam, 0.0, 1.0), dtype=image.dtype)
    mask = F.interpolate(
        mask[None, None], size=image.shape[-2:], mode="bilinear", align_corners=True
    )[0, 0].clamp(0.0, 1.0)
    if hard_threshold is not None:
        mask = (mask >= hard_threshold).to(image.dtype)
    return image * mask


def drop_for_image(
    model: torch.nn.Module,
    image: torch.Tensor,
    cam: np.ndarray,
    hard_threshold: float | None = None,
    device: str = "cpu",
) -> tuple[float, int] | None:
    """(drop percent, predicted class), or None when Y is zero-confidence."""
    model.eval()
    with torch.no_grad():
        probs = torch.softmax(model(image.unsqueeze(0).to(device)), dim=1)[0]
        c = int(probs.argmax().item())
        y = float(probs[c])
        if y <= ZERO_CONFIDENCE:
            return None
        masked = masked_input(image, cam, hard_threshold)
        e = float(torch.softmax(model(masked.unsqueeze(0).to(device)), dim=1)[0, c])
    return max(0.0, y - e) / y * 100.0, c


def average_drop(
    model: torch.nn.Module,
    dataset,
    maps: dict[str, np.ndarray],
    method: str,
    hard_threshold: float | None = None,
    device: str = "cpu",
    id_prefix: str = "img",
) -> AverageDropReport:
    """Aggregate drop over the dataset images that have a map in ``maps``.

    Images without a map (e.g. an empty selection) and zero-confidence
    images are excluded and counted.
    """
    model.to(device)
    drops: list[float] = []
    by_class: dict[int, list[float]] = {}
    excluded = 0
    for idx in range(len(dataset)):
        image_id = f"{id_prefix}-{idx:05d}"
        if image_id not in maps:
            excluded += 1
            continue
        image, label = dataset[idx]
        result = drop_for_image(model, image, maps[image_id], hard_threshold, device)
        if result is None:
            excluded += 1
            continue
        drop, _ = result
        drops.append(drop)
        by_class.setdefault(int(label), []).append(drop)
    arr = np.asarray(drops)
    report = AverageDropReport(
        method=method,
        per_class={c: float(np.mean(v)) for c, v in sorted(by_class.items())},
        mean=float(arr.mean()) if arr.size else 0.0,
        stderr=float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0,
        n_used=int(arr.size),
        n_excluded=excluded,
    )
    report.validate()
    return report

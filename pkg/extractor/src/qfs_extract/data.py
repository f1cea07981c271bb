"""Datasets: STL-10 upsampled to 224x224, plus a synthetic image set so the
whole extraction pipeline can be exercised without any download.
"""

from __future__ import annotations

import math

import torch
from torch.utils.data import Dataset, Subset, TensorDataset

IMAGE_SIZE = 224
VAL_FRACTION = 0.1


def stl10_transform():
    from torchvision import transforms

    return transforms.Compose(
        [
            transforms.Resize((IMAGE_SIZE, IMAGE_SIZE)),
            transforms.ToTensor(),
            transforms.Normalize(
                mean=(0.485, 0.456, 0.406), std=(0.229, 0.224, 0.225)
            ),
        ]
    )


def stl10_datasets(root: str, download: bool = False) -> tuple[Dataset, Dataset, Dataset]:
    """(train, val, test) with a deterministic validation split off the train set."""
    from torchvision.datasets import STL10

    tf = stl10_transform()
    full_train = STL10(root, split="train", download=download, transform=tf)
    test = STL10(root, split="test", download=download, transform=tf)
    n_val = max(1, math.floor(len(full_train) * VAL_FRACTION))
    idx = torch.randperm(len(full_train), generator=torch.Generator().manual_seed(0))
    val = Subset(full_train, idx[:n_val].tolist())
    train = Subset(full_train, idx[n_val:].tolist())
    return train, val, test


def synthetic_dataset(
    num_classes: int = 3,
    per_class: int = 8,
    size: int = 64,
    seed: int = 0,
    noise: float = 0.1,
) -> TensorDataset:
    """Images whose class is encoded by the position of a bright blob.

    Deterministic given the seed; enough signal that a few epochs of
    fine-tuning reach high accuracy, which is all the tests need.
    """
    gen = torch.Generator().manual_seed(seed)
    ys, xs = torch.meshgrid(
        torch.arange(size, dtype=torch.float32),
        torch.arange(size, dtype=torch.float32),
        indexing="ij",
    )
    images, labels = [], []
    for c in range(num_classes):
        angle = 2 * math.pi * c / num_classes
        cy = size / 2 + 0.3 * size * math.sin(angle)
        cx = size / 2 + 0.3 * size * math.cos(angle)
        blob = torch.exp(-((ys - cy) ** 2 + (xs - cx) ** 2) / (2 * (size / 10) ** 2))
        for _ in range(per_class):
            img = blob.expand(3, -1, -1) + noise * torch.randn(
                (3, size, size), generator=gen
            )
            images.append(img)
            labels.append(c)
    return TensorDataset(torch.stack(images), torch.tensor(labels))

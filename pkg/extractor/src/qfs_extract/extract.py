"""Feature-map and gradient extraction via forward hooks.

Per image: one forward pass with a hook on the final conv block, the
pre-softmax logit of the predicted class is backpropagated to the hooked
activations, and both tensors land in a ``qfs`` feature archive.  The hook
is registered and released around each image.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from qfs.archive import ArchiveHeader, FeatureArchive, FeatureRecord

from .model import target_layer


def record_for_image(
    model: nn.Module,
    image: torch.Tensor,
    image_id: str,
    class_label: int,
    device: str = "cpu",
) -> FeatureRecord:
    """Run one image through the model and capture (activations, gradients)."""
    model.eval()
    captured: dict[str, torch.Tensor] = {}

    def hook(_module, _inputs, output):
        captured["act"] = output

    handle = target_layer(model).register_forward_hook(hook)
    try:
        logits = model(image.unsqueeze(0).to(device))
    finally:
        handle.remove()
    act = captured["act"]
    predicted = int(logits.argmax(dim=1).item())
    z = logits[0, predicted]
    (grads,) = torch.autograd.grad(z, act)
    return FeatureRecord(
        image_id=image_id,
        class_label=class_label,
        score=float(z.item()),
        activations=act[0].detach().cpu().numpy().astype(np.float32),
        gradients=grads[0].cpu().numpy().astype(np.float32),
    )


def extract(
    model: nn.Module,
    dataset,
    dataset_name: str,
    num_classes: int,
    device: str = "cpu",
    limit: int | None = None,
    id_prefix: str = "img",
) -> FeatureArchive:
    """Archive of (activations, gradients) for up to ``limit`` images."""
    model.to(device)
    records = []
    for idx in range(len(dataset) if limit is None else min(limit, len(dataset))):
        image, label = dataset[idx]
        records.append(
            record_for_image(model, image, f"{id_prefix}-{idx:05d}", int(label), device)
        )
    if not records:
        raise ValueError("dataset is empty; nothing to extract")
    nf, hf, wf = records[0].activations.shape
    archive = FeatureArchive(
        header=ArchiveHeader(
            version=1,
            dataset_name=dataset_name,
            num_classes=num_classes,
            num_feature_maps=nf,
            fm_height=hf,
            fm_width=wf,
            record_count=len(records),
        ),
        records=records,
    )
    archive.validate()
    return archive

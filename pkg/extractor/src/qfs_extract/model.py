"""Modified ResNet-18: the last convolutional block is replaced by a thin
block producing N_f feature maps, so the selection problem stays small.

The N_f=512 variant keeps the standard final block (with the usual global
average pooling before the classifier); feature maps and gradients are then
taken at the pre-pooling layer output.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn
from torchvision.models import resnet18

VALID_NF = (16, 24, 32, 512)


@dataclass
class ModelSpec:
    custom_block_nf: int = 16
    num_classes: int = 10
    epochs: int = 20
    lr: float = 1e-4
    weight_decay: float = 0.0
    batch_size: int = 32
    pretrained: bool = True
    checkpoint_path: str | None = None
    seed: int = 0

    def validate(self) -> None:
        if self.custom_block_nf not in VALID_NF:
            raise ValueError(f"custom_block_nf must be one of {VALID_NF}")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.lr <= 0 or self.batch_size < 1:
            raise ValueError("lr must be > 0 and batch_size >= 1")

    def to_dict(self) -> dict:
        return {
            "custom_block_nf": self.custom_block_nf,
            "num_classes": self.num_classes,
            "epochs": self.epochs,
            "lr": self.lr,
            "weight_decay": self.weight_decay,
            "batch_size": self.batch_size,
            "pretrained": self.pretrained,
            "checkpoint_path": self.checkpoint_path,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelSpec":
        spec = cls(**doc)
        spec.validate()
        return spec


def build_model(spec: ModelSpec) -> nn.Module:
    """ResNet-18 with the last conv block swapped for an N_f-channel block."""
    spec.validate()
    weights = "IMAGENET1K_V1" if spec.pretrained else None
    model = resnet18(weights=weights)
    nf = spec.custom_block_nf
    if nf != 512:
        # layer4 maps 256ch/stride-16 -> 512ch/stride-32; the replacement
        # keeps the stride but narrows the output to nf channels
        model.layer4 = nn.Sequential(
            nn.Conv2d(256, nf, kernel_size=3, stride=2, padding=1, bias=False),
            nn.BatchNorm2d(nf),
            nn.ReLU(inplace=True),
        )
    model.fc = nn.Linear(nf, spec.num_classes)
    return model


def target_layer(model: nn.Module) -> nn.Module:
    """The hooked layer: output of the (possibly replaced) final conv block."""
    return model.layer4


def save_checkpoint(model: nn.Module, spec: ModelSpec, path, extra: dict | None = None) -> None:
    torch.save(
        {"spec": spec.to_dict(), "state_dict": model.state_dict(), "extra": extra or {}},
        path,
    )


def load_checkpoint(path, device: str = "cpu") -> tuple[nn.Module, ModelSpec, dict]:
    doc = torch.load(path, map_location=device, weights_only=False)
    spec = ModelSpec.from_dict(doc["spec"])
    # weights come from the checkpoint; never refetch the pretrained ones
    model = build_model(ModelSpec(**{**spec.to_dict(), "pretrained": False}))
    model.load_state_dict(doc["state_dict"])
    model.to(device).eval()
    return model, spec, doc.get("extra", {})

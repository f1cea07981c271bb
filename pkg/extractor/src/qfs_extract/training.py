"""Transfer-learning harness: Adam fine-tune with periodic checkpoints and
best-validation model selection.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch import nn
from torch.utils.data import DataLoader

from .model import ModelSpec, build_model, save_checkpoint

CHECKPOINT_EVERY = 5


@dataclass
class FineTuneResult:
    checkpoint_path: str
    best_epoch: int
    best_val_accuracy: float
    history: list[dict] = field(default_factory=list)


def evaluate(model: nn.Module, loader: DataLoader, device: str = "cpu") -> float:
    model.eval()
    correct = total = 0
    with torch.no_grad():
        for images, labels in loader:
            preds = model(images.to(device)).argmax(dim=1).cpu()
            correct += int((preds == labels).sum())
            total += len(labels)
    return correct / total if total else 0.0


def fine_tune(
    spec: ModelSpec,
    train_loader: DataLoader,
    val_loader: DataLoader,
    device: str = "cpu",
    checkpoint_dir: str | Path | None = None,
) -> FineTuneResult:
    """Train for spec.epochs and keep the best-validation weights.

    Checkpoints land in ``checkpoint_dir`` every 5 epochs; the returned
    checkpoint holds the model state with the highest validation accuracy
    (the untrained model when epochs=0).
    """
    spec.validate()
    torch.manual_seed(spec.seed)
    model = build_model(spec).to(device)
    optimizer = torch.optim.Adam(
        model.parameters(), lr=spec.lr, weight_decay=spec.weight_decay
    )
    loss_fn = nn.CrossEntropyLoss()

    best_state = copy.deepcopy(model.state_dict())
    best_acc = evaluate(model, val_loader, device)
    best_epoch = 0
    history = [{"epoch": 0, "train_loss": None, "val_accuracy": best_acc}]

    ckpt_dir = Path(checkpoint_dir) if checkpoint_dir else None
    if ckpt_dir:
        ckpt_dir.mkdir(parents=True, exist_ok=True)

    for epoch in range(1, spec.epochs + 1):
        model.train()
        running = 0.0
        batches = 0
        for images, labels in train_loader:
            optimizer.zero_grad()
            loss = loss_fn(model(images.to(device)), labels.to(device))
            loss.backward()
            optimizer.step()
            running += float(loss.detach())
            batches += 1
        val_acc = evaluate(model, val_loader, device)
        history.append(
            {
                "epoch": epoch,
                "train_loss": running / max(batches, 1),
                "val_accuracy": val_acc,
            }
        )
        if val_acc > best_acc:
            best_acc = val_acc
            best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
        if ckpt_dir and epoch % CHECKPOINT_EVERY == 0:
            save_checkpoint(model, spec, ckpt_dir / f"epoch_{epoch:03d}.pt")

    model.load_state_dict(best_state)
    out_path = (
        spec.checkpoint_path
        or str((ckpt_dir or Path(".")) / "best.pt")
    )
    save_checkpoint(
        model,
        spec,
        out_path,
        extra={"best_epoch": best_epoch, "best_val_accuracy": best_acc, "history": history},
    )
    return FineTuneResult(
        checkpoint_path=str(out_path),
        best_epoch=best_epoch,
        best_val_accuracy=best_acc,
        history=history,
    )

"""qfs-extract: train | export | cams | avgdrop.

Bridges a CNN to the qfs toolkit: fine-tunes the modified ResNet-18,
exports feature archives, computes GradCAM/GradCAM++ baselines, and
evaluates Average Drop for any of the map sources (including the annealed
selections produced by the qfs CLI).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader

from qfs.archive import read_archive, write_archive
from qfs.selection import read_selections

from . import __version__
from .cams import METHODS, baseline_cams, fgradcam_map
from .data import stl10_datasets, synthetic_dataset
from .extract import extract
from .metrics import average_drop
from .model import ModelSpec, load_checkpoint
from .training import fine_tune


def _datasets(args):
    if args.dataset == "synthetic":
        full = synthetic_dataset(
            num_classes=args.num_classes, per_class=args.per_class, seed=args.seed
        )
        return full, full, full, args.num_classes
    train, val, test = stl10_datasets(args.data_root, download=args.download)
    return train, val, test, 10


def _split(args, train, val, test):
    return {"train": train, "val": val, "test": test}[args.split]


def cmd_train(args) -> int:
    train, val, _, num_classes = _datasets(args)
    spec = ModelSpec(
        custom_block_nf=args.nf,
        num_classes=num_classes,
        epochs=args.epochs,
        lr=args.lr,
        weight_decay=args.weight_decay,
        batch_size=args.batch_size,
        pretrained=args.pretrained,
        checkpoint_path=args.out,
        seed=args.seed,
    )
    loader = lambda ds, shuffle: DataLoader(  # noqa: E731
        ds,
        batch_size=spec.batch_size,
        shuffle=shuffle,
        generator=torch.Generator().manual_seed(spec.seed),
    )
    result = fine_tune(
        spec,
        loader(train, True),
        loader(val, False),
        device=args.device,
        checkpoint_dir=args.checkpoint_dir,
    )
    print(
        f"best epoch {result.best_epoch} "
        f"val accuracy {result.best_val_accuracy:.3f} -> {result.checkpoint_path}"
    )
    return 0


def cmd_export(args) -> int:
    model, spec, _ = load_checkpoint(args.checkpoint, device=args.device)
    train, val, test, num_classes = _datasets(args)
    dataset = _split(args, train, val, test)
    archive = extract(
        model,
        dataset,
        dataset_name=f"{args.dataset}:{args.split}",
        num_classes=num_classes,
        device=args.device,
        limit=args.limit,
    )
    if archive.header.num_feature_maps != spec.custom_block_nf:
        print(
            f"error: layer produced {archive.header.num_feature_maps} maps, "
            f"spec says {spec.custom_block_nf}",
            file=sys.stderr,
        )
        return 1
    write_archive(archive, args.out)
    print(f"wrote {archive.header.record_count} records to {args.out}")
    return 0


def cmd_cams(args) -> int:
    model, _, _ = load_checkpoint(args.checkpoint, device=args.device)
    train, val, test, _ = _datasets(args)
    dataset = _split(args, train, val, test)
    methods = tuple(args.methods.split(","))
    maps = baseline_cams(
        model, dataset, device=args.device, limit=args.limit, methods=methods
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    index = {}
    for method, per_image in maps.items():
        for image_id, cam in per_image.items():
            name = f"{method}_{image_id}.npy"
            np.save(out / name, cam.astype(np.float32))
            index.setdefault(method, {})[image_id] = name
    (out / "index.json").write_text(json.dumps(index, indent=2))
    print(f"wrote {sum(len(v) for v in index.values())} maps to {out}")
    return 0


def cmd_avgdrop(args) -> int:
    model, _, _ = load_checkpoint(args.checkpoint, device=args.device)
    train, val, test, _ = _datasets(args)
    dataset = _split(args, train, val, test)
    if args.method in METHODS:
        maps = baseline_cams(
            model, dataset, device=args.device, limit=args.limit, methods=(args.method,)
        )[args.method]
    else:  # fgradcam_qa / fgradcam_sa: archive + selections from the qfs CLI
        if not (args.archive and args.selections):
            print("error: fgradcam methods need --archive and --selections", file=sys.stderr)
            return 1
        records = {r.image_id: r for r in read_archive(args.archive).records}
        maps = {}
        for sel in read_selections(args.selections):
            if sel.image_id in records and sel.selected_fm_indices:
                maps[sel.image_id] = fgradcam_map(records[sel.image_id], sel)
    report = average_drop(
        model,
        dataset,
        maps,
        method=args.method,
        hard_threshold=args.hard_threshold,
        device=args.device,
    )
    doc = report.to_dict()
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2))
    print(
        f"{report.method}: mean drop {report.mean:.2f}% +/- {report.stderr:.2f} "
        f"({report.n_used} used, {report.n_excluded} excluded)"
    )
    return 0


def _add_common(p, checkpoint: bool) -> None:
    p.add_argument("--dataset", choices=["synthetic", "stl10"], default="stl10")
    p.add_argument("--data-root", default="data")
    p.add_argument("--download", action="store_true")
    p.add_argument("--num-classes", type=int, default=3, help="synthetic only")
    p.add_argument("--per-class", type=int, default=8, help="synthetic only")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--device", default="cpu")
    if checkpoint:
        p.add_argument("--checkpoint", required=True)
        p.add_argument("--split", choices=["train", "val", "test"], default="test")
        p.add_argument("--limit", type=int, default=None)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="qfs-extract", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune the modified ResNet-18")
    _add_common(p, checkpoint=False)
    p.add_argument("--nf", type=int, default=16)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--weight-decay", type=float, default=0.0)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--pretrained", action="store_true")
    p.add_argument("--checkpoint-dir", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("export", help="hooked activations/gradients -> feature archive")
    _add_common(p, checkpoint=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("cams", help="GradCAM / GradCAM++ baseline maps")
    _add_common(p, checkpoint=True)
    p.add_argument("--methods", default="gradcam,gradcampp")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cams)

    p = sub.add_parser("avgdrop", help="Average Drop %% for one map source")
    _add_common(p, checkpoint=True)
    p.add_argument(
        "--method",
        choices=["gradcam", "gradcampp", "fgradcam_qa", "fgradcam_sa"],
        required=True,
    )
    p.add_argument("--archive", default=None)
    p.add_argument("--selections", default=None)
    p.add_argument("--hard-threshold", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_avgdrop)

    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

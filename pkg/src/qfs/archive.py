"""Feature-map archive: the boundary object between the CNN side and the solver side.

An archive is a directory with a ``manifest.json`` plus two raw ``.f32``
blobs per record (activations and gradients), float32 little-endian,
row-major with the feature-map index slowest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ARCHIVE_VERSION = 1
MANIFEST_NAME = "manifest.json"


class ArchiveError(Exception):
    """Malformed or inconsistent archive on disk."""


@dataclass
class ArchiveHeader:
    version: int
    dataset_name: str
    num_classes: int
    num_feature_maps: int
    fm_height: int
    fm_width: int
    record_count: int

    def validate(self) -> None:
        if self.num_classes < 1 or self.num_feature_maps < 1:
            raise ValueError("num_classes and num_feature_maps must be >= 1")
        if self.fm_height < 1 or self.fm_width < 1:
            raise ValueError("feature-map spatial size must be >= 1")
        if self.record_count < 0:
            raise ValueError("record_count must be >= 0")


@dataclass
class FeatureRecord:
    image_id: str
    class_label: int
    score: float
    activations: np.ndarray  # (N_f, H_f, W_f) float32
    gradients: np.ndarray  # (N_f, H_f, W_f) float32

    def validate(self, header: ArchiveHeader) -> None:
        shape = (header.num_feature_maps, header.fm_height, header.fm_width)
        for name, t in (("activations", self.activations), ("gradients", self.gradients)):
            if t.shape != shape:
                raise ValueError(
                    f"record {self.image_id}: {name} shape {t.shape} != header {shape}"
                )
            if not np.all(np.isfinite(t)):
                raise ValueError(f"record {self.image_id}: non-finite {name}")
        if not 0 <= self.class_label < header.num_classes:
            raise ValueError(f"record {self.image_id}: class {self.class_label} out of range")


@dataclass
class FeatureArchive:
    header: ArchiveHeader
    records: list[FeatureRecord] = field(default_factory=list)

    def validate(self) -> None:
        self.header.validate()
        if self.header.record_count != len(self.records):
            raise ValueError(
                f"header record_count {self.header.record_count} != {len(self.records)} records"
            )
        for rec in self.records:
            rec.validate(self.header)


@dataclass
class SyntheticConfig:
    num_classes: int = 2
    images_per_class: int = 10
    num_feature_maps: int = 16
    fm_height: int = 7
    fm_width: int = 7
    sparsity: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        for name in ("num_classes", "images_per_class", "num_feature_maps", "fm_height", "fm_width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.sparsity <= 1.0:
            raise ValueError("sparsity must lie in [0, 1]")


def write_archive(archive: FeatureArchive, path: str | Path) -> None:
    """Serialize an archive to ``path`` (created if missing)."""
    archive.validate()
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    h = archive.header
    records_meta = []
    for k, rec in enumerate(archive.records):
        act_name = f"rec{k:06d}_act.f32"
        grad_name = f"rec{k:06d}_grad.f32"
        rec.activations.astype("<f4").tofile(root / act_name)
        rec.gradients.astype("<f4").tofile(root / grad_name)
        records_meta.append(
            {
                "id": rec.image_id,
                "class": rec.class_label,
                "score": rec.score,
                "activations_file": act_name,
                "gradients_file": grad_name,
            }
        )
    manifest = {
        "version": h.version,
        "dataset_name": h.dataset_name,
        "num_classes": h.num_classes,
        "num_feature_maps": h.num_feature_maps,
        "fm_height": h.fm_height,
        "fm_width": h.fm_width,
        "record_count": h.record_count,
        "records": records_meta,
    }
    with open(root / MANIFEST_NAME, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=1)


def _load_blob(root: Path, name: str, shape: tuple[int, int, int], rec_id: str) -> np.ndarray:
    blob = root / name
    if not blob.exists():
        raise ArchiveError(f"record {rec_id}: missing blob {name}")
    expected = int(np.prod(shape)) * 4
    actual = blob.stat().st_size
    if actual != expected:
        raise ArchiveError(
            f"record {rec_id}: blob {name} has {actual} bytes, expected {expected}"
        )
    arr = np.fromfile(blob, dtype="<f4").reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise ArchiveError(f"record {rec_id}: non-finite values in {name}")
    return arr


def read_archive(path: str | Path) -> FeatureArchive:
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.exists():
        raise ArchiveError(f"no {MANIFEST_NAME} in {root}")
    try:
        with open(manifest_path, encoding="utf-8") as f:
            manifest = json.load(f)
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"unparsable manifest in {root}: {exc}") from exc

    header = ArchiveHeader(
        version=manifest["version"],
        dataset_name=manifest["dataset_name"],
        num_classes=manifest["num_classes"],
        num_feature_maps=manifest["num_feature_maps"],
        fm_height=manifest["fm_height"],
        fm_width=manifest["fm_width"],
        record_count=manifest["record_count"],
    )
    header.validate()
    records_meta = manifest.get("records", [])
    if len(records_meta) != header.record_count:
        raise ArchiveError(
            f"manifest declares {header.record_count} records but lists {len(records_meta)}"
        )
    shape = (header.num_feature_maps, header.fm_height, header.fm_width)
    records = []
    for meta in records_meta:
        rec = FeatureRecord(
            image_id=meta["id"],
            class_label=meta["class"],
            score=meta["score"],
            activations=_load_blob(root, meta["activations_file"], shape, meta["id"]),
            gradients=_load_blob(root, meta["gradients_file"], shape, meta["id"]),
        )
        records.append(rec)
    archive = FeatureArchive(header=header, records=records)
    archive.validate()
    return archive


def signature_sets(num_classes: int, num_feature_maps: int) -> list[list[int]]:
    """Class-specific signature feature maps, disjoint whenever N_f >= K.

    Each class owns a contiguous block of the FM index range and its
    signature is the first few maps of that block.
    """
    block = max(1, num_feature_maps // num_classes)
    sigs = []
    for c in range(num_classes):
        start = (c * block) % num_feature_maps
        size = min(4, block) if block > 1 else 1
        sigs.append([(start + j) % num_feature_maps for j in range(size)])
    return sigs


def gen_synthetic(config: SyntheticConfig) -> FeatureArchive:
    """Deterministic synthetic archive with recoverable per-class ground truth.

    Each class gets a signature set of feature maps whose activations are
    boosted on class-specific spatial supports (keeping them nearly
    orthogonal to each other) and whose gradients are strongly positive.
    Non-signature gradients are mostly negative and a ``sparsity`` fraction
    of those channels is zeroed outright.  Activations are non-negative,
    mimicking ReLU outputs.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    K = config.num_classes
    nf, hf, wf = config.num_feature_maps, config.fm_height, config.fm_width
    npix = hf * wf
    sigs = signature_sets(K, nf)

    records = []
    for c in range(K):
        sig = sigs[c]
        nsig = len(sig)
        for m in range(config.images_per_class):
            act = np.abs(rng.normal(0.0, 0.3, size=(nf, hf, wf))).astype(np.float32)
            grad = np.zeros((nf, hf, wf), dtype=np.float32)
            for a in range(nf):
                if a in sig:
                    continue
                # Per-channel gradient offset, mostly negative so most
                # non-signature maps are filtered out; a `sparsity`
                # fraction of these channels is silenced outright.
                mu = rng.normal(-0.3, 0.3)
                channel = rng.normal(mu, 0.3, size=(hf, wf))
                if rng.random() >= config.sparsity:
                    grad[a] = channel
            for r, a in enumerate(sig):
                support = (np.arange(npix) % nsig == r).reshape(hf, wf)
                act[a] += 3.0 * support * np.abs(rng.normal(1.0, 0.2, size=(hf, wf)))
                grad[a] = np.abs(rng.normal(1.0, 0.2, size=(hf, wf))).astype(np.float32)
            records.append(
                FeatureRecord(
                    image_id=f"c{c}_i{m:04d}",
                    class_label=c,
                    score=float(rng.uniform(1.0, 10.0)),
                    activations=act.astype(np.float32),
                    gradients=grad.astype(np.float32),
                )
            )
    header = ArchiveHeader(
        version=ARCHIVE_VERSION,
        dataset_name="synthetic",
        num_classes=K,
        num_feature_maps=nf,
        fm_height=hf,
        fm_width=wf,
        record_count=len(records),
    )
    return FeatureArchive(header=header, records=records)

import numpy as np
import pytest

from qfs.archive import (
    ArchiveError,
    ArchiveHeader,
    FeatureArchive,
    FeatureRecord,
    SyntheticConfig,
    gen_synthetic,
    read_archive,
    signature_sets,
    write_archive,
)


def small_archive(num_records=3, nf=2, hf=2, wf=2, seed=0):
    rng = np.random.default_rng(seed)
    header = ArchiveHeader(1, "unit", 2, nf, hf, wf, num_records)
    records = [
        FeatureRecord(
            image_id=f"img{k}",
            class_label=k % 2,
            score=float(rng.uniform(1, 5)),
            activations=np.abs(rng.normal(size=(nf, hf, wf))).astype(np.float32),
            gradients=rng.normal(size=(nf, hf, wf)).astype(np.float32),
        )
        for k in range(num_records)
    ]
    return FeatureArchive(header, records)


def test_round_trip_bitwise(tmp_path):
    archive = small_archive()
    write_archive(archive, tmp_path / "a")
    back = read_archive(tmp_path / "a")
    assert back.header == archive.header
    for orig, rt in zip(archive.records, back.records):
        assert rt.image_id == orig.image_id
        assert rt.class_label == orig.class_label
        assert rt.score == orig.score
        assert np.array_equal(rt.activations.view(np.uint32), orig.activations.view(np.uint32))
        assert np.array_equal(rt.gradients.view(np.uint32), orig.gradients.view(np.uint32))


def test_missing_blob_names_record(tmp_path):
    archive = small_archive(num_records=3)
    write_archive(archive, tmp_path / "a")
    (tmp_path / "a" / "rec000002_act.f32").unlink()
    with pytest.raises(ArchiveError, match="img2"):
        read_archive(tmp_path / "a")


def test_manifest_missing(tmp_path):
    with pytest.raises(ArchiveError, match="manifest"):
        read_archive(tmp_path)


def test_blob_size_mismatch(tmp_path):
    archive = small_archive(num_records=1)
    write_archive(archive, tmp_path / "a")
    blob = tmp_path / "a" / "rec000000_grad.f32"
    blob.write_bytes(blob.read_bytes()[:-4])
    with pytest.raises(ArchiveError, match="bytes"):
        read_archive(tmp_path / "a")


def test_nonfinite_rejected(tmp_path):
    archive = small_archive(num_records=1)
    write_archive(archive, tmp_path / "a")
    bad = np.full((2, 2, 2), np.nan, dtype="<f4")
    bad.tofile(tmp_path / "a" / "rec000000_act.f32")
    with pytest.raises(ArchiveError, match="img0"):
        read_archive(tmp_path / "a")


def test_empty_archive(tmp_path):
    archive = FeatureArchive(ArchiveHeader(1, "unit", 1, 2, 2, 2, 0), [])
    write_archive(archive, tmp_path / "a")
    back = read_archive(tmp_path / "a")
    assert back.header.record_count == 0
    assert back.records == []


def test_blob_byte_size(tmp_path):
    archive = small_archive(num_records=1, nf=2, hf=2, wf=2)
    write_archive(archive, tmp_path / "a")
    assert (tmp_path / "a" / "rec000000_act.f32").stat().st_size == 2 * 2 * 2 * 4


def test_write_read_write_identical(tmp_path):
    archive = small_archive()
    write_archive(archive, tmp_path / "a")
    write_archive(read_archive(tmp_path / "a"), tmp_path / "b")
    for blob in sorted((tmp_path / "a").glob("*.f32")):
        assert blob.read_bytes() == (tmp_path / "b" / blob.name).read_bytes()


def test_synthetic_count_and_header():
    cfg = SyntheticConfig(num_classes=10, images_per_class=20, num_feature_maps=16, fm_height=7, fm_width=7, seed=3)
    archive = gen_synthetic(cfg)
    assert archive.header.record_count == 200
    assert len(archive.records) == 200
    assert archive.header.num_feature_maps == 16


def test_synthetic_deterministic():
    cfg = SyntheticConfig(num_classes=2, images_per_class=3, num_feature_maps=8, fm_height=4, fm_width=4, seed=42)
    a, b = gen_synthetic(cfg), gen_synthetic(cfg)
    for ra, rb in zip(a.records, b.records):
        assert np.array_equal(ra.activations, rb.activations)
        assert np.array_equal(ra.gradients, rb.gradients)
        assert ra.score == rb.score


def test_sparsity_one_silences_nonsignature_gradients():
    cfg = SyntheticConfig(num_classes=2, images_per_class=4, num_feature_maps=8, fm_height=4, fm_width=4, sparsity=1.0, seed=1)
    archive = gen_synthetic(cfg)
    sigs = signature_sets(2, 8)
    for rec in archive.records:
        sig = set(sigs[rec.class_label])
        for a in range(8):
            if a not in sig:
                assert np.all(rec.gradients[a] == 0.0)


def test_synthetic_activations_nonnegative():
    archive = gen_synthetic(SyntheticConfig(num_classes=2, images_per_class=2, num_feature_maps=4, fm_height=3, fm_width=3, seed=9))
    for rec in archive.records:
        assert np.all(rec.activations >= 0.0)


def test_invalid_config():
    with pytest.raises(ValueError):
        gen_synthetic(SyntheticConfig(num_classes=0))
    with pytest.raises(ValueError):
        gen_synthetic(SyntheticConfig(sparsity=1.5))

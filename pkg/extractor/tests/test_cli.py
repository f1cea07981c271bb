import json

import pytest

from qfs.archive import read_archive
from qfs.cli import main as qfs_main

from qfs_extract.cli import main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Checkpoint + exported archive from the synthetic dataset."""
    root = tmp_path_factory.mktemp("xcli")
    ckpt = root / "model.pt"
    archive = root / "archive"
    common = ["--dataset", "synthetic", "--num-classes", "3", "--per-class", "6", "--seed", "4"]
    assert main([
        "train", *common, "--nf", "16", "--epochs", "2", "--lr", "1e-3",
        "--batch-size", "6", "--out", str(ckpt),
    ]) == 0
    assert main([
        "export", *common, "--checkpoint", str(ckpt), "--split", "test",
        "--limit", "12", "--out", str(archive),
    ]) == 0
    return root, ckpt, archive, common


def test_export_archive_is_readable(workspace):
    _, _, archive, _ = workspace
    loaded = read_archive(archive)
    assert loaded.header.num_feature_maps == 16
    assert loaded.header.record_count == 12


def test_cams_command(workspace, tmp_path):
    _, ckpt, _, common = workspace
    out = tmp_path / "cams"
    assert main([
        "cams", *common, "--checkpoint", str(ckpt), "--limit", "2", "--out", str(out),
    ]) == 0
    index = json.loads((out / "index.json").read_text())
    assert set(index) == {"gradcam", "gradcampp"}
    for files in index.values():
        assert len(files) == 2
        for name in files.values():
            assert (out / name).exists()


def test_avgdrop_gradcam(workspace, tmp_path):
    _, ckpt, _, common = workspace
    out = tmp_path / "drop.json"
    assert main([
        "avgdrop", *common, "--checkpoint", str(ckpt), "--limit", "6",
        "--method", "gradcam", "--out", str(out),
    ]) == 0
    doc = json.loads(out.read_text())
    assert doc["method"] == "gradcam"
    assert doc["n_used"] == 6
    assert 0.0 <= doc["mean"] <= 100.0


def test_avgdrop_fgradcam_consumes_primary_outputs(workspace, tmp_path):
    _, ckpt, archive, common = workspace
    qubos = tmp_path / "qubos.jsonl"
    sels = tmp_path / "sels.jsonl"
    assert qfs_main(["build", "--archive", str(archive), "--beta", "0.7", "--out", str(qubos)]) == 0
    assert qfs_main(["anneal", "--qubo", str(qubos), "--seed", "0", "--out", str(sels)]) == 0
    out = tmp_path / "drop.json"
    assert main([
        "avgdrop", *common, "--checkpoint", str(ckpt),
        "--method", "fgradcam_qa", "--archive", str(archive),
        "--selections", str(sels), "--out", str(out),
    ]) == 0
    doc = json.loads(out.read_text())
    assert doc["n_used"] >= 1
    assert 0.0 <= doc["mean"] <= 100.0


def test_avgdrop_fgradcam_requires_artifacts(workspace):
    _, ckpt, _, common = workspace
    assert main([
        "avgdrop", *common, "--checkpoint", str(ckpt), "--method", "fgradcam_qa",
    ]) == 1


def test_missing_checkpoint_errors(tmp_path):
    assert main([
        "export", "--dataset", "synthetic", "--checkpoint", str(tmp_path / "nope.pt"),
        "--out", str(tmp_path / "arch"),
    ]) == 1

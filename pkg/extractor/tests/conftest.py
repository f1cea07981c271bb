import pytest
import torch

from qfs_extract.data import synthetic_dataset
from qfs_extract.model import ModelSpec, build_model


@pytest.fixture(scope="session")
def small_spec():
    return ModelSpec(
        custom_block_nf=16,
        num_classes=3,
        epochs=2,
        lr=1e-3,
        batch_size=8,
        pretrained=False,
        seed=0,
    )


@pytest.fixture(scope="session")
def small_model(small_spec):
    torch.manual_seed(small_spec.seed)
    model = build_model(small_spec)
    model.eval()
    return model


@pytest.fixture(scope="session")
def small_dataset():
    return synthetic_dataset(num_classes=3, per_class=4, size=64, seed=1)

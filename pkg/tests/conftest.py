"""Fixtures compartidas por las suites."""

import os

import numpy as np
import pytest

from amr_cam.models.schemas import DatasetConfig, ModelConfig, RunConfig

SLOW_ENABLED = os.environ.get("AMR_CAM_SLOW") == "1"


def pytest_collection_modifyitems(config, items):
    """Las corridas de escritorio solo se ejecutan con AMR_CAM_SLOW=1."""
    if SLOW_ENABLED:
        return
    skip_slow = pytest.mark.skip(reason="requiere AMR_CAM_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(name="tiny_config")
def tiny_config_fixture() -> RunConfig:
    """Configuración mínima que entrena en segundos."""
    return RunConfig(
        epochs=1,
        batch_size=4,
        lr=0.01,
        dataset=DatasetConfig(
            n_classes=3, image_size=32, train_size=8, val_size=4, seed=7
        ),
        model=ModelConfig(
            widths=(8, 8, 8, 8),
            strides=(2, 2, 2, 1),
            channel_kernel=3,
            spatial_kernel=3,
        ),
    )


@pytest.fixture(name="rng")
def rng_fixture() -> np.random.Generator:
    return np.random.default_rng(1234)

"""Tests para la exportación de mapas de calor."""

import numpy as np
import pytest

from amr_cam.data.synth import DatasetGenerator
from amr_cam.harness import ConfigError
from amr_cam.harness.heatmaps import HeatmapExporter, export_heatmaps
from amr_cam.helpers.images import load_pgm, load_ppm
from amr_cam.network.checkpoint import save_checkpoint
from amr_cam.network.model import AmrModel


@pytest.fixture(name="model")
def model_fixture(tiny_config) -> AmrModel:
    return AmrModel.build(tiny_config, np.random.default_rng(5))


@pytest.fixture(name="val")
def val_fixture(tiny_config):
    return DatasetGenerator(tiny_config.dataset).split("val")


def test_three_maps_per_present_class(model, tiny_config, val, tmp_path):
    written = HeatmapExporter(model, tiny_config).export(val, [0, 2], tmp_path)
    present = int(val.labels[0].sum() + val.labels[2].sum())
    assert len(written) == 2 + 3 * present
    image = load_ppm(tmp_path / "val_00000_input.ppm")
    assert image.shape == (32, 32, 3)
    n = int(np.flatnonzero(val.labels[0])[0])
    heatmap = load_pgm(tmp_path / f"val_00000_class{n}_weighted.pgm")
    assert heatmap.shape == (32, 32)
    assert heatmap.dtype == np.uint8


def test_invalid_indices(model, tiny_config, val, tmp_path):
    with pytest.raises(ConfigError):
        HeatmapExporter(model, tiny_config).export(val, [0, 99], tmp_path)


def test_export_from_checkpoint(model, tiny_config, tmp_path):
    path = tmp_path / "checkpoint.amr"
    save_checkpoint(model, tiny_config, path)
    written = export_heatmaps(path, [1], tmp_path / "maps")
    assert all(p.parent == tmp_path / "maps" for p in written)
    assert (tmp_path / "maps" / "val_00001_input.ppm").is_file()

import json
import os

import numpy as np
import pytest

from src.common.errors import ConfigError, DataError, SceneGenerationError
from src.common.raster import BinaryMask
from src.plugins.simulate import dataset as dataset_module
from src.plugins.simulate.dataset import (
    MANIFEST_NAME,
    DatasetConfig,
    build_scene,
    expected_ratio_band,
    gen_dataset,
    load_scene,
    read_manifest,
    scene_dirs,
)


def _read_bytes(path):
    with open(path, "rb") as f:
        return f.read()


@pytest.fixture
def dataset(tmp_path, small_dataset_config):
    out = tmp_path / "ds"
    manifest = gen_dataset(small_dataset_config, str(out), threads=1)
    return out, manifest


def test_manifest_layout(dataset, small_dataset_config):
    out, manifest = dataset
    assert manifest["n_scenes"] == 3
    assert [s["scene_id"] for s in manifest["scenes"]] == ["scene_0000", "scene_0001", "scene_0002"]
    assert [s["role"] for s in manifest["scenes"]] == ["trainval", "trainval", "test"]
    assert manifest["total_pixels"] == 3 * 128 * 128
    assert manifest["slick_pixels"] == sum(s["slick_pixels"] for s in manifest["scenes"])
    assert read_manifest(str(out)) == json.loads(json.dumps(manifest))
    for name in ("sigma0", "gt_mask", "gt_labels", "lookalike_mask", "wind_truth_speed", "wind_truth_direction"):
        assert os.path.exists(out / "scenes" / "scene_0000" / f"{name}.bin")
        assert os.path.exists(out / "scenes" / "scene_0000" / f"{name}.json")


def test_thread_count_does_not_change_output(tmp_path, small_dataset_config):
    one = tmp_path / "one"
    many = tmp_path / "many"
    gen_dataset(small_dataset_config, str(one), threads=1)
    gen_dataset(small_dataset_config, str(many), threads=4)
    assert _read_bytes(one / MANIFEST_NAME) == _read_bytes(many / MANIFEST_NAME)
    for scene in ("scene_0000", "scene_0001", "scene_0002"):
        for name in ("sigma0.bin", "gt_labels.bin", "truth.json"):
            assert _read_bytes(one / "scenes" / scene / name) == _read_bytes(many / "scenes" / scene / name)


def test_seed_override_changes_scenes(small_dataset_config):
    _, a, _, _ = build_scene(small_dataset_config, 0)
    other = DatasetConfig.from_dict({**small_dataset_config.to_dict(), "seed": 12})
    _, b, _, _ = build_scene(other, 0)
    assert a != b


def test_scene_is_independent_of_siblings(small_dataset_config):
    bigger = DatasetConfig.from_dict({**small_dataset_config.to_dict(), "n_scenes": 6, "test_scenes": 0})
    meta_a, a, _, _ = build_scene(small_dataset_config, 1)
    meta_b, b, _, _ = build_scene(bigger, 1)
    assert a == b
    assert meta_a.acquisition_seed == meta_b.acquisition_seed


def test_test_scenes_use_their_own_incidence(small_dataset_config):
    meta, _, _, role = build_scene(small_dataset_config, 2)
    assert role == "test"
    assert meta.incidence_angle == small_dataset_config.test_incidence_angle


def test_load_scene_round_trip(dataset, small_dataset_config):
    out, _ = dataset
    dirs = scene_dirs(str(out))
    assert [os.path.basename(d) for d in dirs] == ["scene_0000", "scene_0001", "scene_0002"]

    meta, sigma0, truth, role = build_scene(small_dataset_config, 0)
    loaded = load_scene(dirs[0])
    assert loaded.meta == meta
    assert loaded.sigma0 == sigma0
    assert loaded.role == role
    assert loaded.gt_mask == truth.semantic_mask
    assert loaded.lookalike_mask == truth.lookalike_mask
    assert [i.instance_id for i in loaded.gt_instances] == [i.instance_id for i in truth.instances]
    assert [i.kind for i in loaded.gt_instances] == [i.kind for i in truth.instances]
    for got, want in zip(loaded.gt_instances, truth.instances):
        np.testing.assert_array_equal(got.pixels, want.pixels)


def test_ratio_drift_is_a_warning(tmp_path, small_dataset_config):
    strict = DatasetConfig.from_dict({**small_dataset_config.to_dict(), "ratio_tolerance": 0.0,
                                      "target_pixel_ratio": 0.5, "n_scenes": 1, "test_scenes": 0})
    manifest = gen_dataset(strict, str(tmp_path / "ds"))
    assert any("偏离目标" in w for w in manifest["warnings"])


def test_ratio_inside_band_is_quiet(tmp_path, small_dataset_config):
    loose = DatasetConfig.from_dict({**small_dataset_config.to_dict(), "ratio_tolerance": 1.0,
                                     "n_scenes": 1, "test_scenes": 0})
    low, high = expected_ratio_band(loose)
    manifest = gen_dataset(loose, str(tmp_path / "ds"))
    assert low <= manifest["slick_pixel_ratio"] <= high
    assert not any("偏离目标" in w for w in manifest["warnings"])


def test_inconsistent_truth_is_rejected(monkeypatch, small_dataset_config):
    real_render = dataset_module.render_scene

    def broken_render(*args, **kwargs):
        sigma0, truth = real_render(*args, **kwargs)
        truth.semantic_mask = BinaryMask.from_array(np.ones(truth.semantic_mask.shape, dtype=bool))
        return sigma0, truth

    monkeypatch.setattr(dataset_module, "render_scene", broken_render)
    with pytest.raises(SceneGenerationError) as info:
        build_scene(small_dataset_config, 0)
    assert info.value.scene_id == "scene_0000"


def test_empty_dataset(tmp_path, small_dataset_config):
    empty = DatasetConfig.from_dict({**small_dataset_config.to_dict(), "n_scenes": 0, "test_scenes": 0})
    manifest = gen_dataset(empty, str(tmp_path / "ds"))
    assert manifest["scenes"] == []
    assert manifest["slick_pixel_ratio"] == 0.0


@pytest.mark.parametrize(
    "override",
    [
        {"test_scenes": 5},
        {"wind_speed_range": [5.0, 3.0]},
        {"slicks_range": [3, 1]},
        {"spill_fraction": 1.5},
        {"incidence_angle": [10.0, 30.0]},
        {"pockets_range": [0, 40], "pocket_area_range": [10.0, 40.0]},
    ],
)
def test_invalid_config(tmp_path, small_dataset_config, override):
    config = DatasetConfig.from_dict({**small_dataset_config.to_dict(), **override})
    with pytest.raises((ConfigError, DataError)):
        gen_dataset(config, str(tmp_path / "ds"))


def test_missing_dataset(tmp_path):
    with pytest.raises(DataError):
        read_manifest(str(tmp_path))
    with pytest.raises(DataError):
        scene_dirs(str(tmp_path))

import importlib
import json
import os
from pathlib import Path

import pandas as pd
import pytest
import tomli

from src.common.raster import BinaryMask, write_mask
from src.plugins.evaluate.report import PER_INSTANCE_COLUMNS
from src.plugins.pipeline import cli
from src.plugins.pipeline.cli import main
from src.plugins.simulate.dataset import load_scene

SMALL_CONFIG = """\
[inner]
version = "0.0.3"

[simulate]
n_scenes = 3
width = 128
height = 128
test_scenes = 1
target_pixel_ratio = 0.03
ratio_tolerance = 0.5
seed = 11

[wind_field]
speed_range = [3.0, 6.0]
pockets_range = [0, 1]
pocket_area_range = [5.0, 10.0]
correlation_length_px = 16.0

[slicks]
count_range = [1, 2]
"""

DETECTOR_TABLE = """\
background_window = 33
threshold_db = 2.5
background_stride = 4
"""


def _read(path):
    with open(path, "rb") as f:
        return f.read()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "bench.toml").write_text(SMALL_CONFIG, encoding="utf-8")
    (root / "detector.toml").write_text(DETECTOR_TABLE, encoding="utf-8")
    return root


def _chain(root, threads):
    """simulate → wind → detect → tile → evaluate，返回各步骤的退出码"""
    run = root / f"t{threads}"
    codes = {
        "simulate": main(["simulate", "--config", str(root / "bench.toml"), "--out", str(run / "ds"),
                          "--threads", str(threads)]),
    }
    codes["wind"] = main(["wind", "--scene", str(run / "ds"), "--out", str(run / "wind"), "--threads", str(threads)])
    codes["detect"] = main(["detect", "--scene", str(run / "ds"), "--params", str(root / "detector.toml"),
                            "--out", str(run / "pred"), "--threads", str(threads)])
    codes["tile"] = main(["tile", "--in", str(run / "ds"), "--out", str(run / "tiles"), "--size", "64",
                          "--threads", str(threads)])
    codes["evaluate"] = main(["evaluate", "--gt", str(run / "ds"), "--pred", str(run / "pred"),
                              "--wind", str(run / "wind"), "--out", str(run / "eval"), "--threads", str(threads)])
    return run, codes


@pytest.fixture(scope="module")
def chain(workspace):
    return _chain(workspace, 1)


def test_chain_exit_codes(chain):
    _, codes = chain
    assert codes == {"simulate": 0, "wind": 0, "detect": 0, "tile": 0, "evaluate": 0}


def test_chain_outputs(chain):
    run, _ = chain
    assert (run / "ds" / "manifest.json").exists()
    for scene in ("scene_0000", "scene_0001", "scene_0002"):
        assert (run / "pred" / scene / "pred.json").exists()
        assert (run / "wind" / scene).is_dir()
    for name in ("summary.json", "per_instance.csv", "bins_wind.csv", "bins_size.csv", "evaluation.json"):
        assert (run / "eval" / name).exists()
    for name in ("tiles.json", "stats.json", "stats.csv"):
        assert (run / "tiles" / name).exists()
    for step in ("ds", "wind", "pred", "tiles", "eval"):
        record = json.loads((run / step / "run_record.json").read_text(encoding="utf-8"))
        assert "timestamp" in record
        assert (run / step / "run.log").exists()


def test_chain_summary_is_consistent(chain):
    run, _ = chain
    summary = json.loads((run / "eval" / "summary.json").read_text(encoding="utf-8"))
    assert summary["n_scenes"] == 3
    assert summary["detected"] + summary["missed"] == summary["n_gt"]
    per_instance = pd.read_csv(run / "eval" / "per_instance.csv")
    assert list(per_instance.columns) == PER_INSTANCE_COLUMNS


def test_tiles_cover_every_scene(chain):
    run, _ = chain
    tiles = json.loads((run / "tiles" / "tiles.json").read_text(encoding="utf-8"))
    entries = tiles["entries"]
    # 128 / 64 → 每景 2 x 2 块
    assert len(entries) == 12
    assert tiles["test_scenes"] == ["scene_0002"]
    assert {e["split"] for e in entries if e["scene_id"] == "scene_0002"} == {"test"}
    assert {e["split"] for e in entries if e["scene_id"] != "scene_0002"} <= {"train", "val"}


def test_outputs_do_not_depend_on_threads(chain, workspace):
    run1, _ = chain
    run4, codes = _chain(workspace, 4)
    assert set(codes.values()) == {0}
    for rel in (
        ("ds", "manifest.json"),
        ("ds", "scenes", "scene_0001", "sigma0.bin"),
        ("eval", "summary.json"),
        ("eval", "per_instance.csv"),
        ("eval", "bins_wind.csv"),
        ("tiles", "tiles.json"),
        ("tiles", "stats.csv"),
    ):
        assert _read(os.path.join(run1, *rel)) == _read(os.path.join(run4, *rel)), rel


def test_evaluate_with_truth_wind(chain):
    run, _ = chain
    code = main(["evaluate", "--gt", str(run / "ds"), "--pred", str(run / "pred"), "--out", str(run / "eval_truth")])
    assert code == 0
    assert (run / "eval_truth" / "summary.json").exists()


def test_evaluate_test_only(chain):
    run, _ = chain
    code = main(["evaluate", "--gt", str(run / "ds"), "--pred", str(run / "pred"), "--test-only",
                 "--out", str(run / "eval_test")])
    assert code == 0
    summary = json.loads((run / "eval_test" / "summary.json").read_text(encoding="utf-8"))
    assert summary["n_scenes"] == 1


def test_report_regenerates_and_compares(chain):
    run, _ = chain
    assert main(["report", "--eval", str(run / "eval"), "--out", str(run / "report")]) == 0
    assert _read(run / "report" / "summary.json") == _read(run / "eval" / "summary.json")
    assert _read(run / "report" / "per_instance.csv") == _read(run / "eval" / "per_instance.csv")

    code = main(["report", "--eval", str(run / "eval"), "--eval", str(run / "eval"),
                 "--name", "a", "--name", "b", "--out", str(run / "compare")])
    assert code == 0
    comparison = pd.read_csv(run / "compare" / "comparison.csv")
    assert {"a_detection_rate", "b_detection_rate", "a_fa", "b_fa"} <= set(comparison.columns)


def test_import_ground_truth_as_prediction(chain, tmp_path):
    run, _ = chain
    scene_dir = run / "ds" / "scenes" / "scene_0000"
    scene = load_scene(str(scene_dir))
    write_mask(scene.gt_mask, scene.meta, tmp_path / "external")

    assert main(["detect", "--scene", str(scene_dir), "--import", str(tmp_path / "external"),
                 "--out", str(tmp_path / "pred")]) == 0
    info = json.loads((tmp_path / "pred" / "scene_0000" / "pred.json").read_text(encoding="utf-8"))
    assert info["source"] == "imported"

    assert main(["evaluate", "--gt", str(scene_dir), "--pred", str(tmp_path / "pred"),
                 "--out", str(tmp_path / "eval")]) == 0
    summary = json.loads((tmp_path / "eval" / "summary.json").read_text(encoding="utf-8"))
    assert summary["missed"] == 0
    assert summary["fa"] == 0
    assert summary["detected"] == len(scene.gt_instances)


def test_missing_required_argument_is_usage_error(tmp_path):
    assert main(["simulate", "--out", str(tmp_path / "ds")]) == 2
    assert main(["no-such-command"]) == 2


def test_bad_config_exits_2(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path / "ds")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text('[inner]\nversion = "0.0.3"\n[runtime]\nthreads = 1\n', encoding="utf-8")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "ds")]) == 2


def test_bad_data_exits_3(tmp_path, chain):
    run, _ = chain
    (tmp_path / "empty").mkdir()
    assert main(["detect", "--scene", str(tmp_path / "empty"), "--out", str(tmp_path / "pred")]) == 3
    # 预测目录里没有这些场景
    assert main(["evaluate", "--gt", str(run / "ds"), "--pred", str(tmp_path / "empty"),
                 "--out", str(tmp_path / "eval")]) == 3


def test_import_rejects_mismatched_mask(chain, tmp_path):
    run, _ = chain
    other = load_scene(str(run / "ds" / "scenes" / "scene_0001"))
    cropped = other.gt_mask.bits[:64, :64]
    write_mask(BinaryMask.from_array(cropped), other.meta, tmp_path / "small")
    assert main(["detect", "--scene", str(run / "ds" / "scenes" / "scene_0000"), "--import", str(tmp_path / "small"),
                 "--out", str(tmp_path / "pred")]) == 3


def test_calibrate(tmp_path, workspace):
    code = main(["calibrate", "--thresholds", "2.0,3.0", "--scenes", "1", "--params", str(workspace / "detector.toml"),
                 "--out", str(tmp_path / "calib")])
    assert code == 0
    table = pd.read_csv(tmp_path / "calib" / "calibration.csv")
    assert list(table["threshold_db"]) == [2.0, 3.0]
    setup = json.loads((tmp_path / "calib" / "calibration_setup.json").read_text(encoding="utf-8"))
    assert setup["setup"]["n_scenes"] == 1


def test_update_config(tmp_path):
    path = tmp_path / "bench.toml"
    path.write_text('[inner]\nversion = "0.0.1"\n[simulate]\nn_scenes = 5\n', encoding="utf-8")
    assert main(["update-config", "--config", str(path)]) == 0
    text = path.read_text(encoding="utf-8")
    assert 'version = "0.0.3"' in text
    assert "n_scenes = 5" in text


def test_console_script_points_at_run():
    root = Path(__file__).resolve().parents[2]
    with open(root / "pyproject.toml", "rb") as f:
        target = tomli.load(f)["project"]["scripts"]["slickwatch"]
    assert target == "src.plugins.pipeline.cli:run"
    module, _, attr = target.partition(":")
    assert getattr(importlib.import_module(module), attr) is cli.run
    assert "slickwatch=src.plugins.pipeline.cli:run" in (root / "setup.py").read_text(encoding="utf-8")


def test_run_configures_logging_first(monkeypatch):
    calls = []
    monkeypatch.setattr(cli, "load_logger", lambda: calls.append("logger"))
    monkeypatch.setattr(cli, "main", lambda argv: calls.append(("main", list(argv))) or 0)
    monkeypatch.setattr("sys.argv", ["slickwatch", "report", "--eval", "x"])
    assert cli.run() == 0
    assert calls == ["logger", ("main", ["report", "--eval", "x"])]

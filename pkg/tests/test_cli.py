from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from splatedit.cameras import OrientedBBox, save_bbox_json
from splatedit.cli import main
from splatedit.scene import GaussianScene, load_ply, save_ply

from .conftest import make_room_scene, random_scene


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Scene + bbox + config files for a tiny but complete pipeline run."""
    root = tmp_path_factory.mktemp("cli")
    save_ply(make_room_scene(12), root / "scene.ply")
    bbox = OrientedBBox(np.array([0.0, 0.0, 0.8]), np.array([0.5, 0.5, 0.5]),
                        np.array([1.0, 0.0, 0.0, 0.0]))
    save_bbox_json(bbox, root / "bbox.json")
    cfg = {
        "scene_ply": str(root / "scene.ply"),
        "bbox_json": str(root / "bbox.json"),
        "output_dir": str(root / "out"),
        "seed": 4,
        "trajectory": {"n_views": 4, "arc_degrees": 120.0, "sides": ["left", "right"],
                       "fx": 48.0, "fy": 48.0, "width": 48, "height": 48},
        "training_views": {"n_views": 4, "fx": 48.0, "fy": 48.0,
                           "width": 48, "height": 48},
        "coarse_prior": {"n_gaussians": 80},
        "train": {"iterations": 60, "densify_from": 30, "densify_interval": 20,
                  "densify_until": 60, "scene_extent": 6.0, "seed": 4,
                  "log_interval": 20},
    }
    (root / "config.json").write_text(json.dumps(cfg))
    return root


def run_cli(*args):
    return CliRunner().invoke(main, list(args))


def tree_digest(root: Path) -> dict[str, str]:
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


class TestSamplePointcloud:
    def test_empty_scene(self, tmp_path):
        save_ply(GaussianScene.empty(), tmp_path / "empty.ply")
        out = tmp_path / "cloud.json"
        result = run_cli("sample-pointcloud", str(tmp_path / "empty.ply"), str(out))
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["points"] == [] and data["colors"] == []

    def test_round_trip_through_ui_schema(self, tmp_path, rng):
        import jsonschema
        save_ply(random_scene(rng, 10), tmp_path / "s.ply")
        out = tmp_path / "cloud.json"
        assert run_cli("sample-pointcloud", str(tmp_path / "s.ply"), str(out)).exit_code == 0
        data = json.loads(out.read_text())
        schema = json.loads((Path(__file__).resolve().parents[1]
                             / "docs" / "schemas" / "pointcloud.schema.json").read_text())
        jsonschema.validate(data, schema)
        assert len(data["points"]) == 10

    def test_downsampling_stride(self, tmp_path, rng):
        save_ply(random_scene(rng, 200), tmp_path / "s.ply")
        out = tmp_path / "cloud.json"
        run_cli("sample-pointcloud", str(tmp_path / "s.ply"), str(out),
                "--max-points", "20")
        data = json.loads(out.read_text())
        assert len(data["points"]) == 20
        scene = load_ply(tmp_path / "s.ply")
        expected = scene.positions[np.arange(0, 200, 10)].astype(np.float64)
        assert np.allclose(np.asarray(data["points"]), expected)

    def test_missing_file_exit_2(self, tmp_path):
        result = run_cli("sample-pointcloud", str(tmp_path / "nope.ply"),
                         str(tmp_path / "o.json"))
        assert result.exit_code == 2


class TestExtract:
    def test_two_arcs_bundle_count(self, workdir):
        result = run_cli("extract", "--config", str(workdir / "config.json"))
        assert result.exit_code == 0, result.output
        manifest = json.loads((workdir / "out" / "bundles_manifest.json").read_text())
        assert manifest["n_views"] == 8  # 4 per side, two sides
        assert [a["side"] for a in manifest["arcs"]] == ["left", "right"]
        files = list((workdir / "out" / "bundles").glob("view_*.background.pfm"))
        assert len(files) == 8

    def test_bundles_reload_identical(self, workdir):
        from splatedit.cli import load_bundles, load_config, stage_extract
        cfg = load_config(str(workdir / "config.json"), {})
        bundles_a = load_bundles(Path(cfg["output_dir"]))[0]
        stage_extract(cfg)
        bundles_b = load_bundles(Path(cfg["output_dir"]))[0]
        for a, b in zip(bundles_a, bundles_b):
            assert np.array_equal(a.background, b.background)
            assert np.array_equal(a.depth, b.depth)
            assert np.array_equal(a.mask, b.mask)

    def test_empty_mask_degenerate_exit_nonzero(self, workdir, tmp_path):
        bad_bbox = OrientedBBox(np.array([0.0, 0.0, -500.0]), np.full(3, 0.01),
                                np.array([1.0, 0, 0, 0]))
        save_bbox_json(bad_bbox, tmp_path / "bad_bbox.json")
        result = run_cli("extract", "--config", str(workdir / "config.json"),
                         "--bbox-json", str(tmp_path / "bad_bbox.json"),
                         "--output-dir", str(tmp_path / "out2"))
        assert result.exit_code == 2
        assert "editing" in result.output.lower() or "error" in result.output.lower()

    def test_missing_scene_exit_2(self, workdir, tmp_path):
        result = run_cli("extract", "--config", str(workdir / "config.json"),
                         "--scene-ply", str(tmp_path / "missing.ply"))
        assert result.exit_code == 2


class TestInpaint:
    def test_mock_deterministic(self, workdir, tmp_path):
        result = run_cli("inpaint", "--config", str(workdir / "config.json"))
        assert result.exit_code == 0, result.output
        first = tree_digest(workdir / "out" / "inpainted")
        result = run_cli("inpaint", "--config", str(workdir / "config.json"))
        assert result.exit_code == 0
        assert tree_digest(workdir / "out" / "inpainted") == first

    def test_unreachable_endpoint_exit_3(self, workdir, monkeypatch):
        import splatedit.pipeline as pl
        monkeypatch.setattr(pl, "RETRY_BACKOFF", 0.0)
        result = run_cli("inpaint", "--config", str(workdir / "config.json"),
                         "--endpoint", "http://127.0.0.1:1")
        assert result.exit_code == 3


class TestReconstruct:
    def test_iterations_zero_passthrough(self, workdir, tmp_path):
        out2 = tmp_path / "out_zero"
        import shutil
        shutil.copytree(workdir / "out", out2)
        result = run_cli("reconstruct", "--config", str(workdir / "config.json"),
                         "--output-dir", str(out2), "--iterations", "0")
        assert result.exit_code == 0, result.output
        edited = load_ply(out2 / "edited.ply")
        original = load_ply(workdir / "scene.ply")
        # passthrough: original plus the seeded prior, completely untrained
        assert edited.count == original.count + 80
        assert np.array_equal(edited.positions[:original.count], original.positions)

    def test_deterministic_bit_identical(self, workdir, tmp_path):
        result = run_cli("reconstruct", "--config", str(workdir / "config.json"))
        assert result.exit_code == 0, result.output
        first = (workdir / "out" / "edited.ply").read_bytes()
        result = run_cli("reconstruct", "--config", str(workdir / "config.json"))
        assert result.exit_code == 0
        assert (workdir / "out" / "edited.ply").read_bytes() == first

    def test_training_log_written(self, workdir):
        log = workdir / "out" / "train_log.jsonl"
        assert log.exists()
        entries = [json.loads(l) for l in log.read_text().splitlines()]
        assert entries and entries[-1]["iter"] == 60


class TestEvaluate:
    def test_reports_written(self, workdir):
        result = run_cli("evaluate", "--config", str(workdir / "config.json"))
        assert result.exit_code == 0, result.output
        cons = json.loads((workdir / "out" / "report_consistency.json").read_text())
        back = json.loads((workdir / "out" / "report_background.json").read_text())
        assert cons["region"] == "full" and len(cons["per_view_psnr"]) == 8
        assert back["region"] == "unmasked"
        assert (workdir / "out" / "report_consistency.csv").exists()
        assert (workdir / "out" / "contact_sheet.png").exists()

    def test_requires_prior_stages(self, workdir, tmp_path):
        result = run_cli("evaluate", "--config", str(workdir / "config.json"),
                         "--output-dir", str(tmp_path / "fresh"))
        assert result.exit_code == 2


def test_run_all_idempotent(workdir, tmp_path):
    out = tmp_path / "all"
    args = ("run-all", "--config", str(workdir / "config.json"),
            "--output-dir", str(out), "--iterations", "40")
    assert run_cli(*args).exit_code == 0
    first = tree_digest(out)
    assert run_cli(*args).exit_code == 0
    assert tree_digest(out) == first


def test_unknown_command_exit_2():
    assert run_cli("frobnicate").exit_code == 2

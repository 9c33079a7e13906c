from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from splatedit.errors import ParameterError
from splatedit.metrics import (EvalReport, background_fidelity_eval, consistency_eval,
                               contact_sheet, psnr)
from splatedit.rasterizer import render_fast

from .conftest import make_room_scene, random_scene
from .oracles import psnr_oracle
from .test_reconstruction import ring_cameras


def test_psnr_identical_hits_cap(rng):
    img = rng.uniform(0, 1, (16, 16, 3))
    assert psnr(img, img) == 99.0


def test_psnr_closed_form():
    a = np.zeros((10, 10, 3))
    b = np.full((10, 10, 3), 0.1)  # MSE = 0.01 everywhere
    assert psnr(a, b) == pytest.approx(20.0, abs=1e-9)


def test_psnr_matches_oracle(rng):
    a = rng.uniform(0, 1, (12, 12, 3))
    b = rng.uniform(0, 1, (12, 12, 3))
    assert psnr(a, b) == pytest.approx(psnr_oracle(a, b), abs=1e-9)


def test_psnr_region_mask(rng):
    a = rng.uniform(0, 1, (8, 8, 3))
    b = a.copy()
    b[:4] = 0.0  # corrupt the top half
    mask_bottom = np.zeros((8, 8), dtype=bool)
    mask_bottom[4:] = True
    assert psnr(a, b, mask_bottom) == 99.0
    assert psnr(a, b) < 99.0


def test_psnr_empty_region_rejected(rng):
    a = rng.uniform(0, 1, (8, 8, 3))
    with pytest.raises(ParameterError):
        psnr(a, a, np.zeros((8, 8), dtype=bool))


def test_psnr_monotone_in_mse(rng):
    a = rng.uniform(0, 1, (8, 8, 3))
    vals = [psnr(a, np.clip(a + d, 0, 1)) for d in (0.01, 0.05, 0.2)]
    assert vals[0] > vals[1] > vals[2]


class TestConsistencyEval:
    def test_self_consistency_high(self):
        scene = make_room_scene(8)
        cams = ring_cameras(3, wh=32)
        views = [(c, render_fast(scene, c, (0, 0, 0)).color) for c in cams]
        report = consistency_eval(scene, views)
        assert report.mean_psnr == 99.0
        assert report.mean_ssim == pytest.approx(1.0, abs=1e-9)
        assert report.region == "full"

    def test_zero_views_rejected(self):
        with pytest.raises(ParameterError):
            consistency_eval(make_room_scene(4), [])

    def test_reproducible(self, rng):
        scene = random_scene(rng, 20)
        cams = ring_cameras(2, wh=24)
        views = [(c, np.full((24, 24, 3), 0.4)) for c in cams]
        a = consistency_eval(scene, views)
        b = consistency_eval(scene, views)
        assert a.per_view_psnr == b.per_view_psnr
        assert a.per_view_ssim == b.per_view_ssim


class TestBackgroundFidelity:
    def test_identical_scenes(self):
        scene = make_room_scene(8)
        cams = ring_cameras(3, wh=32)
        masks = [np.zeros((32, 32), dtype=bool) for _ in cams]
        masks[0][10:20, 10:20] = True
        report = background_fidelity_eval(scene, scene, cams, masks)
        assert report.mean_psnr == 99.0
        assert report.mean_ssim == pytest.approx(1.0, abs=1e-9)
        assert report.region == "unmasked"

    def test_all_ones_mask_rejected(self):
        scene = make_room_scene(4)
        cams = ring_cameras(2, wh=24)
        masks = [np.ones((24, 24), dtype=bool) for _ in cams]
        with pytest.raises(ParameterError):
            background_fidelity_eval(scene, scene, cams, masks)

    def test_mask_count_mismatch(self):
        scene = make_room_scene(4)
        cams = ring_cameras(2, wh=24)
        with pytest.raises(ParameterError):
            background_fidelity_eval(scene, scene, cams, [])


def test_report_serialization(tmp_path):
    report = EvalReport("full", [30.0, 31.5], [0.9, 0.92], 30.75, 0.91,
                        {"scene": "demo"})
    jpath = tmp_path / "report.json"
    report.save_json(jpath)
    loaded = json.loads(jpath.read_text())
    assert loaded["mean_psnr"] == 30.75
    assert loaded["metadata"]["scene"] == "demo"

    cpath = tmp_path / "report.csv"
    report.save_csv(cpath)
    rows = list(csv.reader(cpath.read_text().splitlines()))
    assert rows[0] == ["view", "psnr", "ssim"]
    assert rows[-1][0] == "mean"
    assert float(rows[1][1]) == 30.0


def test_contact_sheet(tmp_path, rng):
    rows = [[rng.uniform(0, 1, (16, 16, 3)), rng.uniform(0, 1, (16, 16))]]
    out = tmp_path / "sheet.png"
    contact_sheet(rows, out)
    assert out.exists() and out.stat().st_size > 100

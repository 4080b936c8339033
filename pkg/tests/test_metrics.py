import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saai.errors import GridMismatchError
from saai.forest import GroundTruth, SceneSpec
from saai.geometry import CameraIntrinsics, FocalPlaneSpec
from saai.integrate import SaaiImage
from saai.metrics import (
    CSV_HEADER,
    SweepProtocol,
    SweepRow,
    compare_conditions,
    evaluate,
    read_rows_csv,
    run_protocol,
    summarize,
    write_rows_csv,
    write_summary_json,
)
from saai.rx import AnomalyMask

PLANE = FocalPlaneSpec(
    fp_distance=35.0, grid_origin=(0.0, 0.0), grid_resolution=0.1,
    grid_width=20, grid_height=10, ref_altitude=35.0,
)


def make_truth(footprint):
    footprint = np.asarray(footprint, dtype=bool)
    return GroundTruth(
        footprint_mask=footprint, footprint_area=int(footprint.sum()), plane=PLANE
    )


def saai_image(values):
    values = np.asarray(values, dtype=np.float64)
    counts = np.ones(values.shape, dtype=np.int64)
    return SaaiImage(visibility=values, counts=counts, plane=PLANE)


def truth_with_block(r0, r1, c0, c1):
    m = np.zeros(PLANE.shape, dtype=bool)
    m[r0:r1, c0:c1] = True
    return make_truth(m)


class TestEvaluate:
    def test_exact_binary_match_is_perfect(self):
        truth = truth_with_block(2, 5, 3, 9)
        mask = AnomalyMask(mask=truth.footprint_mask.copy(), threshold_t=99.0,
                           cutoff_score=1.0)
        r = evaluate(mask, truth)
        assert r.target_visibility == 1.0
        assert r.precision == 1.0
        assert r.tp_cells == truth.footprint_area and r.fp_cells == 0
        assert not r.no_detection

    def test_empty_result_flags_no_detection(self):
        truth = truth_with_block(2, 5, 3, 9)
        r = evaluate(np.zeros(PLANE.shape), truth)
        assert r.target_visibility == 0.0
        assert r.precision == 0.0
        assert r.no_detection

    def test_intensity_precision_oracle(self):
        # five footprint cells at 0.6 (sum 3.0) plus one off cell at 1.0
        truth = truth_with_block(0, 1, 0, 5)
        values = np.zeros(PLANE.shape)
        values[0, :5] = 0.6
        values[7, 12] = 1.0
        r = evaluate(saai_image(values), truth)
        assert r.target_visibility == pytest.approx(1.0)
        assert r.tp_intensity == pytest.approx(3.0)
        assert r.fp_intensity == pytest.approx(1.0)
        assert r.precision == pytest.approx(0.75)
        assert (r.tp_cells, r.fp_cells) == (5, 1)

    def test_partial_visibility_counts_cells(self):
        truth = truth_with_block(0, 1, 0, 10)
        values = np.zeros(PLANE.shape)
        values[0, :4] = 0.2
        r = evaluate(saai_image(values), truth)
        assert r.target_visibility == pytest.approx(0.4)

    def test_min_visibility_cut(self):
        truth = truth_with_block(0, 1, 0, 10)
        values = np.zeros(PLANE.shape)
        values[0, :4] = 0.2
        values[0, 4:6] = 0.8
        r = evaluate(saai_image(values), truth, min_visibility=0.5)
        assert r.tp_cells == 2
        assert r.target_visibility == pytest.approx(0.2)
        with pytest.raises(ValueError):
            evaluate(saai_image(values), truth, min_visibility=-0.1)

    def test_grid_mismatch_raises(self):
        truth = truth_with_block(0, 1, 0, 5)
        with pytest.raises(GridMismatchError):
            evaluate(np.zeros((5, 5)), truth)
        other = FocalPlaneSpec(
            fp_distance=35.0, grid_origin=(1.0, 0.0), grid_resolution=0.1,
            grid_width=20, grid_height=10, ref_altitude=35.0,
        )
        shifted = SaaiImage(
            visibility=np.zeros(PLANE.shape),
            counts=np.ones(PLANE.shape, dtype=np.int64),
            plane=other,
        )
        with pytest.raises(GridMismatchError):
            evaluate(shifted, truth)

    @given(st.data())
    @settings(max_examples=50, deadline=None)
    def test_scale_invariance(self, data):
        # keep draws clear of subnormals: scaling must not underflow to 0
        element = st.one_of(st.just(0.0), st.floats(1e-6, 1.0))
        values = np.array(
            data.draw(st.lists(element, min_size=200, max_size=200))
        ).reshape(PLANE.shape)
        scale = data.draw(st.floats(0.01, 100.0))
        truth = truth_with_block(2, 6, 4, 12)
        a = evaluate(saai_image(values), truth)
        b = evaluate(saai_image(values * scale), truth)
        assert b.target_visibility == a.target_visibility
        assert b.precision == pytest.approx(a.precision, abs=1e-12)

    @given(st.data())
    @settings(max_examples=50, deadline=None)
    def test_bounds(self, data):
        bits = data.draw(st.lists(st.booleans(), min_size=200, max_size=200))
        values = np.array(bits, dtype=float).reshape(PLANE.shape)
        truth = truth_with_block(2, 6, 4, 12)
        r = evaluate(saai_image(values), truth)
        assert 0.0 <= r.target_visibility <= 1.0
        assert 0.0 <= r.precision <= 1.0
        # both metrics hit 1 exactly when the detected set equals the footprint
        perfect = bool(np.array_equal(values > 0, truth.footprint_mask))
        assert (r.target_visibility == 1.0 and r.precision == 1.0) == perfect


class TestProtocol:
    def test_aperture(self):
        assert SweepProtocol().aperture == pytest.approx(10.0)
        assert SweepProtocol(frame_count=30, sampling_distance=0.5).aperture == 15.0

    def test_validation(self):
        with pytest.raises(ValueError):
            SweepProtocol(frame_count=0)
        with pytest.raises(ValueError):
            SweepProtocol(sampling_distance=-1.0)
        with pytest.raises(ValueError):
            SweepProtocol(altitude=0.0)


SMALL = SweepProtocol(
    frame_count=3,
    intrinsics=CameraIntrinsics(fov=math.radians(50.0), width=96, height=96),
)


class TestSweep:
    def test_unoccluded_run_scores_high(self):
        spec = SceneSpec(seed=0, density=0.0)
        results = run_protocol(spec, SMALL)
        assert results["saai"].target_visibility >= 0.95
        assert results["ad_on_integral"].target_visibility >= 0.95
        assert results["saai"].precision >= 0.9

    def test_grid_rows_and_order(self):
        rows = compare_conditions([0.0], ["cloudy", "sunny"], [0, 1], SMALL)
        assert len(rows) == 8  # 2 conditions x 2 seeds x 2 methods
        keys = [(r.method, r.density, r.condition, r.seed) for r in rows]
        assert keys[0] == ("saai", 0.0, "cloudy", 0)
        assert keys[1] == ("ad_on_integral", 0.0, "cloudy", 0)
        assert all(0.0 <= r.visibility <= 1.0 for r in rows)
        assert all(0.0 <= r.precision <= 1.0 for r in rows)

    def test_workers_do_not_change_rows(self):
        serial = compare_conditions([0.0], ["cloudy"], [0, 1, 2], SMALL)
        threaded = compare_conditions([0.0], ["cloudy"], [0, 1, 2], SMALL, workers=3)
        assert serial == threaded

    def test_summarize_groups_in_order(self):
        rows = [
            SweepRow("saai", 300.0, "cloudy", s, 0.5 + 0.1 * s, 0.8, 1.0, 0.2, 5, 1)
            for s in range(3)
        ]
        rows += [
            SweepRow("ad_on_integral", 300.0, "cloudy", s, 0.2, 0.4, 1.0, 1.5, 2, 3)
            for s in range(3)
        ]
        cells = summarize(rows)
        assert [c["method"] for c in cells] == ["saai", "ad_on_integral"]
        assert cells[0]["seeds"] == 3
        assert cells[0]["mean_visibility"] == pytest.approx(0.6)
        assert cells[1]["mean_fp_intensity"] == pytest.approx(1.5)

    def test_csv_round_trip(self, tmp_path):
        rows = compare_conditions([0.0], ["cloudy"], [0], SMALL)
        path = tmp_path / "rows.csv"
        write_rows_csv(rows, path)
        with open(path, newline="") as fh:
            header = next(csv.reader(fh))
        assert tuple(header) == CSV_HEADER
        assert read_rows_csv(path) == rows

    def test_summary_json(self, tmp_path):
        import json

        rows = compare_conditions([0.0], ["cloudy"], [0], SMALL)
        path = tmp_path / "summary.json"
        write_summary_json(rows, SMALL, path)
        doc = json.loads(path.read_text())
        assert doc["protocol"]["aperture"] == pytest.approx(3.0)
        assert len(doc["cells"]) == 2

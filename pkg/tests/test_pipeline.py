import math
import time

import numpy as np
import pytest

from saai.errors import EmptyInputError, OrderingError, PipelineError
from saai.geometry import (
    CameraIntrinsics,
    FocalPlaneSpec,
    Frame,
    Pose,
    default_plane_for_flight,
)
from saai.integrate import ad_on_integral, integrate, saai
from saai.pipeline import (
    FrameSelector,
    PipelineConfig,
    RenderParams,
    WindowIntegrator,
    collect_stats,
    run_pipeline,
    select_frames,
)

INTR = CameraIntrinsics(fov=math.radians(60.0), width=64, height=64)


def make_frames(count, spacing=0.6, altitude=30.0, seed=0, constant_at=None):
    rng = np.random.default_rng(seed)
    frames = []
    for i in range(count):
        if constant_at is not None and i == constant_at:
            img = np.full((64, 64), 0.5)
        else:
            img = rng.random((64, 64))
        pose = Pose(position=[i * spacing, 0.0, altitude])
        frames.append(Frame(image=img, pose=pose, index=i))
    return frames


def plane_for(frames, fp_distance=30.0):
    return default_plane_for_flight(
        [f.pose for f in frames], INTR, fp_distance=fp_distance
    )


def config_for(frames, mode="saai", window_size=4, sampling_distance=0.0, **kw):
    params = RenderParams(plane=plane_for(frames), t=kw.pop("t", 80.0),
                          c_n=kw.pop("c_n", 1.0), epsilon=kw.pop("epsilon", 0.0))
    return PipelineConfig(
        params=params, mode=mode, window_size=window_size,
        sampling_distance=sampling_distance, **kw,
    )


def frame_at(x, index, z=30.0):
    return Frame(image=np.zeros((64, 64)), pose=Pose(position=[x, 0.0, z]),
                 index=index)


def batch_reference(mode, frames, cfg):
    p = cfg.params
    if mode == "saai":
        return saai(frames, INTR, p.plane, t=p.t, epsilon=p.epsilon)
    if mode == "thermal_integral":
        return integrate(frames, INTR, p.plane)
    return ad_on_integral(frames, INTR, p.plane, t=p.t, epsilon=p.epsilon)


def assert_same_output(mode, out, ref):
    if mode == "saai":
        assert np.array_equal(out.raw.visibility, ref.visibility)
        assert np.array_equal(out.raw.counts, ref.counts)
    elif mode == "thermal_integral":
        assert np.array_equal(out.raw.values, ref.values)
        assert np.array_equal(out.raw.counts, ref.counts)
    else:
        assert np.array_equal(out.raw.mask, ref.mask)
        assert out.raw.cutoff_score == ref.cutoff_score


class TestSelector:
    def test_greedy_scan_oracle(self):
        frames = [frame_at(x, i) for i, x in enumerate([0.0, 0.3, 0.6, 0.9])]
        kept = [f.index for f in select_frames(frames, 0.5)]
        assert kept == [0, 2]

    def test_zero_distance_keeps_all(self):
        frames = [frame_at(0.1 * i, i) for i in range(5)]
        assert [f.index for f in select_frames(frames, 0.0)] == [0, 1, 2, 3, 4]

    def test_stationary_keeps_first_only(self):
        frames = [frame_at(1.0, i) for i in range(5)]
        assert [f.index for f in select_frames(frames, 0.5)] == [0]

    def test_altitude_jitter_does_not_select(self):
        frames = [frame_at(0.0, i, z=30.0 + i) for i in range(5)]
        assert [f.index for f in select_frames(frames, 0.5)] == [0]

    def test_out_of_order_raises(self):
        frames = [frame_at(0.0, 3), frame_at(1.0, 2)]
        with pytest.raises(OrderingError):
            list(select_frames(frames, 0.5))
        sel = FrameSelector(0.5)
        sel.offer(frame_at(0.0, 1))
        with pytest.raises(OrderingError):
            sel.offer(frame_at(5.0, 1))  # duplicate index


class TestConfig:
    def test_aperture_identity(self):
        frames = make_frames(2)
        cfg = config_for(frames, window_size=30, sampling_distance=0.5)
        assert cfg.aperture == pytest.approx(15.0)
        assert config_for(frames, window_size=10, sampling_distance=1.0).aperture == 10.0

    def test_validation(self):
        frames = make_frames(2)
        plane = plane_for(frames)
        with pytest.raises(ValueError):
            config_for(frames, mode="fourier")
        with pytest.raises(ValueError):
            config_for(frames, window_size=0)
        with pytest.raises(ValueError):
            PipelineConfig(params=RenderParams(plane=plane), queue_capacity=0)
        with pytest.raises(ValueError):
            RenderParams(plane=plane, t=101.0)
        with pytest.raises(ValueError):
            RenderParams(plane=plane, c_n=-1.0)
        with pytest.raises(ValueError):
            RenderParams(plane=plane, epsilon=-1e-9)


class TestWindowIntegrator:
    def test_window_one_equals_single_frame_mask(self):
        frames = make_frames(3)
        cfg = config_for(frames, window_size=1)
        integrator = WindowIntegrator(INTR, cfg)
        for f in frames:
            out = integrator.push(f)
            ref = batch_reference("saai", [f], cfg)
            assert_same_output("saai", out, ref)
            assert set(np.unique(out.raw.visibility)) <= {0.0, 1.0}
            assert out.window_indices == (f.index,)

    @pytest.mark.parametrize("mode", ["saai", "thermal_integral", "ad_on_integral"])
    def test_streamed_equals_batch_every_step(self, mode):
        frames = make_frames(9, seed=3)
        cfg = config_for(frames, mode=mode, window_size=4)
        integrator = WindowIntegrator(INTR, cfg)
        for k, f in enumerate(frames):
            out = integrator.push(f)
            window = frames[max(0, k - 3) : k + 1]
            ref = batch_reference(mode, window, cfg)
            assert_same_output(mode, out, ref)
            assert out.window_indices == tuple(g.index for g in window)

    def test_update_is_retroactive_and_exact(self):
        frames = make_frames(6, seed=5)
        cfg = config_for(frames, window_size=4)
        integrator = WindowIntegrator(INTR, cfg)
        for f in frames:
            before = integrator.push(f)
        new_plane = plane_for(frames, fp_distance=28.0)
        new_params = RenderParams(plane=new_plane, t=70.0)
        integrator.update_params(new_params)
        out = integrator.render()
        assert out.params_version == before.params_version + 1
        ref = saai(frames[2:], INTR, new_plane, t=70.0)
        assert np.array_equal(out.raw.visibility, ref.visibility)
        assert not np.array_equal(out.raw.visibility, before.raw.visibility)
        # pushing after the update stays consistent with batch
        extra = make_frames(8, seed=5)[6:]
        for k, f in enumerate(extra):
            out = integrator.push(f)
            window = (frames + extra)[: 7 + k][-4:]
            assert out.window_indices == tuple(g.index for g in window)
            ref = saai(window, INTR, new_plane, t=70.0)
            assert np.array_equal(out.raw.visibility, ref.visibility)

    def test_update_can_shrink_window(self):
        frames = make_frames(5)
        cfg = config_for(frames, window_size=5)
        integrator = WindowIntegrator(INTR, cfg)
        for f in frames:
            integrator.push(f)
        from dataclasses import replace

        integrator.update(replace(cfg, window_size=2))
        assert integrator.window_indices == (3, 4)

    def test_empty_render_raises(self):
        frames = make_frames(1)
        integrator = WindowIntegrator(INTR, config_for(frames))
        with pytest.raises(EmptyInputError):
            integrator.render()

    def test_contrast_applies_to_display_only(self):
        frames = make_frames(2)
        cfg = config_for(frames, window_size=2, c_n=10.0, t=50.0)
        integrator = WindowIntegrator(INTR, cfg)
        out = integrator.push(frames[0])
        assert out.display.max() <= 1.0
        covered = out.raw.counts > 0
        assert np.array_equal(
            out.display[covered] > 0, out.raw.visibility[covered] > 0
        )


class TestRunPipeline:
    @pytest.mark.parametrize("mode", ["saai", "thermal_integral", "ad_on_integral"])
    def test_serial_and_parallel_identical(self, mode):
        frames = make_frames(10, seed=7)
        cfg = config_for(frames, mode=mode, window_size=3, queue_capacity=2)
        outs_serial, outs_parallel = [], []
        stats_s = run_pipeline(iter(frames), INTR, cfg, outs_serial.append,
                               serial=True)
        stats_p = run_pipeline(iter(frames), INTR, cfg, outs_parallel.append)
        assert len(outs_serial) == len(outs_parallel) == 10
        for a, b in zip(outs_serial, outs_parallel):
            assert a.frame_index == b.frame_index
            assert a.window_indices == b.window_indices
            assert np.array_equal(a.display, b.display)
        assert stats_s.frames_in == stats_p.frames_in == 10
        assert stats_s.frames_dropped == stats_p.frames_dropped == 0

    def test_selection_gates_outputs(self):
        frames = make_frames(8, spacing=0.3)
        cfg = config_for(frames, window_size=3, sampling_distance=0.5)
        outs = []
        stats = run_pipeline(iter(frames), INTR, cfg, outs.append, serial=True)
        kept = [f.index for f in select_frames(make_frames(8, spacing=0.3), 0.5)]
        assert [o.frame_index for o in outs] == kept
        assert stats.frames_selected == len(kept) < stats.frames_in

    def test_outputs_match_batch_on_selected_window(self):
        frames = make_frames(9, seed=11)
        cfg = config_for(frames, mode="saai", window_size=4)
        outs = []
        run_pipeline(iter(frames), INTR, cfg, outs.append, serial=True)
        for k, out in enumerate(outs):
            window = frames[max(0, k - 3) : k + 1]
            ref = batch_reference("saai", window, cfg)
            assert_same_output("saai", out, ref)

    def test_no_loss_contract(self):
        frames = make_frames(6)
        cfg = config_for(frames, window_size=3)
        outs = []
        run_pipeline(iter(frames), INTR, cfg, outs.append, serial=True)
        appearances = {i: 0 for i in range(6)}
        for out in outs:
            for i in out.window_indices:
                appearances[i] += 1
        for j in range(6):
            assert appearances[j] == min(3, 6 - j)

    def test_backpressure_drops_nothing(self):
        frames = make_frames(12)
        cfg = config_for(frames, window_size=2, queue_capacity=1)
        outs = []

        def slow_sink(out):
            time.sleep(0.002)
            outs.append(out)

        stats = run_pipeline(iter(frames), INTR, cfg, slow_sink)
        assert len(outs) == 12
        assert stats.frames_dropped == 0

    @pytest.mark.parametrize("serial", [True, False])
    def test_detector_failure_names_frame(self, serial):
        frames = make_frames(5, constant_at=2)
        cfg = config_for(frames, mode="saai", window_size=3)
        with pytest.raises(PipelineError) as exc:
            run_pipeline(iter(frames), INTR, cfg, lambda out: None, serial=serial)
        assert exc.value.frame_index == 2

    def test_stats_document(self):
        frames = make_frames(6)
        cfg = config_for(frames, window_size=3)
        stats = run_pipeline(iter(frames), INTR, cfg, lambda out: None, serial=True)
        doc = collect_stats(stats)
        assert doc["frames_in"] == 6 and doc["frames_selected"] == 6
        for stage in ("select", "detect", "integrate"):
            s = doc["stages"][stage]
            assert 0.0 <= s["p50_ms"] <= s["p95_ms"]
        assert doc["end_to_end"]["p50_ms"] > 0.0

    def test_stats_require_frames(self):
        frames = make_frames(1)
        cfg = config_for(frames)
        stats = run_pipeline(iter([]), INTR, cfg, lambda out: None, serial=True)
        with pytest.raises(EmptyInputError):
            collect_stats(stats)

    def test_stats_warmup_trims_leading_samples(self):
        frames = make_frames(6)
        cfg = config_for(frames, window_size=3)
        stats = run_pipeline(iter(frames), INTR, cfg, lambda out: None, serial=True)
        stats.integrate_ms = [500.0, 1.0, 1.0, 1.0, 1.0, 1.0]
        assert collect_stats(stats)["stages"]["integrate"]["p95_ms"] > 100.0
        assert collect_stats(stats, warmup=1)["stages"]["integrate"]["p95_ms"] == 1.0
        with pytest.raises(ValueError):
            collect_stats(stats, warmup=-1)

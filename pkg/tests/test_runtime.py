import numpy as np
import pytest

from tryon.providers import SyntheticPerceptionProvider
from tryon.rasters import FrameImage, MaskImage, RasterError
from tryon.runtime import TryOnSession, bench_fps, composite
from tryon.synthesis import GarmentSynthesisEstimator
from tryon.synthetic import SyntheticGarmentSpec, generate_sequence

RES = (96, 72)


def rng_frame(seed):
    rng = np.random.default_rng(seed)
    return FrameImage(rng.random((3,) + RES, dtype=np.float32).astype(np.float32), role="rgb")


class TestComposite:
    def test_zero_mask_returns_input_bit_exact(self):
        frame, garment = rng_frame(0), rng_frame(1)
        mask = MaskImage(np.zeros((1,) + RES, dtype=np.float32))
        assert np.array_equal(composite(frame, garment, mask).data, frame.data)

    def test_full_mask_returns_garment_bit_exact(self):
        frame, garment = rng_frame(2), rng_frame(3)
        mask = MaskImage(np.ones((1,) + RES, dtype=np.float32))
        assert np.array_equal(composite(frame, garment, mask).data, garment.data)

    def test_half_mask_is_pixel_mean(self):
        frame, garment = rng_frame(4), rng_frame(5)
        mask = MaskImage(np.full((1,) + RES, 0.5, dtype=np.float32))
        out = composite(frame, garment, mask)
        expected = (frame.data.astype(np.float64) + garment.data.astype(np.float64)) / 2.0
        assert np.abs(out.data - expected).max() <= 1e-7

    def test_output_linear_in_mask(self):
        frame, garment = rng_frame(6), rng_frame(7)
        m1 = np.random.default_rng(8).random((1,) + RES).astype(np.float32)
        out_a = composite(frame, garment, MaskImage(m1)).data
        manual = frame.data * (1 - m1) + garment.data * m1
        assert np.array_equal(out_a, manual)

    def test_resolution_mismatch_rejected(self):
        small = FrameImage(np.zeros((3, 48, 48), dtype=np.float32), role="rgb")
        with pytest.raises(RasterError, match="mismatch"):
            composite(rng_frame(0), small, MaskImage(np.zeros((1,) + RES, dtype=np.float32)))


@pytest.fixture(scope="module")
def runtime_setup():
    estimator = GarmentSynthesisEstimator(recurrent=True, base_width=8, seed=2).initialize(RES)
    spec = SyntheticGarmentSpec(style="tight")
    seq = generate_sequence(spec, 60, RES, seed=6)
    provider = SyntheticPerceptionProvider([r.pose for r in seq], spec, seed=6, resolution=RES, cycle=True)
    frames = [r.raw for r in seq]
    return estimator, provider, frames


class TestSession:
    def test_process_frame_shapes_and_range(self, runtime_setup):
        estimator, provider, frames = runtime_setup
        session = TryOnSession(estimator)
        out = session.process_frame(frames[0], provider)
        assert out.data.shape == (3,) + RES
        assert 0.0 <= out.data.min() and out.data.max() <= 1.0
        assert session.frame_counter == 1

    def test_deterministic_across_sessions(self, runtime_setup):
        estimator, provider, frames = runtime_setup
        outs = []
        for _ in range(2):
            session = TryOnSession(estimator)
            outs.append([session.process_frame(f, provider).data for f in frames[:8]])
        for a, b in zip(*outs):
            assert np.array_equal(a, b)

    def test_session_isolation(self, runtime_setup):
        estimator, provider, frames = runtime_setup
        solo = TryOnSession(estimator)
        expected = [solo.process_frame(f, provider).data for f in frames[:6]]
        s1 = TryOnSession(estimator)
        s2 = TryOnSession(estimator)
        got1, got2 = [], []
        for f in frames[:6]:
            got1.append(s1.process_frame(f, provider).data)
            got2.append(s2.process_frame(f, provider).data)
        for e, a, b in zip(expected, got1, got2):
            assert np.array_equal(e, a)
            assert np.array_equal(e, b)

    def test_reset_matches_fresh_session(self, runtime_setup):
        estimator, provider, frames = runtime_setup
        session = TryOnSession(estimator)
        for f in frames[:5]:
            session.process_frame(f, provider)
        session.reset_state()
        out_after_reset = session.process_frame(frames[5], provider)

        fresh = TryOnSession(estimator)
        for f in frames[:5]:
            fresh.process_frame(f, provider)
        fresh.state = fresh.synthesizer.zero_state()
        out_fresh = fresh.process_frame(frames[5], provider)
        assert np.abs(out_after_reset.data - out_fresh.data).max() <= 1e-6

    def test_reset_idempotent(self, runtime_setup):
        estimator, provider, _ = runtime_setup
        session = TryOnSession(estimator)
        session.reset_state()
        state_once = (session.state.cell.copy(), session.state.hidden.copy())
        session.reset_state()
        assert np.array_equal(session.state.cell, state_once[0])
        assert session.state.is_zero()

    def test_provider_failure_passthrough_and_flag(self, runtime_setup):
        estimator, _, frames = runtime_setup
        spec = SyntheticGarmentSpec(style="tight")
        seq = generate_sequence(spec, 10, RES, seed=6)
        provider = SyntheticPerceptionProvider(
            [r.pose for r in seq], spec, seed=6, resolution=RES, fail_on={1}
        )
        session = TryOnSession(estimator)
        session.process_frame(frames[0], provider)
        out = session.process_frame(frames[1], provider)
        assert np.array_equal(out.data, frames[1].data)
        assert session.last_flagged
        assert session.events[-1]["event"] == "provider_failure"

    def test_auto_reset_after_sustained_failures(self, runtime_setup):
        estimator, _, frames = runtime_setup
        spec = SyntheticGarmentSpec(style="tight")
        seq = generate_sequence(spec, 40, RES, seed=6)
        provider = SyntheticPerceptionProvider(
            [r.pose for r in seq], spec, seed=6, resolution=RES,
            fail_on=set(range(3, 3 + 15)),
        )
        session = TryOnSession(estimator, auto_reset_after=15)
        for f in frames[:3]:
            session.process_frame(f, provider)
        assert not session.state.is_zero()
        for f in frames[3 : 3 + 14]:
            session.process_frame(f, provider)
        assert not session.state.is_zero()  # 14 failures: not yet
        session.process_frame(frames[17], provider)  # 15th consecutive failure
        assert session.state.is_zero()
        assert any(e["event"] == "state_reset" for e in session.events)

    def test_resolution_mismatch_is_session_error(self, runtime_setup):
        estimator, provider, _ = runtime_setup
        session = TryOnSession(estimator)
        small = FrameImage(np.zeros((3, 48, 48), dtype=np.float32), role="rgb")
        with pytest.raises(RasterError, match="session expects"):
            session.process_frame(small, provider)


class TestBench:
    def test_report_fields_and_budget(self, runtime_setup, tmp_path):
        estimator, provider, frames = runtime_setup
        session = TryOnSession(estimator)
        report = bench_fps(session, 40, provider)
        data = report.to_dict()
        assert set(data) == {"mean_fps", "p50_ms", "p95_ms", "peak_mb", "stage_breakdown", "frames"}
        assert set(data["stage_breakdown"]) == {"perception", "synthesis", "composite"}
        assert data["mean_fps"] > 0 and data["peak_mb"] > 0
        assert data["frames"] == 30  # warmup excluded
        report.save(tmp_path / "fps.json")
        assert (tmp_path / "fps.json").exists()

    def test_minimum_frames_enforced(self, runtime_setup):
        estimator, provider, _ = runtime_setup
        with pytest.raises(ValueError, match="at least 30"):
            bench_fps(TryOnSession(estimator), 20, provider)

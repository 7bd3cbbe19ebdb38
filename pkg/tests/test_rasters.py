import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tryon.rasters import (
    FrameImage,
    MaskImage,
    LabelSpec,
    Palette,
    RasterError,
    SemanticMap,
    SYNTHETIC_PALETTE,
    DENSEPOSE_PALETTE,
    clamp01,
    concat_channels,
    onehot_to_semantic_map,
    semantic_map_to_onehot,
    semantic_map_to_rgb,
    split_channels,
)


def rgb(h=16, w=16, value=0.5):
    return FrameImage(np.full((3, h, w), value, dtype=np.float32), role="rgb")


class TestFrameImage:
    def test_rejects_out_of_range_instead_of_clamping(self):
        data = np.full((3, 16, 16), 1.2, dtype=np.float32)
        with pytest.raises(RasterError, match="clamp explicitly"):
            FrameImage(data)
        FrameImage(clamp01(data))

    def test_rejects_negative(self):
        data = np.zeros((1, 16, 16), dtype=np.float32) - 0.01
        with pytest.raises(RasterError):
            FrameImage(data)

    def test_rejects_non_divisible_resolution(self):
        with pytest.raises(RasterError, match="divisible by 8"):
            FrameImage(np.zeros((3, 15, 16), dtype=np.float32))

    def test_rejects_nan(self):
        data = np.zeros((3, 16, 16), dtype=np.float32)
        data[0, 0, 0] = np.nan
        with pytest.raises(RasterError, match="non-finite"):
            FrameImage(data)

    def test_carrier_channel_set(self):
        for c in (1, 3, 4, 6):
            FrameImage(np.zeros((c, 16, 16), dtype=np.float32))
        with pytest.raises(RasterError, match="carrier set"):
            FrameImage(np.zeros((5, 16, 16), dtype=np.float32))

    def test_role_channel_mismatch(self):
        with pytest.raises(RasterError, match="role 'rgb'"):
            FrameImage(np.zeros((1, 16, 16), dtype=np.float32), role="rgb")

    def test_immutable(self):
        img = rgb()
        with pytest.raises(ValueError):
            img.data[0, 0, 0] = 0.0

    def test_mask_binarizes_at_half(self):
        mask = MaskImage(np.array([[[0.49, 0.5], [0.51, 0.0]]] , dtype=np.float32).repeat(8, 1).repeat(8, 2))
        assert mask.binary[0, 0] == False  # noqa: E712
        assert mask.binary[0, 8] == True  # noqa: E712


class TestConcat:
    def test_channel_order_and_count(self):
        a = FrameImage(np.random.default_rng(0).random((3, 16, 16)).astype(np.float32))
        b = FrameImage(np.random.default_rng(1).random((3, 16, 16)).astype(np.float32))
        out = concat_channels(a, b)
        assert out.channels == 6
        assert np.array_equal(out.data[:3], a.data)
        assert np.array_equal(out.data[3:], b.data)

    def test_zero_second_block_keeps_first_exact(self):
        a = FrameImage(np.random.default_rng(2).random((3, 16, 16)).astype(np.float32))
        zero = FrameImage(np.zeros((3, 16, 16), dtype=np.float32))
        assert np.array_equal(concat_channels(a, zero).data[:3], a.data)

    def test_split_round_trip(self):
        a = FrameImage(np.random.default_rng(3).random((3, 16, 16)).astype(np.float32))
        b = FrameImage(np.random.default_rng(4).random((1, 16, 16)).astype(np.float32))
        joined = concat_channels(a, b)
        back_a, back_b = split_channels(joined, a.channels)
        assert np.array_equal(back_a.data, a.data)
        assert np.array_equal(back_b.data, b.data)

    def test_dimension_mismatch_reports_shapes(self):
        a = rgb(16, 16)
        b = rgb(24, 16)
        with pytest.raises(RasterError, match="3x16x16.*3x24x16"):
            concat_channels(a, b)


class TestPalette:
    def test_synthetic_palette_has_merged_torso(self):
        names = [spec.name for spec in SYNTHETIC_PALETTE.labels]
        assert names[0] == "background"
        assert names.count("torso") == 1
        assert not any("upper_torso" in n or "lower_torso" in n for n in names)

    def test_densepose_palette_merges_torso(self):
        names = [spec.name for spec in DENSEPOSE_PALETTE.labels]
        assert len(names) == 24  # background + 23 foreground labels
        assert names.count("torso") == 1

    def test_rejects_split_torso(self):
        with pytest.raises(RasterError, match="merged 'torso'"):
            Palette(
                (
                    LabelSpec("background", (0, 0, 0)),
                    LabelSpec("upper_torso", (1, 1, 1)),
                    LabelSpec("torso", (2, 2, 2)),
                )
            )

    def test_rejects_missing_background(self):
        with pytest.raises(RasterError, match="background"):
            Palette((LabelSpec("torso", (1, 1, 1)),))


class TestSemanticMap:
    def test_rejects_label_out_of_range(self):
        labels = np.full((16, 16), len(SYNTHETIC_PALETTE), dtype=np.int64)
        with pytest.raises(RasterError, match="labels must lie in"):
            SemanticMap(labels)

    def test_onehot_uniform_background(self):
        m = SemanticMap(np.zeros((16, 16), dtype=np.uint8))
        onehot = semantic_map_to_onehot(m)
        assert onehot.channels == len(SYNTHETIC_PALETTE)
        assert np.array_equal(onehot.data[0], np.ones((16, 16), dtype=np.float32))
        assert onehot.data[1:].sum() == 0.0

    def test_onehot_single_pixel(self):
        labels = np.zeros((16, 16), dtype=np.uint8)
        labels[0, 0] = 3
        onehot = semantic_map_to_onehot(SemanticMap(labels))
        assert onehot.data[3].sum() == 1.0
        assert onehot.data[3, 0, 0] == 1.0

    def test_onehot_partition_of_unity(self):
        rng = np.random.default_rng(0)
        labels = rng.integers(0, len(SYNTHETIC_PALETTE), (16, 16)).astype(np.uint8)
        onehot = semantic_map_to_onehot(SemanticMap(labels))
        assert np.array_equal(onehot.data.sum(axis=0), np.ones((16, 16), dtype=np.float32))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_onehot_argmax_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        labels = rng.integers(0, len(SYNTHETIC_PALETTE), (16, 16)).astype(np.uint8)
        m = SemanticMap(labels)
        back = onehot_to_semantic_map(semantic_map_to_onehot(m), m.palette)
        assert np.array_equal(back.labels, m.labels)

    def test_rgb_rendering_uses_palette_colors(self):
        labels = np.zeros((16, 16), dtype=np.uint8)
        labels[:, 8:] = 1
        out = semantic_map_to_rgb(SemanticMap(labels))
        torso_color = np.array(SYNTHETIC_PALETTE.labels[1].color) / 255.0
        assert np.allclose(out.data[:, 0, 12], torso_color, atol=1e-6)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tryon.bodyrep import (
    GroupTableError,
    JointGroupTable,
    build_gi,
    build_variant,
    group_heatmaps,
    synthetic_group_table,
    wholebody_group_table,
)
from tryon.rasters import FrameImage, RasterError
from tryon.synthetic import (
    JOINT_NAMES,
    degrade_semantic_estimate,
    generate_sequence,
    make_pose,
    render_joint_heatmaps,
)

RES = (96, 72)


def named_heatmaps(active: dict[str, np.ndarray] | None = None):
    maps = {name: np.zeros(RES, dtype=np.float32) for name in JOINT_NAMES}
    maps.update(active or {})
    return maps


class TestGroupTable:
    def test_default_tables_cover_skeletons(self):
        assert set(synthetic_group_table().mapping) == set(JOINT_NAMES)
        assert len(wholebody_group_table().mapping) == 133

    def test_hips_and_knees_must_be_discarded(self):
        mapping = synthetic_group_table().mapping.copy()
        mapping["left_hip"] = "B"
        with pytest.raises(GroupTableError, match="must be discarded"):
            JointGroupTable(mapping)

    def test_unknown_group_rejected(self):
        with pytest.raises(GroupTableError, match="unknown group"):
            JointGroupTable({"head": "Q"})

    def test_json_round_trip(self, tmp_path):
        table = synthetic_group_table()
        path = tmp_path / "groups.json"
        table.save(path)
        assert JointGroupTable.load(path).mapping == table.mapping


class TestGrouping:
    def test_left_wrist_goes_to_blue_channel(self):
        blob = np.zeros(RES, dtype=np.float32)
        blob[40, 30] = 1.0
        out = group_heatmaps(named_heatmaps({"left_wrist": blob}), synthetic_group_table())
        assert out.data[2].sum() == 1.0  # B channel
        assert out.data[0].sum() == 0.0 and out.data[1].sum() == 0.0

    def test_discarded_hip_contributes_nothing(self):
        table = synthetic_group_table()
        base = group_heatmaps(named_heatmaps(), table)
        hip = group_heatmaps(named_heatmaps({"left_hip": np.ones(RES, dtype=np.float32)}), table)
        assert np.array_equal(base.data, hip.data)

    def test_same_group_joints_combine_with_pointwise_max(self):
        rng = np.random.default_rng(0)
        a = rng.random(RES).astype(np.float32)
        b = rng.random(RES).astype(np.float32)
        out = group_heatmaps(named_heatmaps({"right_elbow": a, "right_wrist": b}), synthetic_group_table())
        assert np.array_equal(out.data[0], np.maximum(a, b))

    def test_missing_joint_rejected(self):
        with pytest.raises(GroupTableError, match="absent from group table"):
            group_heatmaps({"mystery_joint": np.zeros(RES, dtype=np.float32)}, synthetic_group_table())

    def test_all_discard_table_yields_zero_image(self):
        table = JointGroupTable({name: "X" for name in JOINT_NAMES})
        out = group_heatmaps(named_heatmaps({"head": np.ones(RES, dtype=np.float32)}), table)
        assert out.data.sum() == 0.0

    @settings(max_examples=20, deadline=None)
    @given(st.sampled_from([n for n in JOINT_NAMES if "hip" not in n and "knee" not in n
                            and n not in ("pelvis", "chest")]),
           st.floats(0.0, 0.5))
    def test_monotone_aggregation(self, joint, bump):
        rng = np.random.default_rng(7)
        base_map = (rng.random(RES) * 0.5).astype(np.float32)
        table = synthetic_group_table()
        lo = group_heatmaps(named_heatmaps({joint: base_map}), table)
        hi = group_heatmaps(named_heatmaps({joint: np.clip(base_map + bump, 0, 1)}), table)
        assert (hi.data >= lo.data - 1e-7).all()


class TestGarmentInvariantRep:
    def test_shapes_and_layout(self):
        pose = make_pose(RES)
        heatmaps = render_joint_heatmaps(pose, 2.0, RES)
        grouped = group_heatmaps(heatmaps, synthetic_group_table())
        vm = FrameImage(np.full((3,) + RES, 0.25, dtype=np.float32), role="rgb")
        gi = build_gi(vm, grouped)
        assert gi.data.shape == (6,) + RES
        assert np.array_equal(gi.data[:3], vm.data)
        assert np.array_equal(gi.data[3:], grouped.data)

    def test_zero_heatmaps_zero_tail_channels(self):
        vm = FrameImage(np.full((3,) + RES, 0.25, dtype=np.float32), role="rgb")
        zero = FrameImage(np.zeros((3,) + RES, dtype=np.float32), role="rgb")
        assert build_gi(vm, zero).data[3:].sum() == 0.0

    def test_shape_mismatch_rejected(self):
        vm = FrameImage(np.zeros((3, 96, 72), dtype=np.float32), role="rgb")
        other = FrameImage(np.zeros((3, 48, 48), dtype=np.float32), role="rgb")
        with pytest.raises(RasterError):
            build_gi(vm, other)

    def test_invariant_across_garments(self, tight_spec, skirt_spec, group_table):
        a = generate_sequence(tight_spec, 3, RES, seed=4)
        b = generate_sequence(skirt_spec, 3, RES, seed=4)
        for x, y in zip(a, b):
            gi_a = build_gi(x.vm_render, group_heatmaps(x.heatmaps, group_table))
            gi_b = build_gi(y.vm_render, group_heatmaps(y.heatmaps, group_table))
            assert np.array_equal(gi_a.data, gi_b.data)


class TestVariants:
    def test_vm_variant_is_the_render_itself(self):
        vm = FrameImage(np.full((3,) + RES, 0.3, dtype=np.float32), role="rgb")
        assert np.array_equal(build_variant("vm", vm=vm).data, vm.data)

    def test_hm_and_shm_differ_only_at_hips_and_knees(self, group_table):
        pose = make_pose(RES)
        heatmaps = render_joint_heatmaps(pose, 2.0, RES)
        hm = build_variant("hm", heatmaps=heatmaps, table=group_table)
        shm = build_variant("shm", heatmaps=heatmaps, table=group_table)
        diff = np.abs(hm.data - shm.data).sum(axis=0) > 1e-6
        sensitive = np.zeros(RES, dtype=np.float32)
        names = list(JOINT_NAMES)
        for joint in ("left_hip", "right_hip", "left_knee", "right_knee", "pelvis", "chest"):
            sensitive = np.maximum(sensitive, heatmaps[names.index(joint)])
        # differences only where a discarded joint's blob has support
        assert not (diff & (sensitive <= 1e-7)).any()

    def test_dp_variant_reflects_occlusion(self, skirt_spec):
        rec = generate_sequence(skirt_spec, 1, RES, seed=6)[0]
        degraded = degrade_semantic_estimate(rec.gt_semantic, skirt_spec, seed=2)
        out = build_variant("dp", degraded=degraded)
        assert out.data.shape == (3,) + RES

    def test_missing_inputs_rejected(self):
        with pytest.raises(GroupTableError, match="needs"):
            build_variant("dp")
        with pytest.raises(GroupTableError, match="needs"):
            build_variant("full", heatmaps=None, table=None)

    def test_unknown_variant(self):
        with pytest.raises(GroupTableError, match="unknown variant"):
            build_variant("dpx")

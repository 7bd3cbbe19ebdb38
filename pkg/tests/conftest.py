"""Shared fixtures.

Heavy artifacts (trained networks, generated datasets) are session-scoped
and cached under ``tests/.cache`` keyed by a manual version stamp, so local
re-runs skip training; delete the directory (or bump CACHE_VERSION) to
force a cold rebuild. A cold run trains everything and takes roughly half
an hour on two CPU cores.
"""

from __future__ import annotations

import shutil
from pathlib import Path

import pytest
import torch

from tryon.bodymap import BodyMapEstimator
from tryon.bodyrep import build_gi, group_heatmaps, synthetic_group_table
from tryon.dataset import DatasetManifest, FrameRecord, PerGarmentDataset
from tryon.providers import SyntheticPerceptionProvider
from tryon.synthesis import GarmentSynthesisEstimator
from tryon.synthetic import SyntheticGarmentSpec, generate_sequence

torch.set_num_threads(2)

CACHE_VERSION = 1
CACHE = Path(__file__).parent / ".cache"

DESK_RES = (96, 72)
ESTIMATE_NOISE = 0.6


def _cache_path(name: str) -> Path:
    CACHE.mkdir(exist_ok=True)
    return CACHE / f"v{CACHE_VERSION}-{name}"


@pytest.fixture(scope="session")
def desk_res():
    return DESK_RES


@pytest.fixture(scope="session")
def tight_spec():
    return SyntheticGarmentSpec(style="tight")


@pytest.fixture(scope="session")
def skirt_spec():
    return SyntheticGarmentSpec(
        style="loose-skirt",
        sway_amplitude=6.0,
        sway_stochasticity=0.5,
        texture_seed=3,
        color=(0.72, 0.2, 0.3),
    )


@pytest.fixture(scope="session")
def group_table():
    return synthetic_group_table()


@pytest.fixture(scope="session")
def tight_seq(tight_spec):
    return generate_sequence(tight_spec, 160, DESK_RES, seed=11)


@pytest.fixture(scope="session")
def loose_seq(skirt_spec):
    return generate_sequence(skirt_spec, 300, DESK_RES, seed=21)


def records_from_synthetic(seq, semantics=None, vms=None):
    return [
        FrameRecord(
            index=r.index,
            raw=r.raw,
            garment_image=r.garment_image,
            garment_mask=r.garment_mask,
            vm=vms[i] if vms else r.vm_render,
            semantic=semantics[i] if semantics else r.gt_semantic,
        )
        for i, r in enumerate(seq)
    ]


@pytest.fixture(scope="session")
def tiny_dataset(skirt_spec):
    """24 ground-truth frames; enough for cheap synthesis unit tests."""
    seq = generate_sequence(skirt_spec, 24, DESK_RES, seed=5)
    manifest = DatasetManifest("skirt-tiny", "avatar", 24, DESK_RES, 24.0, "")
    return PerGarmentDataset(manifest, records_from_synthetic(seq))


@pytest.fixture(scope="session")
def bodymap_full(tight_seq, group_table):
    """Body-map translator trained on the tight-garment sequence (cached)."""
    path = _cache_path("bodymap-full.ckpt")
    if not path.exists():
        provider = SyntheticPerceptionProvider(
            [r.pose for r in tight_seq],
            SyntheticGarmentSpec(style="tight"),
            seed=11,
            resolution=DESK_RES,
            estimate_noise=ESTIMATE_NOISE,
        )
        X = [
            build_gi(r.vm_render, group_heatmaps(provider.heatmaps(i), group_table))
            for i, r in enumerate(tight_seq)
        ]
        y = [r.gt_semantic for r in tight_seq]
        estimator = BodyMapEstimator(epochs=15, seed=0, person_id="avatar")
        estimator.fit(X, y)
        estimator.save(path)
    return BodyMapEstimator.load(path)


@pytest.fixture(scope="session")
def garment_dataset(loose_seq, skirt_spec, bodymap_full, group_table, tmp_path_factory):
    """300-frame per-garment dataset with body-map semantic estimates (cached)."""
    path = _cache_path("garment-dataset")
    if not (path / "manifest.json").exists():
        if path.exists():
            shutil.rmtree(path)
        provider = SyntheticPerceptionProvider(
            [r.pose for r in loose_seq],
            skirt_spec,
            seed=21,
            resolution=DESK_RES,
            estimate_noise=ESTIMATE_NOISE,
        )
        semantics = []
        vms = []
        for i in range(len(loose_seq)):
            gi = build_gi(provider.vm(i), group_heatmaps(provider.heatmaps(i), group_table))
            semantics.append(bodymap_full.predict([gi])[0])
            vms.append(provider.vm(i))
        records = records_from_synthetic(loose_seq, semantics=semantics, vms=vms)
        manifest = DatasetManifest(
            garment_id="skirt", person_id="avatar", frame_count=len(records),
            resolution=DESK_RES, fps=24.0, config_hash="fixture",
        )
        PerGarmentDataset(manifest, records).write(path)
    return PerGarmentDataset.read(path)


def _trained_synth(recurrent: bool, garment_dataset) -> GarmentSynthesisEstimator:
    name = "recurrent" if recurrent else "perframe"
    path = _cache_path(f"synth-{name}.ckpt")
    if not path.exists():
        estimator = GarmentSynthesisEstimator(
            recurrent=recurrent, epochs=16, seed=1, garment_id="skirt"
        )
        estimator.fit(garment_dataset)
        estimator.save(path)
    return GarmentSynthesisEstimator.load(path)


@pytest.fixture(scope="session")
def synth_recurrent(garment_dataset):
    return _trained_synth(True, garment_dataset)


@pytest.fixture(scope="session")
def synth_perframe(garment_dataset):
    return _trained_synth(False, garment_dataset)


# --------------------------------------------------------------------------
# tiny end-to-end CLI pipeline, run twice for determinism comparisons


def run_cli(args: list[str]) -> str:
    """Invoke the CLI in-process; raises on nonzero exit."""
    from click.testing import CliRunner

    from tryon.cli import cli

    result = CliRunner().invoke(cli, args, catch_exceptions=False)
    assert result.exit_code == 0, f"{args} failed: {result.output}"
    return result.output


def _run_tiny_pipeline(root: Path) -> dict[str, Path]:
    paths = {
        "tight": root / "tight",
        "loose": root / "loose",
        "bodymap": root / "bodymap.ckpt",
        "dataset": root / "dataset",
        "synth": root / "synth.ckpt",
        "synth_pf": root / "synth_pf.ckpt",
        "tryon": root / "tryon",
        "report": root / "report.json",
    }
    run_cli(["synth-gen", "--out", str(paths["tight"]), "--frames", "32", "--garment", "tight",
             "--seed", "3", "--motion", "rotate"])
    run_cli(["synth-gen", "--out", str(paths["loose"]), "--frames", "32", "--garment", "loose-skirt",
             "--sway", "5", "--seed", "4"])
    run_cli(["train-bodymap", "--data", str(paths["tight"]), "--person", "avatar",
             "--out", str(paths["bodymap"]), "--epochs", "2", "--seed", "0"])
    run_cli(["gen-dataset", "--video", str(paths["loose"]), "--bodymap", str(paths["bodymap"]),
             "--garment", "skirt", "--out", str(paths["dataset"]), "--seed", "0"])
    run_cli(["train-regarsyn", "--dataset", str(paths["dataset"]), "--out", str(paths["synth"]),
             "--epochs", "1", "--seed", "0"])
    run_cli(["train-regarsyn", "--dataset", str(paths["dataset"]), "--out", str(paths["synth_pf"]),
             "--no-convlstm", "--epochs", "1", "--seed", "0"])
    run_cli(["infer", "--ckpt", str(paths["synth"]), "--frames", str(paths["loose"]),
             "--out", str(paths["tryon"]), "--emit-state-trace", "--seed", "0"])
    run_cli(["eval", "--pred", str(paths["tryon"]), "--ref", str(paths["loose"]),
             "--out", str(paths["report"]), "--metrics", "fid,kid,jitter", "--seed", "0",
             "--embedding-dim", "16"])
    return paths


@pytest.fixture(scope="session")
def pipeline_runs(tmp_path_factory):
    """The tiny pipeline executed twice with identical seeds."""
    base = tmp_path_factory.mktemp("pipeline")
    return _run_tiny_pipeline(base / "run1"), _run_tiny_pipeline(base / "run2")

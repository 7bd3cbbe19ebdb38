"""Recurrent garment synthesis.

A conditional generator with a convolutional LSTM at its bottleneck maps
the 6-channel hybrid person representation to a garment image + mask pair,
carrying (cell, hidden) state across frames. Training samples contiguous
clips, rolls the network out from a zero state and backpropagates the
summed per-frame loss through time; the ``recurrent=False`` variant is the
same architecture minus the cell, trained per frame, and is the ablation
baseline for every temporal-consistency claim.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from sklearn.base import BaseEstimator

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import ClipSampler, FrameRecord, PerGarmentDataset
from .networks import (
    PatchDiscriminator,
    TranslationGenerator,
    feature_matching_loss,
    lsgan_discriminator_loss,
    lsgan_generator_loss,
)
from .rasters import FrameImage, MaskImage, RasterError, concat_channels, semantic_map_to_rgb
from .validation import check_frame_image

__all__ = [
    "RecurrentState",
    "SequenceLossReport",
    "GarmentSynthesisEstimator",
    "hybrid_from_record",
    "temporal_gradient_check",
]


@dataclass(frozen=True)
class RecurrentState:
    """(cell, hidden) pair threaded across frames; both share one shape."""

    cell: np.ndarray
    hidden: np.ndarray

    def __post_init__(self) -> None:
        cell = np.asarray(self.cell, dtype=np.float32)
        hidden = np.asarray(self.hidden, dtype=np.float32)
        if cell.shape != hidden.shape:
            raise ValueError(f"cell shape {cell.shape} != hidden shape {hidden.shape}")
        if not (np.isfinite(cell).all() and np.isfinite(hidden).all()):
            raise ValueError("recurrent state contains non-finite values")
        object.__setattr__(self, "cell", cell)
        object.__setattr__(self, "hidden", hidden)

    @classmethod
    def zeros(cls, shape: tuple[int, int, int]) -> "RecurrentState":
        return cls(np.zeros(shape, np.float32), np.zeros(shape, np.float32))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cell.shape

    def is_zero(self) -> bool:
        return not (self.cell.any() or self.hidden.any())


@dataclass
class SequenceLossReport:
    """Per-step loss terms for one clip; ``total`` is their overall sum."""

    adversarial: list[float] = field(default_factory=list)
    feature_matching: list[float] = field(default_factory=list)
    mask: list[float] = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return len(self.adversarial)

    @property
    def per_step_totals(self) -> list[float]:
        return [a + f + m for a, f, m in zip(self.adversarial, self.feature_matching, self.mask)]

    @property
    def total(self) -> float:
        return float(sum(self.per_step_totals))


def hybrid_from_record(record: FrameRecord) -> FrameImage:
    """6-channel hybrid conditioning input: measurement render first, then
    the palette-color rendering of the semantic map."""
    return concat_channels(record.vm, semantic_map_to_rgb(record.semantic), role="hybrid")


def _heads(raw: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    # bounded activations keep outputs inside [0, 1] for any weights
    garment = (torch.tanh(raw[:, :3]) + 1.0) * 0.5
    mask = torch.sigmoid(raw[:, 3:4])
    return garment, mask


class GarmentSynthesisEstimator(BaseEstimator):
    """Per-garment synthesizer with scikit-learn style fit/predict.

    ``fit`` consumes a :class:`PerGarmentDataset`; ``step``/``rollout`` run
    streaming inference. One estimator serves exactly one garment.
    """

    def __init__(
        self,
        recurrent: bool = True,
        epochs: int = 12,
        learning_rate: float = 2e-4,
        adam_beta1: float = 0.5,
        adam_beta2: float = 0.999,
        base_width: int = 16,
        depth: int = 3,
        residual_blocks: int = 4,
        clip_len_min: int = 8,
        clip_len_max: int = 60,
        clips_per_epoch: int | None = None,
        feature_matching_weight: float = 10.0,
        mask_weight: float = 1.0,
        seed: int = 0,
        garment_id: str = "garment",
    ):
        self.recurrent = recurrent
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.base_width = base_width
        self.depth = depth
        self.residual_blocks = residual_blocks
        self.clip_len_min = clip_len_min
        self.clip_len_max = clip_len_max
        self.clips_per_epoch = clips_per_epoch
        self.feature_matching_weight = feature_matching_weight
        self.mask_weight = mask_weight
        self.seed = seed
        self.garment_id = garment_id

    # ------------------------------------------------------------------ setup

    def _build_net(self) -> TranslationGenerator:
        return TranslationGenerator(
            in_channels=6,
            out_channels=4,
            base_width=self.base_width,
            depth=self.depth,
            residual_blocks=self.residual_blocks,
            recurrent=self.recurrent,
        )

    def initialize(self, resolution: tuple[int, int]) -> "GarmentSynthesisEstimator":
        """Build random (untrained) weights at a resolution; used by shape
        tests and benchmarks that do not need a trained model."""
        torch.manual_seed(self.seed)
        self.resolution_ = tuple(resolution)
        self.net_ = self._build_net().eval()
        return self

    def _require_fitted(self) -> TranslationGenerator:
        if not hasattr(self, "net_"):
            raise RuntimeError("estimator has no weights; call fit(), initialize() or load()")
        return self.net_

    def _params_hash(self) -> str:
        payload = json.dumps(self.get_params(), sort_keys=True, default=str).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    # ------------------------------------------------------------------ loss

    def _per_frame_terms(
        self,
        disc: PatchDiscriminator,
        fake_pair: torch.Tensor,
        real_pair: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """One frame of the training objective: least-squares adversarial +
        weighted feature matching on the 4-channel pair, plus the mask term."""
        fake_scores, fake_feats = disc(fake_pair)
        with torch.no_grad():
            _, real_feats = disc(real_pair)
        adv = lsgan_generator_loss(fake_scores)
        fm = self.feature_matching_weight * feature_matching_loss(fake_feats, real_feats)
        mask_term = self.mask_weight * torch.mean(torch.abs(fake_pair[:, 3:4] - real_pair[:, 3:4]))
        return adv, fm, mask_term

    # ------------------------------------------------------------------ train

    def fit(self, dataset: PerGarmentDataset):
        """Train on clips sampled from the per-garment dataset."""
        if len(dataset) < self.clip_len_min:
            raise ValueError(
                f"dataset has {len(dataset)} frames; training needs at least "
                f"clip_len_min={self.clip_len_min}"
            )
        torch.manual_seed(self.seed)
        resolution = dataset[0].resolution
        self.resolution_ = resolution

        hybrids = torch.from_numpy(
            np.stack([hybrid_from_record(r).data.astype(np.float32) for r in dataset.records])
        )
        pairs = torch.from_numpy(
            np.stack(
                [
                    np.concatenate(
                        [r.garment_image.data.astype(np.float32), r.garment_mask.data.astype(np.float32)]
                    )
                    for r in dataset.records
                ]
            )
        )
        position = {id(r): i for i, r in enumerate(dataset.records)}

        net = self._build_net()
        disc = PatchDiscriminator(in_channels=4, base_width=32)
        opt_g = torch.optim.Adam(net.parameters(), lr=self.learning_rate, betas=(self.adam_beta1, self.adam_beta2))
        opt_d = torch.optim.Adam(disc.parameters(), lr=self.learning_rate, betas=(self.adam_beta1, self.adam_beta2))

        sampler = ClipSampler(self.clip_len_min, self.clip_len_max, seed=self.seed)
        mean_len = (self.clip_len_min + self.clip_len_max) / 2
        clips_per_epoch = self.clips_per_epoch or max(1, round(len(dataset) / mean_len))

        self.epoch_losses_ = []
        self.loss_history_ = []
        for _epoch in range(self.epochs):
            epoch_loss = 0.0
            for clip in sampler.sample(dataset, clips_per_epoch):
                idx = [position[id(r)] for r in clip]
                xb, yb = hybrids[idx], pairs[idx]
                state = None
                g_terms = []
                fake_pairs = []
                for t in range(len(idx)):
                    raw, state = net(xb[t : t + 1], state)
                    garment, mask = _heads(raw)
                    fake_pair = torch.cat([garment, mask], dim=1)
                    fake_pairs.append(fake_pair)
                    g_terms.append(self._per_frame_terms(disc, fake_pair, yb[t : t + 1]))
                loss = sum(adv + fm + m for adv, fm, m in g_terms)
                opt_g.zero_grad()
                loss.backward()
                opt_g.step()

                d_loss = 0.0
                for t, fake_pair in enumerate(fake_pairs):
                    real_scores, _ = disc(yb[t : t + 1])
                    fake_scores, _ = disc(fake_pair.detach())
                    d_loss = d_loss + lsgan_discriminator_loss(real_scores, fake_scores)
                d_loss = d_loss / len(fake_pairs)
                opt_d.zero_grad()
                d_loss.backward()
                opt_d.step()

                clip_loss = float(loss.detach()) / len(idx)
                self.loss_history_.append(clip_loss)
                epoch_loss += clip_loss
            self.epoch_losses_.append(epoch_loss / clips_per_epoch)
        self.net_ = net.eval()
        self._disc = disc.eval()
        return self

    def loss_report(self, clip: list[FrameRecord]) -> SequenceLossReport:
        """Evaluate the training objective on one clip without updating."""
        net = self._require_fitted()
        disc = getattr(self, "_disc", None)
        if disc is None:
            torch.manual_seed(self.seed)
            disc = PatchDiscriminator(in_channels=4, base_width=32).eval()
            self._disc = disc
        report = SequenceLossReport()
        state = None
        with torch.no_grad():
            for record in clip:
                x = torch.from_numpy(hybrid_from_record(record).data.astype(np.float32))[None]
                y = torch.from_numpy(
                    np.concatenate(
                        [record.garment_image.data.astype(np.float32), record.garment_mask.data.astype(np.float32)]
                    )
                )[None]
                raw, state = net(x, state)
                garment, mask = _heads(raw)
                adv, fm, m = self._per_frame_terms(disc, torch.cat([garment, mask], 1), y)
                report.adversarial.append(float(adv))
                report.feature_matching.append(float(fm))
                report.mask.append(float(m))
        return report

    # ------------------------------------------------------------------ infer

    def state_shape(self) -> tuple[int, int, int]:
        net = self._require_fitted()
        return net.state_shape(*self.resolution_)

    def zero_state(self) -> RecurrentState:
        return RecurrentState.zeros(self.state_shape())

    def step(
        self, hybrid: FrameImage, state: RecurrentState | None = None
    ) -> tuple[FrameImage, MaskImage, RecurrentState]:
        """One frame of streaming synthesis.

        ``None`` state means the zero state. The per-frame variant ignores
        the incoming state entirely and always returns the zero state.
        """
        net = self._require_fitted()
        hybrid = check_frame_image(hybrid, role="hybrid", name="hybrid")
        if hybrid.resolution != self.resolution_:
            raise RasterError(
                f"hybrid resolution {hybrid.resolution} does not match network "
                f"resolution {self.resolution_}"
            )
        if state is None:
            state = self.zero_state()
        if tuple(state.shape) != self.state_shape():
            raise ValueError(
                f"state shape {tuple(state.shape)} does not match network bottleneck "
                f"{self.state_shape()}"
            )
        with torch.no_grad():
            torch_state = (
                torch.from_numpy(state.cell)[None],
                torch.from_numpy(state.hidden)[None],
            )
            raw, (new_cell, new_hidden) = net(
                torch.from_numpy(hybrid.data.astype(np.float32))[None], torch_state
            )
            garment_t, mask_t = _heads(raw)
        garment = FrameImage(garment_t[0].numpy(), role="rgb")
        mask = MaskImage(mask_t[0].numpy())
        return garment, mask, RecurrentState(new_cell[0].numpy(), new_hidden[0].numpy())

    def rollout(
        self, hybrids: list[FrameImage], initial_state: RecurrentState | None = None
    ) -> tuple[list[tuple[FrameImage, MaskImage]], RecurrentState]:
        """Fold :meth:`step` over an ordered sequence; returns the final
        state so a stream can continue where it stopped."""
        if not hybrids:
            raise ValueError("rollout requires a non-empty sequence")
        state = initial_state
        outputs = []
        for i, hybrid in enumerate(hybrids):
            try:
                garment, mask, state = self.step(hybrid, state)
            except (RasterError, ValueError) as exc:
                raise type(exc)(f"rollout failed at index {i}: {exc}") from exc
            outputs.append((garment, mask))
        return outputs, state

    # ------------------------------------------------------------------ accounting

    def parameter_count(self) -> int:
        return self._require_fitted().parameter_count()

    def cell_parameter_count(self) -> int:
        return self._require_fitted().cell_parameter_count()

    # ------------------------------------------------------------------ io

    def save(self, path: str | Path) -> None:
        net = self._require_fitted()
        weights = {k: v.detach().numpy().astype(np.float32) for k, v in net.state_dict().items()}
        metadata = {
            "kind": "garment-synthesis",
            "config_hash": self._params_hash(),
            "version": __version__,
            "seed": self.seed,
            "garment_id": self.garment_id,
            "variant_flag": "recurrent" if self.recurrent else "per_frame",
            "resolution": list(self.resolution_),
            "params": self.get_params(),
            "epoch_losses": getattr(self, "epoch_losses_", []),
        }
        save_checkpoint(path, weights, metadata)

    @classmethod
    def load(cls, path: str | Path) -> "GarmentSynthesisEstimator":
        weights, metadata = load_checkpoint(path)
        if metadata.get("kind") != "garment-synthesis":
            raise ValueError(
                f"{path}: not a garment-synthesis checkpoint (kind={metadata.get('kind')!r})"
            )
        est = cls(**metadata["params"])
        est.resolution_ = tuple(metadata["resolution"])
        est.epoch_losses_ = metadata.get("epoch_losses", [])
        net = est._build_net()
        net.load_state_dict({k: torch.from_numpy(v) for k, v in weights.items()})
        est.net_ = net.eval()
        return est


# ---------------------------------------------------------------------------
# gradient verification


def temporal_gradient_check(
    estimator: GarmentSynthesisEstimator,
    clip: list[FrameRecord],
    epsilon: float = 1e-3,
    max_lag: int = 3,
) -> dict:
    """Verify gradients flow through time the way sequence training needs.

    Runs in float64 on a smooth surrogate objective (squared error of the
    4-channel output pair, summed over the clip) so central finite
    differences are meaningful at the coarse step ``epsilon``. Reports
    ``d loss_T / d input_{T-k}`` norms for k >= 1 -- nonzero exactly when a
    temporal path exists -- and compares one sampled weight gradient (the
    strongest element of the LSTM gate kernel, or the encoder stem for the
    per-frame variant) against central finite differences.
    """
    if len(clip) < 2:
        raise ValueError("gradient check needs a clip of length >= 2")
    net = estimator._require_fitted().double()

    xs = [
        torch.from_numpy(hybrid_from_record(r).data.astype(np.float64))[None].requires_grad_(True)
        for r in clip
    ]
    ys = [
        torch.from_numpy(
            np.concatenate(
                [r.garment_image.data.astype(np.float64), r.garment_mask.data.astype(np.float64)]
            )
        )[None]
        for r in clip
    ]

    def forward_losses() -> list[torch.Tensor]:
        losses = []
        state = None
        for x, y in zip(xs, ys):
            raw, state = net(x, state)
            garment, mask = _heads(raw)
            losses.append(torch.mean((torch.cat([garment, mask], 1) - y) ** 2))
        return losses

    losses = forward_losses()
    last = losses[-1]
    cross_time = {}
    for k in range(1, min(max_lag, len(clip) - 1) + 1):
        (grad,) = torch.autograd.grad(last, xs[-1 - k], retain_graph=True, allow_unused=True)
        cross_time[k] = 0.0 if grad is None else float(torch.linalg.vector_norm(grad))

    total = sum(losses)
    if estimator.recurrent:
        param_name, param = "cell.gates.weight", net.cell.gates.weight
    else:
        param_name, param = next(
            (n, p) for n, p in net.named_parameters() if "encoder" in n and p.dim() == 4
        )
    (param_grad,) = torch.autograd.grad(total, param, retain_graph=False)
    flat_idx = int(torch.argmax(torch.abs(param_grad)))
    autograd_value = float(param_grad.reshape(-1)[flat_idx])

    def total_loss_value() -> float:
        with torch.no_grad():
            state = None
            acc = 0.0
            for x, y in zip(xs, ys):
                raw, state = net(x, state)
                garment, mask = _heads(raw)
                acc += float(torch.mean((torch.cat([garment, mask], 1) - y) ** 2))
        return acc

    with torch.no_grad():
        original = float(param.reshape(-1)[flat_idx])
        param.reshape(-1)[flat_idx] = original + epsilon
        plus = total_loss_value()
        param.reshape(-1)[flat_idx] = original - epsilon
        minus = total_loss_value()
        param.reshape(-1)[flat_idx] = original
    fd_value = (plus - minus) / (2.0 * epsilon)
    denom = max(abs(autograd_value), abs(fd_value), 1e-12)
    report = {
        "variant": "recurrent" if estimator.recurrent else "per_frame",
        "cross_time_grad_norms": cross_time,
        "parameter": param_name,
        "autograd": autograd_value,
        "finite_difference": fd_value,
        "relative_error": abs(autograd_value - fd_value) / denom,
        "epsilon": epsilon,
    }
    net.float()
    return report

"""Per-person translator from body representations to semantic maps.

``BodyMapEstimator`` follows the scikit-learn fit/predict protocol: fit on
(representation, semantic map) pairs recorded while the person wears a
tight-fitting garment, then predict semantic maps for the same person under
any garment. Trained per person; predictions refuse a mismatched person id
unless explicitly overridden.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import torch
from sklearn.base import BaseEstimator

from . import __version__
from .bodyrep import VARIANT_CHANNELS, VARIANTS
from .checkpoint import load_checkpoint, save_checkpoint
from .networks import (
    PatchDiscriminator,
    TranslationGenerator,
    feature_matching_loss,
    lsgan_discriminator_loss,
    lsgan_generator_loss,
)
from .rasters import (
    DENSEPOSE_PALETTE,
    FrameImage,
    RasterError,
    SemanticMap,
    SYNTHETIC_PALETTE,
    semantic_map_to_onehot,
)
from .validation import check_frame_image, check_semantic_map

__all__ = ["BodyMapEstimator", "pixel_accuracy"]

_PALETTES = {"synthetic": SYNTHETIC_PALETTE, "densepose": DENSEPOSE_PALETTE}


def pixel_accuracy(predicted: SemanticMap, reference: SemanticMap) -> float:
    """Fraction of pixels with matching labels."""
    if predicted.resolution != reference.resolution:
        raise RasterError("semantic maps disagree on resolution")
    return float(np.mean(predicted.labels == reference.labels))


class BodyMapEstimator(BaseEstimator):
    """Translate a body representation into a per-pixel part labeling.

    The generator is trained with per-pixel cross-entropy as the primary
    term plus a least-squares adversarial + feature-matching pair at weight
    ``adversarial_weight``, which sharpens part boundaries without
    disturbing the label accuracy signal.

    Parameters mirror the training recipe; ``variant`` selects the input
    representation arm (``full`` is the 6-channel garment-invariant image,
    the rest are the 3-channel ablation alternatives).
    """

    def __init__(
        self,
        variant: str = "full",
        epochs: int = 30,
        batch_size: int = 8,
        learning_rate: float = 2e-4,
        adam_beta1: float = 0.5,
        adam_beta2: float = 0.999,
        base_width: int = 32,
        depth: int = 2,
        residual_blocks: int = 4,
        adversarial_weight: float = 0.1,
        feature_matching_weight: float = 10.0,
        seed: int = 0,
        person_id: str = "avatar",
    ):
        self.variant = variant
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.base_width = base_width
        self.depth = depth
        self.residual_blocks = residual_blocks
        self.adversarial_weight = adversarial_weight
        self.feature_matching_weight = feature_matching_weight
        self.seed = seed
        self.person_id = person_id

    # ------------------------------------------------------------------

    def _params_hash(self) -> str:
        payload = json.dumps(self.get_params(), sort_keys=True, default=str).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def _validate_pairs(self, X, y) -> tuple[list[FrameImage], list[SemanticMap]]:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        X = [check_frame_image(x, name=f"X[{i}]") for i, x in enumerate(X)]
        y = [check_semantic_map(m, name=f"y[{i}]") for i, m in enumerate(y)]
        if not X:
            raise ValueError("training requires at least one pair")
        if len(X) != len(y):
            raise ValueError(f"{len(X)} inputs but {len(y)} targets")
        want = VARIANT_CHANNELS[self.variant]
        resolutions = {x.resolution for x in X} | {m.resolution for m in y}
        if len(resolutions) != 1:
            raise RasterError(
                f"all training pairs must share one resolution, got {sorted(resolutions)}"
            )
        for i, x in enumerate(X):
            if x.channels != want:
                raise RasterError(
                    f"X[{i}] has {x.channels} channels; variant {self.variant!r} expects {want}"
                )
        palettes = {id(m.palette) for m in y}
        if len(palettes) != 1:
            raise RasterError("all targets must share one palette")
        return X, y

    def fit(self, X, y):
        """Train on ordered (representation, semantic map) pairs."""
        X, y = self._validate_pairs(X, y)
        torch.manual_seed(self.seed)
        self.palette_ = y[0].palette
        self.resolution_ = X[0].resolution
        self.in_channels_ = X[0].channels
        n_labels = len(self.palette_)

        net = TranslationGenerator(
            in_channels=self.in_channels_,
            out_channels=n_labels,
            base_width=self.base_width,
            depth=self.depth,
            residual_blocks=self.residual_blocks,
            recurrent=False,
        )
        disc = PatchDiscriminator(in_channels=n_labels, base_width=24)
        opt_g = torch.optim.Adam(
            net.parameters(), lr=self.learning_rate, betas=(self.adam_beta1, self.adam_beta2)
        )
        opt_d = torch.optim.Adam(
            disc.parameters(), lr=self.learning_rate, betas=(self.adam_beta1, self.adam_beta2)
        )

        inputs = torch.from_numpy(np.stack([x.data.astype(np.float32) for x in X]))
        targets = torch.from_numpy(np.stack([m.labels.astype(np.int64) for m in y]))
        onehots = torch.from_numpy(
            np.stack([semantic_map_to_onehot(m).data.astype(np.float32) for m in y])
        )

        rng = np.random.Generator(np.random.PCG64(self.seed))
        self.loss_history_ = []
        use_gan = self.adversarial_weight > 0
        for _epoch in range(self.epochs):
            order = rng.permutation(len(X))
            for start in range(0, len(X), self.batch_size):
                idx = order[start : start + self.batch_size].copy()
                xb, tb, ob = inputs[idx], targets[idx], onehots[idx]
                logits, _ = net(xb)
                loss = torch.nn.functional.cross_entropy(logits, tb)
                if use_gan:
                    probs = torch.softmax(logits, dim=1)
                    fake_scores, fake_feats = disc(probs)
                    _, real_feats = disc(ob)
                    adv = lsgan_generator_loss(fake_scores)
                    fm = feature_matching_loss(fake_feats, real_feats)
                    loss = loss + self.adversarial_weight * (adv + self.feature_matching_weight * fm)
                opt_g.zero_grad()
                loss.backward()
                opt_g.step()
                if use_gan:
                    real_scores, _ = disc(ob)
                    fake_scores, _ = disc(torch.softmax(logits.detach(), dim=1))
                    d_loss = lsgan_discriminator_loss(real_scores, fake_scores)
                    opt_d.zero_grad()
                    d_loss.backward()
                    opt_d.step()
                self.loss_history_.append(float(loss.detach()))
        self.net_ = net.eval()
        self.epochs_completed_ = self.epochs
        return self

    # ------------------------------------------------------------------

    def initialize(self, resolution: tuple[int, int], palette=SYNTHETIC_PALETTE) -> "BodyMapEstimator":
        """Build random (untrained) weights; the output contract (a valid
        semantic map) holds regardless of training."""
        torch.manual_seed(self.seed)
        self.palette_ = palette
        self.resolution_ = tuple(resolution)
        self.in_channels_ = VARIANT_CHANNELS[self.variant]
        self.net_ = TranslationGenerator(
            in_channels=self.in_channels_,
            out_channels=len(palette),
            base_width=self.base_width,
            depth=self.depth,
            residual_blocks=self.residual_blocks,
            recurrent=False,
        ).eval()
        return self

    def _require_fitted(self) -> TranslationGenerator:
        if not hasattr(self, "net_"):
            raise RuntimeError("estimator is not fitted; call fit() or load()")
        return self.net_

    def predict(
        self,
        X,
        person_id: str | None = None,
        allow_person_mismatch: bool = False,
    ) -> list[SemanticMap]:
        """Per-pixel argmax labeling for each input representation."""
        net = self._require_fitted()
        if person_id is not None and person_id != self.person_id and not allow_person_mismatch:
            raise ValueError(
                f"estimator is person-specific (trained for {self.person_id!r}, "
                f"asked for {person_id!r}); pass allow_person_mismatch=True to override"
            )
        if isinstance(X, FrameImage):
            X = [X]
        maps = []
        with torch.no_grad():
            for i, x in enumerate(X):
                x = check_frame_image(x, name=f"X[{i}]")
                if x.resolution != self.resolution_:
                    raise RasterError(
                        f"X[{i}]: resolution {x.resolution} does not match "
                        f"training resolution {self.resolution_}"
                    )
                if x.channels != self.in_channels_:
                    raise RasterError(
                        f"X[{i}]: {x.channels} channels, trained with {self.in_channels_}"
                    )
                logits, _ = net(torch.from_numpy(x.data.astype(np.float32))[None])
                labels = torch.argmax(logits[0], dim=0).numpy().astype(np.uint8)
                maps.append(SemanticMap(labels, self.palette_))
        return maps

    def score(self, X, y) -> float:
        """Mean per-pixel accuracy over the given pairs."""
        predictions = self.predict(X)
        return float(np.mean([pixel_accuracy(p, check_semantic_map(t)) for p, t in zip(predictions, y)]))

    # ------------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        net = self._require_fitted()
        weights = {k: v.detach().numpy().astype(np.float32) for k, v in net.state_dict().items()}
        palette_name = next(k for k, v in _PALETTES.items() if v == self.palette_)
        metadata = {
            "kind": "bodymap",
            "config_hash": self._params_hash(),
            "version": __version__,
            "seed": self.seed,
            "person_id": self.person_id,
            "variant": self.variant,
            "palette": palette_name,
            "resolution": list(self.resolution_),
            "in_channels": self.in_channels_,
            "params": self.get_params(),
        }
        save_checkpoint(path, weights, metadata)

    @classmethod
    def load(cls, path: str | Path) -> "BodyMapEstimator":
        weights, metadata = load_checkpoint(path)
        if metadata.get("kind") != "bodymap":
            raise ValueError(f"{path}: not a body-map checkpoint (kind={metadata.get('kind')!r})")
        est = cls(**metadata["params"])
        est.palette_ = _PALETTES[metadata["palette"]]
        est.resolution_ = tuple(metadata["resolution"])
        est.in_channels_ = metadata["in_channels"]
        net = TranslationGenerator(
            in_channels=est.in_channels_,
            out_channels=len(est.palette_),
            base_width=est.base_width,
            depth=est.depth,
            residual_blocks=est.residual_blocks,
            recurrent=False,
        )
        net.load_state_dict({k: torch.from_numpy(v) for k, v in weights.items()})
        est.net_ = net.eval()
        return est

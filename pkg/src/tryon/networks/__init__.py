from .convlstm import ConvLSTMCell
from .discriminator import PatchDiscriminator
from .generator import ResidualBlock, TranslationGenerator, init_weights
from .losses import (
    feature_matching_loss,
    lsgan_discriminator_loss,
    lsgan_generator_loss,
)

__all__ = [
    "ConvLSTMCell",
    "PatchDiscriminator",
    "ResidualBlock",
    "TranslationGenerator",
    "init_weights",
    "feature_matching_loss",
    "lsgan_discriminator_loss",
    "lsgan_generator_loss",
]

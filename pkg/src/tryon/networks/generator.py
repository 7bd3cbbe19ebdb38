"""Encoder / residual stack / decoder generator with an optional
convolutional LSTM memory inserted at the bottleneck."""

from __future__ import annotations

import torch
from torch import nn

from .convlstm import ConvLSTMCell

__all__ = ["ResidualBlock", "TranslationGenerator", "init_weights"]


def init_weights(module: nn.Module) -> None:
    """Gaussian(0, 0.02) init, the convention for this family of GANs."""
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d)):
            nn.init.normal_(m.weight, 0.0, 0.02)
            if m.bias is not None:
                nn.init.zeros_(m.bias)


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.ReflectionPad2d(1),
            nn.Conv2d(channels, channels, 3),
            nn.InstanceNorm2d(channels),
            nn.SiLU(),
            nn.ReflectionPad2d(1),
            nn.Conv2d(channels, channels, 3),
            nn.InstanceNorm2d(channels),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.body(x)


class TranslationGenerator(nn.Module):
    """Image-to-image generator, optionally recurrent at the bottleneck.

    ``depth`` stride-2 stages halve the resolution; the LSTM cell (when
    ``recurrent``) sits after the residual stack and its hidden output
    feeds the decoder, so the recurrent and per-frame variants share every
    other layer shape and differ in parameters by exactly the cell.

    Inputs are rasters in [0, 1]; they are remapped to [-1, 1] at the
    network boundary. The head is raw (unbounded) outputs; callers apply
    their own output activation. Activations are SiLU throughout: a smooth
    network is a requirement for the finite-difference gradient
    verification to hold at a coarse step size.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        base_width: int = 32,
        depth: int = 2,
        residual_blocks: int = 4,
        recurrent: bool = False,
    ):
        super().__init__()
        if depth < 1:
            raise ValueError("depth must be >= 1")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.depth = depth
        self.recurrent = recurrent

        widths = [base_width * (2**i) for i in range(depth + 1)]
        self.bottleneck_channels = widths[-1]

        stem = [nn.ReflectionPad2d(3), nn.Conv2d(in_channels, widths[0], 7), nn.InstanceNorm2d(widths[0]), nn.SiLU()]
        downs = []
        for w_in, w_out in zip(widths[:-1], widths[1:]):
            downs += [
                nn.Conv2d(w_in, w_out, 3, stride=2, padding=1),
                nn.InstanceNorm2d(w_out),
                nn.SiLU(),
            ]
        self.encoder = nn.Sequential(*stem, *downs)
        self.residual = nn.Sequential(*[ResidualBlock(widths[-1]) for _ in range(residual_blocks)])
        self.cell = ConvLSTMCell(widths[-1], widths[-1]) if recurrent else None
        ups = []
        for w_in, w_out in zip(widths[:0:-1], widths[-2::-1]):
            ups += [
                nn.ConvTranspose2d(w_in, w_out, 3, stride=2, padding=1, output_padding=1),
                nn.InstanceNorm2d(w_out),
                nn.SiLU(),
            ]
        self.decoder = nn.Sequential(*ups)
        self.head = nn.Sequential(nn.ReflectionPad2d(3), nn.Conv2d(widths[0], out_channels, 7))
        init_weights(self)

    def state_shape(self, height: int, width: int) -> tuple[int, int, int]:
        return (self.bottleneck_channels, height // (2**self.depth), width // (2**self.depth))

    def zero_state(self, batch: int, height: int, width: int, *, dtype=None, device=None):
        c, h, w = self.state_shape(height, width)
        param = next(self.parameters())
        kwargs = {"dtype": dtype or param.dtype, "device": device or param.device}
        return torch.zeros((batch, c, h, w), **kwargs), torch.zeros((batch, c, h, w), **kwargs)

    def forward(
        self,
        x: torch.Tensor,
        state: tuple[torch.Tensor, torch.Tensor] | None = None,
    ) -> tuple[torch.Tensor, tuple[torch.Tensor, torch.Tensor]]:
        """Returns raw head output and the (cell, hidden) state.

        The per-frame variant ignores incoming state and always returns the
        zero state, making it state-invariant by construction.
        """
        batch, _, height, width = x.shape
        z = self.encoder(x * 2.0 - 1.0)
        z = self.residual(z)
        if self.cell is not None:
            if state is None:
                state = self.zero_state(batch, height, width, dtype=x.dtype, device=x.device)
            self._check_state(state, batch, height, width)
            z, new_state = self.cell(z, state)
        else:
            new_state = self.zero_state(batch, height, width, dtype=x.dtype, device=x.device)
        y = self.decoder(z)
        return self.head(y), new_state

    def _check_state(self, state, batch: int, height: int, width: int) -> None:
        want = (batch,) + self.state_shape(height, width)
        for name, tensor in zip(("cell", "hidden"), state):
            if tuple(tensor.shape) != want:
                raise ValueError(
                    f"recurrent {name} state has shape {tuple(tensor.shape)}, expected {want}"
                )

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def cell_parameter_count(self) -> int:
        return self.cell.parameter_count() if self.cell is not None else 0

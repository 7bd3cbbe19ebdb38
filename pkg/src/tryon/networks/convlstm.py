"""Convolutional LSTM cell carried across frames at the generator bottleneck."""

from __future__ import annotations

import torch
from torch import nn

__all__ = ["ConvLSTMCell"]


class ConvLSTMCell(nn.Module):
    """Single convolutional LSTM cell.

    All four gates come from one convolution over the concatenated input
    and hidden state. State tensors are (N, hidden, H, W); `zero_state`
    builds the fresh all-zeros pair.
    """

    def __init__(self, in_channels: int, hidden_channels: int, kernel_size: int = 3):
        super().__init__()
        self.in_channels = in_channels
        self.hidden_channels = hidden_channels
        self.gates = nn.Conv2d(
            in_channels + hidden_channels,
            4 * hidden_channels,
            kernel_size,
            padding=kernel_size // 2,
        )

    def zero_state(
        self, batch: int, height: int, width: int, *, dtype=None, device=None
    ) -> tuple[torch.Tensor, torch.Tensor]:
        shape = (batch, self.hidden_channels, height, width)
        kwargs = {"dtype": dtype or self.gates.weight.dtype, "device": device or self.gates.weight.device}
        return torch.zeros(shape, **kwargs), torch.zeros(shape, **kwargs)

    def forward(
        self, x: torch.Tensor, state: tuple[torch.Tensor, torch.Tensor]
    ) -> tuple[torch.Tensor, tuple[torch.Tensor, torch.Tensor]]:
        cell, hidden = state
        gates = self.gates(torch.cat([x, hidden], dim=1))
        in_gate, forget_gate, out_gate, cell_gate = gates.chunk(4, dim=1)
        in_gate = torch.sigmoid(in_gate)
        forget_gate = torch.sigmoid(forget_gate)
        out_gate = torch.sigmoid(out_gate)
        cell_gate = torch.tanh(cell_gate)
        new_cell = forget_gate * cell + in_gate * cell_gate
        new_hidden = out_gate * torch.tanh(new_cell)
        return new_hidden, (new_cell, new_hidden)

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

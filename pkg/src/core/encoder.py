import torch
import torch.nn as nn
from typing import Sequence

ACTIVATIONS = {
    'relu': nn.ReLU,
    'gelu': nn.GELU,
}


def make_activation(name: str) -> nn.Module:
    if name not in ACTIVATIONS:
        raise ValueError(f"Unknown activation: {name}")
    return ACTIVATIONS[name]()


class ConvEncoder(nn.Module):
    """Feature extractor h: stride-2 conv blocks followed by global average pooling

    Each block is conv -> GroupNorm -> activation. GroupNorm normalizes every
    example on its own, so a row of features never depends on the rest of the batch.
    """

    def __init__(self, in_channels: int = 1, image_size: int = 32,
                 widths: Sequence[int] = (16, 32, 64), groups: int = 4,
                 activation: str = 'relu'):
        super(ConvEncoder, self).__init__()

        self.in_channels = in_channels
        self.image_size = image_size
        self.feature_dim = widths[-1]

        layers = []
        prev_channels = in_channels
        for width in widths:
            layers.extend([
                nn.Conv2d(prev_channels, width, kernel_size=3, stride=2, padding=1),
                nn.GroupNorm(min(groups, width), width),
                make_activation(activation),
            ])
            prev_channels = width

        self.blocks = nn.Sequential(*layers)
        self.pool = nn.AdaptiveAvgPool2d(1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        expected = (self.in_channels, self.image_size, self.image_size)
        if x.ndim != 4 or tuple(x.shape[1:]) != expected:
            raise ValueError(f"Expected batch of shape (N, {expected[0]}, {expected[1]}, {expected[2]}), "
                             f"got {tuple(x.shape)}")
        return self.pool(self.blocks(x)).flatten(1)


def encoder_forward(encoder: ConvEncoder, batch: torch.Tensor) -> torch.Tensor:
    """Features y = h(x), shape (N, F)"""
    return encoder(batch)

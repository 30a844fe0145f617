import torch
import torch.nn as nn

from .encoder import make_activation


class MLPHead(nn.Module):
    """Projection / prediction head: Linear -> LayerNorm -> activation -> Linear

    BYOL uses BatchNorm in the hidden layer; LayerNorm keeps single-example
    forwards well defined.
    """

    def __init__(self, in_dim: int, hidden_dim: int = 128, out_dim: int = 32,
                 activation: str = 'relu'):
        super(MLPHead, self).__init__()

        self.in_dim = in_dim
        self.out_dim = out_dim
        self.network = nn.Sequential(
            nn.Linear(in_dim, hidden_dim),
            nn.LayerNorm(hidden_dim),
            make_activation(activation),
            nn.Linear(hidden_dim, out_dim),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"Expected input of shape (N, {self.in_dim}), got {tuple(x.shape)}")
        return self.network(x)


def projector_forward(projector: MLPHead, y: torch.Tensor) -> torch.Tensor:
    """z = g(y)"""
    return projector(y)


def predictor_forward(predictor: MLPHead, z: torch.Tensor) -> torch.Tensor:
    """q(z)"""
    return predictor(z)

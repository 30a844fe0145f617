import math

import torch
import torch.nn as nn

from .encoder import ConvEncoder
from ..data.labels import NUM_CLASSES


def init_classifier(feature_dim: int, seed: int, num_classes: int = NUM_CLASSES) -> nn.Linear:
    """Transfer classifier c: weights ~ U(-1/sqrt(F), 1/sqrt(F)), zero bias"""
    if feature_dim <= 0:
        raise ValueError(f"Invalid feature width: {feature_dim}")

    layer = nn.Linear(feature_dim, num_classes)
    bound = 1.0 / math.sqrt(feature_dim)
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        weight = torch.rand(num_classes, feature_dim, generator=generator, dtype=torch.float64)
        layer.weight.copy_((weight * 2.0 - 1.0) * bound)
        layer.bias.zero_()
    return layer


def classifier_forward(classifier: nn.Linear, y: torch.Tensor) -> torch.Tensor:
    """Logits c(y), shape (N, C)"""
    if y.ndim != 2 or y.shape[1] != classifier.in_features:
        raise ValueError(f"Expected features of shape (N, {classifier.in_features}), got {tuple(y.shape)}")
    return classifier(y)


class TransferModel(nn.Module):
    """f = c o h"""

    def __init__(self, encoder: ConvEncoder, classifier: nn.Linear):
        super(TransferModel, self).__init__()
        self.encoder = encoder
        self.classifier = classifier

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return classifier_forward(self.classifier, self.encoder(x))

import copy
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterator, Sequence

import torch
import torch.nn as nn

from .encoder import ConvEncoder, encoder_forward
from .heads import MLPHead, predictor_forward, projector_forward
from .emotion_classifier import EmotionClassifier
from .ema import ema_update
from ..data.labels import NUM_CLASSES


@dataclass
class ModelConfig:
    in_channels: int = 1
    encoder_widths: Sequence[int] = (16, 32, 64)
    group_norm_groups: int = 4
    hidden_dim: int = 128
    projection_dim: int = 32
    activation: str = 'relu'

    @property
    def feature_dim(self) -> int:
        return self.encoder_widths[-1]

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['encoder_widths'] = list(self.encoder_widths)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ModelConfig':
        data = dict(data)
        data['encoder_widths'] = tuple(data['encoder_widths'])
        return cls(**data)


@dataclass
class BranchOutputs:
    """Online prediction q(z) and target projection z' for one view"""
    prediction: torch.Tensor
    target_projection: torch.Tensor


def build_encoder(config: ModelConfig, image_size: int) -> ConvEncoder:
    return ConvEncoder(in_channels=config.in_channels, image_size=image_size,
                       widths=tuple(config.encoder_widths), groups=config.group_norm_groups,
                       activation=config.activation)


class ByelNetwork(nn.Module):
    """Online branch (h, g, q), EMA target branch (h', g') and emotion matrix W_E"""

    def __init__(self, config: ModelConfig, image_size: int, num_classes: int = NUM_CLASSES):
        super(ByelNetwork, self).__init__()

        self.config = config
        self.image_size = image_size

        self.online_encoder = build_encoder(config, image_size)
        self.online_projector = MLPHead(config.feature_dim, config.hidden_dim,
                                        config.projection_dim, config.activation)
        # Predictor output lives in the projection space so the same w_idx can be subtracted from both
        self.predictor = MLPHead(config.projection_dim, config.hidden_dim,
                                 config.projection_dim, config.activation)
        self.emotion = EmotionClassifier(config.projection_dim, num_classes)

        self.target_encoder = copy.deepcopy(self.online_encoder)
        self.target_projector = copy.deepcopy(self.online_projector)
        for param in self.target_parameters():
            param.requires_grad = False

        self.step = 0

    @property
    def emotion_matrix(self) -> torch.Tensor:
        return self.emotion.weight

    def online_parameters(self) -> Iterator[nn.Parameter]:
        """Everything the optimizer updates: h, g, q and W_E"""
        for module in (self.online_encoder, self.online_projector, self.predictor, self.emotion):
            yield from module.parameters()

    def named_online_parameters(self) -> Iterator:
        for prefix, module in (('online_encoder', self.online_encoder),
                               ('online_projector', self.online_projector),
                               ('predictor', self.predictor),
                               ('emotion', self.emotion)):
            for name, param in module.named_parameters():
                yield f"{prefix}.{name}", param

    def target_parameters(self) -> Iterator[nn.Parameter]:
        yield from self.target_encoder.parameters()
        yield from self.target_projector.parameters()

    def forward_online(self, x: torch.Tensor) -> torch.Tensor:
        return predictor_forward(self.predictor,
                                 projector_forward(self.online_projector, encoder_forward(self.online_encoder, x)))

    @torch.no_grad()
    def forward_target(self, x: torch.Tensor) -> torch.Tensor:
        return projector_forward(self.target_projector, encoder_forward(self.target_encoder, x))

    def forward(self, view1: torch.Tensor, view2: torch.Tensor) -> Dict[str, BranchOutputs]:
        return {
            'view1': BranchOutputs(self.forward_online(view1), self.forward_target(view1)),
            'view2': BranchOutputs(self.forward_online(view2), self.forward_target(view2)),
        }

    def update_target(self, tau: float):
        """EMA of h and g into h' and g' (the predictor has no target copy)"""
        ema_update(self.target_encoder, self.online_encoder, tau)
        ema_update(self.target_projector, self.online_projector, tau)

import logging
from dataclasses import dataclass, fields
from typing import Dict

import torch
import torch.nn.functional as F

from ..core.byel_network import BranchOutputs
from ..core.emotion_classifier import emotion_logits, subtract_emotion_vector
from ..data.labels import NUM_CLASSES
from ..utils.exceptions import ConfigError, DegenerateInputError

NORM_EPS = 1e-12


@dataclass
class LossConfig:
    """Weights of the five terms plus the ablation switches

    The BYOL arm is subtract_emotion=False with classify/orthogonal weights 0.
    """
    byol_weight: float = 1.0
    classify_weight: float = 1.0
    orthogonal_weight: float = 1.0
    subtract_emotion: bool = True
    stop_gradient_emotion: bool = True
    classify_emotion_only: bool = False

    def validate(self):
        for name in ('byol_weight', 'classify_weight', 'orthogonal_weight'):
            value = getattr(self, name)
            if value < 0:
                raise ConfigError(f"Invalid {name}: {value}")

    @classmethod
    def byol(cls) -> 'LossConfig':
        return cls(classify_weight=0.0, orthogonal_weight=0.0, subtract_emotion=False)


@dataclass
class LossBreakdown:
    byol: torch.Tensor
    byol_swapped: torch.Tensor
    classify: torch.Tensor
    classify_swapped: torch.Tensor
    orthogonal: torch.Tensor
    total: torch.Tensor

    def to_dict(self) -> Dict[str, float]:
        return {f.name: float(getattr(self, f.name).detach()) for f in fields(self)}


def classify_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean cross-entropy of softmax(logits) against labels"""
    if logits.ndim != 2 or logits.shape[1] != NUM_CLASSES:
        raise ValueError(f"Expected logits of shape (N, {NUM_CLASSES}), got {tuple(logits.shape)}")
    if not torch.isfinite(logits).all():
        raise ValueError("Non-finite logits in classify loss")
    labels = torch.as_tensor(labels, dtype=torch.long, device=logits.device)
    if len(labels) != len(logits):
        raise ValueError(f"Expected {len(logits)} labels, got {len(labels)}")
    if len(labels) and (labels.min() < 0 or labels.max() >= NUM_CLASSES):
        raise ValueError(f"Invalid label in {labels.tolist()}")
    return F.cross_entropy(logits, labels)


def orthogonal_loss(emotion_matrix: torch.Tensor) -> torch.Tensor:
    """Entrywise L1 norm of W^T W - I"""
    if emotion_matrix.ndim != 2:
        raise ValueError(f"Expected a matrix, got shape {tuple(emotion_matrix.shape)}")
    if not torch.isfinite(emotion_matrix).all():
        raise ValueError("Non-finite entries in emotion matrix")
    num_classes = emotion_matrix.shape[1]
    identity = torch.eye(num_classes, dtype=emotion_matrix.dtype, device=emotion_matrix.device)
    # abs has subgradient 0 at exact zeros
    return (emotion_matrix.T @ emotion_matrix - identity).abs().sum()


def byol_loss(prediction: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean of 2 - 2 cos(prediction, target); the target side is a constant"""
    if prediction.shape != target.shape or prediction.ndim != 2:
        raise ValueError(f"Shape mismatch: {tuple(prediction.shape)} vs {tuple(target.shape)}")
    target = target.detach()

    pred_norm = prediction.norm(dim=1)
    target_norm = target.norm(dim=1)
    degenerate = (pred_norm < NORM_EPS) | (target_norm < NORM_EPS)
    if degenerate.any():
        rows = torch.nonzero(degenerate).flatten().tolist()
        raise DegenerateInputError(f"Zero-norm rows in bootstrap loss input: {rows}")

    cosine = (prediction * target).sum(dim=1) / (pred_norm * target_norm)
    return (2.0 - 2.0 * cosine).mean()


def byel_total(online_out_v1: torch.Tensor, target_out_v2: torch.Tensor,
               online_out_v2: torch.Tensor, target_out_v1: torch.Tensor,
               labels: torch.Tensor, emotion_matrix: torch.Tensor,
               config: LossConfig = None) -> LossBreakdown:
    """Symmetrized loss over both view orderings

    online_out_* are predictor outputs q(z), target_out_* target projections z'.
    """
    config = config or LossConfig()
    widths = {t.shape[1] for t in (online_out_v1, target_out_v2, online_out_v2, target_out_v1)}
    if widths != {emotion_matrix.shape[0]}:
        raise ValueError(f"All outputs must have width {emotion_matrix.shape[0]}, got {sorted(widths)}")

    def subtract(v):
        if not config.subtract_emotion:
            return v
        return subtract_emotion_vector(v, emotion_matrix, labels, config.stop_gradient_emotion)

    byol = byol_loss(subtract(online_out_v1), subtract(target_out_v2))
    byol_swapped = byol_loss(subtract(online_out_v2), subtract(target_out_v1))

    def logits(v):
        # Logits come from q(z) before subtraction
        return emotion_logits(emotion_matrix, v.detach() if config.classify_emotion_only else v)

    zero = emotion_matrix.new_zeros(())
    if config.classify_weight > 0:
        classify = classify_loss(logits(online_out_v1), labels)
        classify_swapped = classify_loss(logits(online_out_v2), labels)
    else:
        classify = classify_swapped = zero
    orthogonal = orthogonal_loss(emotion_matrix) if config.orthogonal_weight > 0 else zero

    total = (config.byol_weight * (byol + byol_swapped)
             + config.classify_weight * (classify + classify_swapped)
             + config.orthogonal_weight * orthogonal)

    return LossBreakdown(byol=byol, byol_swapped=byol_swapped, classify=classify,
                         classify_swapped=classify_swapped, orthogonal=orthogonal, total=total)


class ByelLossCalculator:
    """Loss calculator over the outputs of ByelNetwork.forward"""

    def __init__(self, config: LossConfig = None):
        self.config = config or LossConfig()
        self.config.validate()
        self.logger = logging.getLogger(__name__)

    def calculate(self, outputs: Dict[str, BranchOutputs], labels: torch.Tensor,
                  emotion_matrix: torch.Tensor) -> LossBreakdown:
        view1, view2 = outputs['view1'], outputs['view2']
        return byel_total(view1.prediction, view2.target_projection,
                          view2.prediction, view1.target_projection,
                          labels, emotion_matrix, self.config)

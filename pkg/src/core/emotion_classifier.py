import torch
import torch.nn as nn

from ..data.labels import NUM_CLASSES


class EmotionClassifier(nn.Module):
    """Emotion matrix W_E (D x C); column c is the emotion vector of class c. No bias."""

    def __init__(self, dim: int, num_classes: int = NUM_CLASSES):
        super(EmotionClassifier, self).__init__()
        if dim < num_classes:
            raise ValueError(f"Emotion matrix needs D >= C for orthonormal columns, got D={dim}, C={num_classes}")

        self.dim = dim
        self.num_classes = num_classes
        self.weight = nn.Parameter(torch.empty(dim, num_classes))
        nn.init.orthogonal_(self.weight)

    def forward(self, v: torch.Tensor) -> torch.Tensor:
        return emotion_logits(self.weight, v)


def emotion_logits(emotion_matrix: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
    """Logits v . W_E, shape (N, C)"""
    if v.ndim != 2 or v.shape[1] != emotion_matrix.shape[0]:
        raise ValueError(f"Vector width {tuple(v.shape)} does not match emotion matrix "
                         f"{tuple(emotion_matrix.shape)}")
    return v @ emotion_matrix


def subtract_emotion_vector(v: torch.Tensor, emotion_matrix: torch.Tensor, labels: torch.Tensor,
                            stop_gradient: bool = True) -> torch.Tensor:
    """v[i] - W_E[:, labels[i]]

    With stop_gradient the emotion vectors are treated as constants on this
    path, so W_E is only shaped by the classification and orthogonality losses.
    """
    if v.ndim != 2 or v.shape[1] != emotion_matrix.shape[0]:
        raise ValueError(f"Vector width {tuple(v.shape)} does not match emotion matrix "
                         f"{tuple(emotion_matrix.shape)}")
    labels = torch.as_tensor(labels, dtype=torch.long, device=v.device)
    if labels.ndim != 1 or len(labels) != len(v):
        raise ValueError(f"Expected {len(v)} labels, got shape {tuple(labels.shape)}")
    if len(labels) and (labels.min() < 0 or labels.max() >= emotion_matrix.shape[1]):
        raise ValueError(f"Invalid label in {labels.tolist()}")

    vectors = emotion_matrix.detach() if stop_gradient else emotion_matrix
    return v - vectors[:, labels].T

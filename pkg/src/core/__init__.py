"""
Core module - networks, target-network averaging and checkpoints

Includes encoder, projection heads, emotion classifier, the online/target
network pair and the transfer classifier
"""

from .encoder import ConvEncoder
from .heads import MLPHead
from .emotion_classifier import EmotionClassifier, emotion_logits, subtract_emotion_vector
from .ema import TauSchedule, tau_for_step, ema_update
from .byel_network import ByelNetwork, ModelConfig, build_encoder
from .classifier import TransferModel, init_classifier
from .checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    'ConvEncoder',
    'MLPHead',
    'EmotionClassifier',
    'emotion_logits',
    'subtract_emotion_vector',
    'TauSchedule',
    'tau_for_step',
    'ema_update',
    'ByelNetwork',
    'ModelConfig',
    'build_encoder',
    'TransferModel',
    'init_classifier',
    'save_checkpoint',
    'load_checkpoint'
]

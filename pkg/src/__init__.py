"""
BYEL: emotion-aware self-supervised pre-training for facial emotion recognition

This package pre-trains a convolutional encoder with a bootstrap (online/target)
objective whose projections are stripped of their emotion component, then
transfers the encoder to a labelled source domain and scores it on a shifted
target domain of the synthetic ToyEmotions benchmark.
"""

__version__ = "1.0.0"
__description__ = "Emotion-aware bootstrap pre-training and transfer for facial emotion recognition"

# Core components exports
from .core.byel_network import ByelNetwork, ModelConfig
from .core.classifier import TransferModel
from .core.encoder import ConvEncoder

# Data components exports
from .data.labels import EmotionLabel, Domain, CLASS_NAMES
from .data.toy_benchmark import ToySpec, generate_toy_benchmark

# Training components exports
from .training.losses import LossConfig, ByelLossCalculator
from .training.lars import LARS
from .training.pretrainer import ByelPretrainer, PretrainConfig
from .training.transfer_trainer import TransferTrainer, TransferConfig

# Utility components exports
from .utils.monitoring import ResourceMonitor, PerformanceProfiler

# Evaluation components exports
from .evaluation.metrics_calculator import MetricsCalculator
from .evaluation.baseline_comparison import ArmComparator

__all__ = [
    # Core components
    'ByelNetwork', 'ModelConfig', 'TransferModel', 'ConvEncoder',

    # Data components
    'EmotionLabel', 'Domain', 'CLASS_NAMES', 'ToySpec', 'generate_toy_benchmark',

    # Training components
    'LossConfig', 'ByelLossCalculator', 'LARS', 'ByelPretrainer', 'PretrainConfig',
    'TransferTrainer', 'TransferConfig',

    # Utility components
    'ResourceMonitor', 'PerformanceProfiler',

    # Evaluation components
    'MetricsCalculator', 'ArmComparator'
]

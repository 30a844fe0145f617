"""
Evaluation module - target-domain metrics and arm comparison

Includes metrics calculator and the supervised/BYOL/BYEL comparator
"""

from .metrics_calculator import MetricsCalculator, MetricsReport, ConfusionMatrix, evaluate
from .baseline_comparison import ArmComparator

__all__ = [
    'MetricsCalculator',
    'MetricsReport',
    'ConfusionMatrix',
    'evaluate',
    'ArmComparator'
]

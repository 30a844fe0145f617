"""
Training module - pre-training and transfer learning

Includes the BYEL losses, the LARS optimizer, the pre-trainer and the transfer trainer
"""

from .losses import LossConfig, ByelLossCalculator, classify_loss, orthogonal_loss, byol_loss, byel_total
from .lars import LARS, build_optimizer, learning_rate_at
from .pretrainer import ByelPretrainer, PretrainConfig, run_pretraining
from .transfer_trainer import TransferTrainer, TransferConfig, run_transfer, select_best_epoch

__all__ = [
    'LossConfig',
    'ByelLossCalculator',
    'classify_loss',
    'orthogonal_loss',
    'byol_loss',
    'byel_total',
    'LARS',
    'build_optimizer',
    'learning_rate_at',
    'ByelPretrainer',
    'PretrainConfig',
    'run_pretraining',
    'TransferTrainer',
    'TransferConfig',
    'run_transfer',
    'select_best_epoch'
]

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import torch
from tqdm import tqdm

from ..core.byel_network import ByelNetwork
from ..core.checkpoint import (load_checkpoint, load_module_tensors, module_tensors, optimizer_state,
                               restore_optimizer_state, save_checkpoint, write_pointer)
from ..core.ema import TauSchedule, tau_for_step
from ..data.augmentations import AugmentConfig, augment_batch
from ..data.image_set import ImageSet
from ..data.labels import NUM_CLASSES
from ..utils.exceptions import ConfigError, DegenerateInputError, NonFiniteLossError
from ..utils.seeding import STREAM_PRETRAIN_EPOCH, derive_rng
from .lars import build_optimizer, learning_rate_at
from .losses import ByelLossCalculator, LossBreakdown, LossConfig

PHASE = 'pretrain'
METRIC_COLUMNS = ['step', 'epoch', 'tau', 'byol', 'byol_swapped', 'classify',
                  'classify_swapped', 'orthogonal', 'total']
# per-dimension std of q(z) across a batch below which the representation counts as collapsed
COLLAPSE_SPREAD = 1e-4


def prediction_spread(prediction: torch.Tensor) -> float:
    """Mean over dimensions of the batch std of q(z)"""
    return float(prediction.detach().std(dim=0, unbiased=False).mean())


@dataclass
class PretrainConfig:
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 0.2
    weight_decay: float = 1.5e-6
    tau_base: float = 0.996
    tau_schedule: str = 'cosine'
    optimizer: str = 'lars'
    lars_trust_coefficient: float = 0.01
    momentum: float = 0.9
    lr_schedule: str = 'cosine'
    warmup_epochs: int = 0
    seed: int = 0
    checkpoint_every: int = 10
    extra_checkpoint_epochs: Sequence[int] = field(default_factory=tuple)
    log_every: int = 10
    progress: bool = True

    def validate(self):
        if self.epochs < 1:
            raise ConfigError(f"Invalid pretrain epochs: {self.epochs}")
        if self.batch_size < 2:
            raise ConfigError(f"Invalid pretrain batch size: {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"Invalid learning rate: {self.learning_rate}")
        if self.weight_decay < 0:
            raise ConfigError(f"Invalid weight decay: {self.weight_decay}")
        if not 0.0 <= self.tau_base <= 1.0:
            raise ConfigError(f"Invalid tau_base: {self.tau_base}")
        if self.tau_schedule not in ('cosine', 'constant'):
            raise ConfigError(f"Unknown tau schedule: {self.tau_schedule}")
        if self.optimizer not in ('lars', 'momentum_sgd'):
            raise ConfigError(f"Unknown pretrain optimizer: {self.optimizer}")
        if self.lr_schedule not in ('cosine', 'constant'):
            raise ConfigError(f"Unknown learning rate schedule: {self.lr_schedule}")
        if not 0 <= self.warmup_epochs < self.epochs:
            raise ConfigError(f"Invalid warmup epochs: {self.warmup_epochs}")
        if self.checkpoint_every < 1:
            raise ConfigError(f"Invalid checkpoint_every: {self.checkpoint_every}")
        if self.lars_trust_coefficient <= 0:
            raise ConfigError(f"Invalid LARS trust coefficient: {self.lars_trust_coefficient}")

    def checkpoint_epochs(self) -> List[int]:
        """Fixed grid, ablation extras and the final epoch"""
        epochs = {e for e in range(1, self.epochs + 1) if e % self.checkpoint_every == 0}
        epochs.update(e for e in self.extra_checkpoint_epochs if 1 <= e <= self.epochs)
        epochs.add(self.epochs)
        return sorted(epochs)


class ByelPretrainer:
    """Phase-1 driver: owns the network, the optimizer and the metrics log"""

    def __init__(self, network: ByelNetwork, config: PretrainConfig, num_examples: int,
                 loss_config: Optional[LossConfig] = None,
                 augment_config: Optional[AugmentConfig] = None,
                 run_dir: Optional[Union[str, Path]] = None, config_hash: str = ''):
        config.validate()
        self.network = network
        self.config = config
        self.loss_calculator = ByelLossCalculator(loss_config)
        self.augment_config = augment_config or AugmentConfig()
        self.augment_config.validate()
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.config_hash = config_hash

        self.logger = logging.getLogger(__name__)

        if num_examples < config.batch_size:
            raise ConfigError(f"Dataset has {num_examples} images, fewer than batch size {config.batch_size}")
        self.num_examples = num_examples
        self.steps_per_epoch = math.ceil(num_examples / config.batch_size)
        self.total_steps = config.epochs * self.steps_per_epoch
        self.warmup_steps = config.warmup_epochs * self.steps_per_epoch
        self.tau_schedule = TauSchedule(config.tau_base, self.total_steps, config.tau_schedule)

        named = list(network.named_online_parameters())
        self.param_names = {id(p): name for name, p in named}
        self.optimizer = build_optimizer(named, config.optimizer, config.learning_rate,
                                         config.weight_decay, config.lars_trust_coefficient,
                                         config.momentum)

        self.history: List[Dict[str, float]] = []
        self.start_epoch = 0
        self.last_checkpoint: Optional[Path] = None
        self.last_tau = tau_for_step(self.tau_schedule, 0)
        self.last_prediction_spread = float('nan')

    def pretrain_step(self, images: torch.Tensor, labels: torch.Tensor,
                      rng: np.random.Generator) -> LossBreakdown:
        """One gradient step on the online branch and W_E, then one EMA update"""
        if len(images) != len(labels):
            raise ValueError(f"Batch of {len(images)} images with {len(labels)} labels")

        self.network.train()
        view1, view2 = augment_batch(images, rng, self.augment_config)

        lr = learning_rate_at(self.config.learning_rate, self.network.step, self.total_steps,
                              self.warmup_steps, self.config.lr_schedule)
        for group in self.optimizer.param_groups:
            group['lr'] = lr

        self.optimizer.zero_grad(set_to_none=True)
        outputs = self.network(view1, view2)
        try:
            breakdown = self.loss_calculator.calculate(outputs, labels, self.network.emotion_matrix)
        except DegenerateInputError as e:
            self.logger.error(f"Degenerate loss input at step {self.network.step}: {e}")
            raise

        if not torch.isfinite(breakdown.total):
            raise NonFiniteLossError(
                f"Non-finite loss at step {self.network.step}: {breakdown.to_dict()}",
                step=self.network.step,
                last_checkpoint=str(self.last_checkpoint) if self.last_checkpoint else None)

        self.last_prediction_spread = prediction_spread(outputs['view1'].prediction)
        breakdown.total.backward()
        self.optimizer.step()

        self.network.step += 1
        self.last_tau = tau_for_step(self.tau_schedule, self.network.step)
        self.network.update_target(self.last_tau)
        return breakdown

    def train(self, dataset: ImageSet) -> Dict[str, Any]:
        """Pre-training main loop"""
        if len(dataset) != self.num_examples:
            raise ValueError(f"Trainer prepared for {self.num_examples} images, got {len(dataset)}")

        checkpoint_epochs = set(self.config.checkpoint_epochs())
        self.logger.info(f"Starting pre-training: {self.config.epochs} epochs x "
                         f"{self.steps_per_epoch} steps, resuming at epoch {self.start_epoch}")

        epochs = tqdm(range(self.start_epoch, self.config.epochs), desc='pretrain',
                      disable=not self.config.progress)
        for epoch in epochs:
            epoch_stats = self._run_epoch(epoch, dataset)
            epoch_number = epoch + 1
            if epoch_stats['spread'] < COLLAPSE_SPREAD:
                self.logger.warning(f"Online predictions collapsed in epoch {epoch_number}: "
                                    f"spread {epoch_stats['spread']:.2e} across the batch")

            if epoch_number in checkpoint_epochs:
                self.save(epoch_number)
            self._write_metrics()

            if epoch_number % self.config.log_every == 0 or epoch_number == self.config.epochs:
                self._log_progress(epoch_number, epoch_stats)

        return self._compile_training_results()

    def _run_epoch(self, epoch: int, dataset: ImageSet) -> Dict[str, float]:
        rng = derive_rng(self.config.seed, STREAM_PRETRAIN_EPOCH, epoch)
        order = torch.from_numpy(rng.permutation(len(dataset)))
        totals = []
        spreads = []

        for batch in range(self.steps_per_epoch):
            index = order[batch * self.config.batch_size:(batch + 1) * self.config.batch_size]
            breakdown = self.pretrain_step(dataset.images[index], dataset.labels[index], rng)
            row = {'step': self.network.step, 'epoch': epoch + 1, 'tau': self.last_tau}
            row.update(breakdown.to_dict())
            self.history.append(row)
            totals.append(row['total'])
            spreads.append(self.last_prediction_spread)

        return {'loss': float(np.mean(totals)), 'tau': self.last_tau,
                'spread': float(np.mean(spreads))}

    def _log_progress(self, epoch: int, stats: Dict[str, float]):
        self.logger.info(
            f"Epoch {epoch:4d} | "
            f"Loss: {stats['loss']:8.4f} | "
            f"Tau: {stats['tau']:.4f} | "
            f"Step: {self.network.step:6d}"
        )

    def _compile_training_results(self) -> Dict[str, Any]:
        totals = [row['total'] for row in self.history]
        return {
            'steps': self.network.step,
            'epochs': self.config.epochs,
            'final_loss': totals[-1] if totals else None,
            'first_loss': totals[0] if totals else None,
            'last_checkpoint': str(self.last_checkpoint) if self.last_checkpoint else None,
        }

    @property
    def metrics_path(self) -> Optional[Path]:
        return self.run_dir / 'metrics' / 'pretrain.csv' if self.run_dir else None

    @property
    def checkpoint_root(self) -> Optional[Path]:
        return self.run_dir / 'checkpoints' / PHASE if self.run_dir else None

    def _write_metrics(self):
        if self.metrics_path is None:
            return
        self.metrics_path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(self.history, columns=METRIC_COLUMNS).to_csv(self.metrics_path, index=False)

    def header(self, epoch: int) -> Dict[str, Any]:
        return {
            'phase': PHASE,
            'epoch': epoch,
            'step': self.network.step,
            'dims': {'F': self.network.config.feature_dim,
                     'D': self.network.config.projection_dim,
                     'C': NUM_CLASSES},
            'image_size': self.network.image_size,
            'model': self.network.config.to_dict(),
            'config_hash': self.config_hash,
            'optimizer': {'name': self.config.optimizer},
        }

    def save(self, epoch: int) -> Optional[Path]:
        """Checkpoint network and optimizer state at an epoch boundary"""
        if self.checkpoint_root is None:
            return None
        tensors = module_tensors(self.network)
        opt_tensors, opt_scalars = optimizer_state(self.optimizer, self.param_names)
        tensors.update(opt_tensors)
        header = self.header(epoch)
        header['optimizer']['scalars'] = opt_scalars

        ckpt_dir = save_checkpoint(self.checkpoint_root / f"epoch_{epoch:04d}", tensors, header)
        write_pointer(self.checkpoint_root / 'latest.json',
                      {'checkpoint': ckpt_dir.name, 'epoch': epoch, 'step': self.network.step})
        self.last_checkpoint = ckpt_dir
        self.logger.debug(f"Pre-training checkpoint saved to {ckpt_dir}")
        return ckpt_dir

    def resume(self, checkpoint_dir: Union[str, Path]):
        """Restore an epoch-boundary checkpoint and the metrics logged up to it"""
        tensors, header = load_checkpoint(checkpoint_dir)
        if header.get('phase') != PHASE:
            raise ConfigError(f"Checkpoint {checkpoint_dir} is not a pre-training checkpoint")
        if self.config_hash and header.get('config_hash') != self.config_hash:
            self.logger.warning(f"Resuming from checkpoint with different config hash {header.get('config_hash')}")

        model_tensors = {k: v for k, v in tensors.items() if not k.startswith('optimizer.')}
        load_module_tensors(self.network, model_tensors)
        restore_optimizer_state(self.optimizer, self.param_names, tensors,
                                header['optimizer'].get('scalars', {}))
        self.network.step = int(header['step'])
        self.start_epoch = int(header['epoch'])
        self.last_checkpoint = Path(checkpoint_dir)
        self.last_tau = tau_for_step(self.tau_schedule, self.network.step)

        if self.metrics_path is not None and self.metrics_path.is_file():
            logged = pd.read_csv(self.metrics_path, float_precision='round_trip')
            logged = logged[logged['step'] <= self.network.step]
            self.history = logged.to_dict('records')
        self.logger.info(f"Resumed pre-training at epoch {self.start_epoch}, step {self.network.step}")


def run_pretraining(network: ByelNetwork, config: PretrainConfig, dataset: ImageSet,
                    loss_config: Optional[LossConfig] = None,
                    augment_config: Optional[AugmentConfig] = None,
                    run_dir: Optional[Union[str, Path]] = None, config_hash: str = '',
                    resume_from: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    trainer = ByelPretrainer(network, config, len(dataset), loss_config, augment_config,
                             run_dir, config_hash)
    if resume_from is not None:
        trainer.resume(resume_from)
    results = trainer.train(dataset)
    results['history'] = trainer.history
    return results

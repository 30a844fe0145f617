import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import torch
from tqdm import tqdm

from ..core.byel_network import ModelConfig, build_encoder
from ..core.checkpoint import (load_checkpoint, load_module_tensors, module_tensors, read_pointer,
                               save_checkpoint, write_pointer)
from ..core.classifier import TransferModel, init_classifier
from ..core.encoder import ConvEncoder
from ..data.image_set import ImageSet
from ..data.labels import CLASS_NAMES, NUM_CLASSES, Domain
from ..evaluation.metrics_calculator import MetricsReport, evaluate
from ..utils.exceptions import ConfigError, NonFiniteLossError
from ..utils.seeding import STREAM_TRANSFER_EPOCH, derive_rng
from .losses import classify_loss

PHASE = 'transfer'
ENCODER_PREFIX = 'online_encoder.'


@dataclass
class TransferConfig:
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 1e-3
    optimizer: str = 'adam'
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    seed: int = 0
    finetune_encoder: bool = True
    eval_batch_size: int = 256
    skip_absent_classes: bool = False
    log_every: int = 5
    progress: bool = True

    def validate(self):
        if self.epochs < 1:
            raise ConfigError(f"Invalid transfer epochs: {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"Invalid transfer batch size: {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"Invalid learning rate: {self.learning_rate}")
        if self.optimizer != 'adam':
            raise ConfigError(f"Unknown transfer optimizer: {self.optimizer}")


def select_best_epoch(scores: Sequence[float]) -> int:
    """1-based epoch of the maximal score; the earliest wins ties"""
    if len(scores) == 0:
        raise ValueError("No validation scores to select from")
    return int(np.argmax(np.asarray(scores, dtype=np.float64))) + 1


def load_pretrained_encoder(checkpoint_dir: Union[str, Path]) -> Tuple[ConvEncoder, Dict[str, Any]]:
    """h from a pre-training checkpoint; projector, predictor and W_E are discarded"""
    tensors, header = load_checkpoint(checkpoint_dir)
    if header.get('phase') != 'pretrain':
        raise ConfigError(f"Checkpoint {checkpoint_dir} is not a pre-training checkpoint")
    encoder = build_encoder(ModelConfig.from_dict(header['model']), header['image_size'])
    load_module_tensors(encoder, tensors, prefix=ENCODER_PREFIX)
    return encoder, header


def load_transfer_model(checkpoint_dir: Union[str, Path]) -> Tuple[TransferModel, Dict[str, Any]]:
    tensors, header = load_checkpoint(checkpoint_dir)
    if header.get('phase') != PHASE:
        raise ConfigError(f"Checkpoint {checkpoint_dir} is not a transfer checkpoint")
    model_config = ModelConfig.from_dict(header['model'])
    model = TransferModel(build_encoder(model_config, header['image_size']),
                          init_classifier(model_config.feature_dim, seed=0))
    load_module_tensors(model, tensors)
    return model, header


def resolve_best_checkpoint(run_dir: Union[str, Path]) -> Path:
    """Follow checkpoints/transfer/best.json"""
    pointer_path = Path(run_dir) / 'checkpoints' / PHASE / 'best.json'
    pointer = read_pointer(pointer_path)
    return pointer_path.parent / pointer['checkpoint']


class TransferTrainer:
    """Phase-2 driver: Adam on f = c o h, model selection by target macro F1"""

    def __init__(self, model: TransferModel, config: TransferConfig, model_config: ModelConfig,
                 run_dir: Optional[Union[str, Path]] = None, config_hash: str = ''):
        config.validate()
        self.model = model
        self.config = config
        self.model_config = model_config
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.config_hash = config_hash
        self.logger = logging.getLogger(__name__)

        for param in self.model.encoder.parameters():
            param.requires_grad = config.finetune_encoder
        trainable = [p for p in self.model.parameters() if p.requires_grad]
        self.optimizer = torch.optim.Adam(trainable, lr=config.learning_rate,
                                          betas=tuple(config.betas), eps=config.eps)

        self.history: List[Dict[str, float]] = []
        self.scores: List[float] = []

    def transfer_step(self, images: torch.Tensor, labels: torch.Tensor) -> float:
        """One Adam step on the cross-entropy of c(h(x))"""
        self.model.train()
        self.optimizer.zero_grad(set_to_none=True)
        logits = self.model(images)
        if not torch.isfinite(logits).all():
            raise NonFiniteLossError("Non-finite logits during transfer")
        loss = classify_loss(logits, labels)
        if not torch.isfinite(loss):
            raise NonFiniteLossError(f"Non-finite transfer loss: {loss.item()}")
        loss.backward()
        self.optimizer.step()
        return loss.item()

    def train(self, train_set: ImageSet, val_set: ImageSet) -> Dict[str, Any]:
        """Transfer main loop"""
        if len(val_set) == 0:
            raise ValueError("Validation set is empty")
        if val_set.manifest.domains - {Domain.TARGET}:
            raise ValueError("Validation set must contain only target-domain entries")

        steps_per_epoch = math.ceil(len(train_set) / self.config.batch_size)
        self.logger.info(f"Starting transfer: {self.config.epochs} epochs x {steps_per_epoch} steps, "
                         f"finetune_encoder={self.config.finetune_encoder}")

        best_report: Optional[MetricsReport] = None
        epochs = tqdm(range(self.config.epochs), desc='transfer', disable=not self.config.progress)
        for epoch in epochs:
            rng = derive_rng(self.config.seed, STREAM_TRANSFER_EPOCH, epoch)
            order = torch.from_numpy(rng.permutation(len(train_set)))
            losses = []
            for batch in range(steps_per_epoch):
                index = order[batch * self.config.batch_size:(batch + 1) * self.config.batch_size]
                losses.append(self.transfer_step(train_set.images[index], train_set.labels[index]))

            report = evaluate(self.model, val_set.images, val_set.labels,
                              self.config.eval_batch_size, self.config.skip_absent_classes)
            self.scores.append(report.macro_f1)
            row = {'epoch': epoch + 1, 'train_loss': float(np.mean(losses)),
                   'val_macro_f1': report.macro_f1}
            row.update({f"f1_{name.lower()}": f for name, f in zip(CLASS_NAMES, report.per_class_f1)})
            self.history.append(row)

            if select_best_epoch(self.scores) == epoch + 1:
                best_report = report
                self.save_best(epoch + 1, report)
            self._write_metrics()

            if (epoch + 1) % self.config.log_every == 0 or epoch + 1 == self.config.epochs:
                self._log_progress(row)

        return self._compile_training_results(best_report)

    def _log_progress(self, row: Dict[str, float]):
        self.logger.info(
            f"Epoch {row['epoch']:4d} | "
            f"Loss: {row['train_loss']:8.4f} | "
            f"Val macro F1: {row['val_macro_f1']:.4f}"
        )

    def _compile_training_results(self, best_report: Optional[MetricsReport]) -> Dict[str, Any]:
        best_epoch = select_best_epoch(self.scores)
        return {
            'best_epoch': best_epoch,
            'best_macro_f1': self.scores[best_epoch - 1],
            'first_macro_f1': self.scores[0],
            'best_report': best_report,
            'history': self.history,
        }

    @property
    def checkpoint_root(self) -> Optional[Path]:
        return self.run_dir / 'checkpoints' / PHASE if self.run_dir else None

    def _write_metrics(self):
        if self.run_dir is None:
            return
        path = self.run_dir / 'metrics' / 'transfer.csv'
        path.parent.mkdir(parents=True, exist_ok=True)
        columns = ['epoch', 'train_loss', 'val_macro_f1'] + [f"f1_{n.lower()}" for n in CLASS_NAMES]
        pd.DataFrame(self.history, columns=columns).to_csv(path, index=False)

    def save_best(self, epoch: int, report: MetricsReport) -> Optional[Path]:
        if self.checkpoint_root is None:
            return None
        header = {
            'phase': PHASE,
            'epoch': epoch,
            'step': epoch,
            'dims': {'F': self.model_config.feature_dim, 'D': self.model_config.projection_dim,
                     'C': NUM_CLASSES},
            'image_size': self.model.encoder.image_size,
            'model': self.model_config.to_dict(),
            'config_hash': self.config_hash,
            'macro_f1': report.macro_f1,
            'optimizer': {'name': 'adam', 'lr': self.config.learning_rate,
                          'betas': list(self.config.betas), 'eps': self.config.eps},
            'finetune_encoder': self.config.finetune_encoder,
        }
        ckpt_dir = save_checkpoint(self.checkpoint_root / 'best', module_tensors(self.model), header)
        write_pointer(self.checkpoint_root / 'best.json',
                      {'checkpoint': ckpt_dir.name, 'epoch': epoch, 'macro_f1': report.macro_f1})
        return ckpt_dir


def run_transfer(config: TransferConfig, encoder: ConvEncoder, model_config: ModelConfig,
                 train_set: ImageSet, val_set: ImageSet,
                 run_dir: Optional[Union[str, Path]] = None, config_hash: str = '') -> Dict[str, Any]:
    """Fresh classifier on top of a (pre-trained or random) encoder"""
    classifier = init_classifier(model_config.feature_dim, config.seed)
    trainer = TransferTrainer(TransferModel(encoder, classifier), config, model_config,
                              run_dir, config_hash)
    results = trainer.train(train_set, val_set)
    results['model'] = trainer.model
    return results

"""
Building blocks shared by the commands: data loading, model construction and
the two training phases wired to a RunConfig.
"""

import dataclasses
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from ..core.byel_network import ByelNetwork, ModelConfig, build_encoder
from ..core.checkpoint import read_pointer
from ..core.encoder import ConvEncoder
from ..data.image_set import ImageSet, load_image_set
from ..data.manifest import load_manifest
from ..training.losses import LossConfig
from ..training.pretrainer import run_pretraining
from ..training.transfer_trainer import load_pretrained_encoder, run_transfer
from ..utils.config import RunConfig, ablation_epochs
from ..utils.exceptions import ConfigError
from ..utils.seeding import set_seed

logger = logging.getLogger(__name__)

SOURCE_MANIFEST = 'source.jsonl'
TARGET_MANIFEST = 'target.jsonl'


def load_domains(config: RunConfig) -> Tuple[ImageSet, ImageSet]:
    """Source (training) and target (validation) image sets from data_root"""
    data_root = Path(config.paths.data_root)
    source = load_image_set(load_manifest(data_root / SOURCE_MANIFEST), config.toy.image_size)
    target = load_image_set(load_manifest(data_root / TARGET_MANIFEST), config.toy.image_size)
    logger.info(f"Loaded {len(source)} source and {len(target)} target images from {data_root}")
    return source, target


def build_network(config: RunConfig) -> ByelNetwork:
    set_seed(config.pretrain.seed)
    return ByelNetwork(config.model, config.toy.image_size)


def random_encoder(config: RunConfig) -> ConvEncoder:
    """Encoder for the supervised-only arm"""
    set_seed(config.transfer.seed)
    return build_encoder(config.model, config.toy.image_size)


def pretrain_hash(config: RunConfig) -> str:
    return config.hash('toy', 'augment', 'model', 'loss', 'pretrain')


def transfer_hash(config: RunConfig) -> str:
    return config.hash('transfer')


def pretrain(config: RunConfig, source: ImageSet, run_dir: Union[str, Path],
             loss_config: Optional[LossConfig] = None,
             resume_from: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    """Phase 1 with checkpoints on the fixed grid and at the ablation fractions"""
    extra = ablation_epochs(config.pretrain.epochs, config.compare.ablation_fractions)
    pretrain_config = dataclasses.replace(
        config.pretrain,
        extra_checkpoint_epochs=tuple(sorted(set(config.pretrain.extra_checkpoint_epochs) | set(extra))))
    network = build_network(config)
    return run_pretraining(network, pretrain_config, source,
                           loss_config=loss_config or config.loss,
                           augment_config=config.augment, run_dir=run_dir,
                           config_hash=pretrain_hash(config), resume_from=resume_from)


def pretrain_checkpoint(run_dir: Union[str, Path], epoch: Optional[int] = None) -> Path:
    """Checkpoint of a given epoch, or the latest one"""
    root = Path(run_dir) / 'checkpoints' / 'pretrain'
    if epoch is not None:
        return root / f"epoch_{epoch:04d}"
    return root / read_pointer(root / 'latest.json')['checkpoint']


def transfer(config: RunConfig, encoder: ConvEncoder, source: ImageSet, target: ImageSet,
             run_dir: Union[str, Path], model_config: Optional[ModelConfig] = None) -> Dict[str, Any]:
    return run_transfer(config.transfer, encoder, model_config or config.model, source, target,
                        run_dir=run_dir, config_hash=transfer_hash(config))


def transfer_from_checkpoint(config: RunConfig, checkpoint: Union[str, Path], source: ImageSet,
                             target: ImageSet, run_dir: Union[str, Path]) -> Dict[str, Any]:
    encoder, header = load_pretrained_encoder(checkpoint)
    if header['image_size'] != source.image_size:
        raise ConfigError(f"Checkpoint image size {header['image_size']} does not match "
                          f"data image size {source.image_size}")
    return transfer(config, encoder, source, target, run_dir, ModelConfig.from_dict(header['model']))

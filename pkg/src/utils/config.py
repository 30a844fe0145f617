"""
Run configuration

Profile YAML (config/profiles/<name>.yaml) -> user config file -> CLI flags.
Files hold flat dotted keys ("pretrain.epochs": 30) or nested mappings; both
are flattened before merging. The master "seed" fills every section seed that
is not set explicitly; a --seed flag on the command line overrides them all.
"""

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union, get_type_hints

import yaml

from ..core.byel_network import ModelConfig
from ..core.encoder import ACTIVATIONS
from ..data.augmentations import AugmentConfig
from ..data.labels import NUM_CLASSES
from ..data.toy_benchmark import ToySpec
from ..training.losses import LossConfig
from ..training.pretrainer import PretrainConfig
from ..training.transfer_trainer import TransferConfig
from .exceptions import ConfigError, MissingArtifactError

logger = logging.getLogger(__name__)

PROFILE_DIR = Path(__file__).resolve().parents[2] / 'config' / 'profiles'
PROFILES = ('desk', 'paper')
DEFAULT_PROFILE = 'desk'
SEEDED_SECTIONS = ('toy', 'pretrain', 'transfer')
TOP_LEVEL_KEYS = ('profile', 'seed')


@dataclass
class EvalConfig:
    batch_size: int = 256
    skip_absent_classes: bool = False
    write_predictions: bool = True


@dataclass
class CompareConfig:
    num_seeds: int = 3
    arms: Tuple[str, ...] = ('supervised', 'byol', 'byel')
    ablation_fractions: Tuple[float, ...] = (0.45, 0.90, 1.00)
    ordering_tolerance: float = 0.01


@dataclass
class PathsConfig:
    data_root: str = 'data/toy'
    run_dir: str = 'runs/default'


SECTIONS = {
    'toy': ToySpec,
    'augment': AugmentConfig,
    'model': ModelConfig,
    'loss': LossConfig,
    'pretrain': PretrainConfig,
    'transfer': TransferConfig,
    'eval': EvalConfig,
    'compare': CompareConfig,
    'paths': PathsConfig,
}


def load_config(config_path: Union[str, Path]) -> Dict[str, Any]:
    """Load a YAML or JSON configuration file"""
    path = Path(config_path)
    if not path.is_file():
        raise MissingArtifactError(f"Config file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse config file {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a mapping")
    return data


def load_profile(name: str) -> Dict[str, Any]:
    if name not in PROFILES:
        raise ConfigError(f"Unknown profile: {name} (expected one of {', '.join(PROFILES)})")
    return flatten(load_config(PROFILE_DIR / f"{name}.yaml"))


def flatten(data: Dict[str, Any], prefix: str = '') -> Dict[str, Any]:
    flat = {}
    for key, value in data.items():
        full_key = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten(value, f"{full_key}."))
        else:
            flat[full_key] = value
    return flat


def _coerce(key: str, value: Any, default: Any) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"Config key {key} expects a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"Config key {key} expects an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"Config key {key} expects a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"Config key {key} expects a list, got {value!r}")
        return tuple(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"Config key {key} expects a string, got {value!r}")
        return value
    return value


def _build(cls, flat: Dict[str, Any], prefix: str):
    hints = get_type_hints(cls)
    defaults = cls()
    kwargs = {}
    for f in dataclasses.fields(cls):
        key = f"{prefix}{f.name}"
        hint = hints[f.name]
        if dataclasses.is_dataclass(hint):
            kwargs[f.name] = _build(hint, flat, f"{key}.")
        elif key in flat:
            kwargs[f.name] = _coerce(key, flat[key], getattr(defaults, f.name))
    return cls(**kwargs)


def _to_plain(value: Any) -> Any:
    if isinstance(value, (tuple, list)):
        return [_to_plain(v) for v in value]
    return value


def config_hash(values: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form"""
    canonical = json.dumps(values, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


@dataclass
class RunConfig:
    profile: str = DEFAULT_PROFILE
    seed: int = 0
    toy: ToySpec = field(default_factory=ToySpec)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    pretrain: PretrainConfig = field(default_factory=PretrainConfig)
    transfer: TransferConfig = field(default_factory=TransferConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    compare: CompareConfig = field(default_factory=CompareConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    @classmethod
    def from_flat_dict(cls, flat: Dict[str, Any]) -> 'RunConfig':
        known = set(cls().to_flat_dict())
        unknown = sorted(set(flat) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")

        sections = {name: _build(section_cls, flat, f"{name}.") for name, section_cls in SECTIONS.items()}
        config = cls(profile=str(flat.get('profile', DEFAULT_PROFILE)),
                     seed=_coerce('seed', flat.get('seed', 0), 0), **sections)
        config.validate()
        return config

    def section_dict(self, name: str) -> Dict[str, Any]:
        return {key: _to_plain(value) for key, value in flatten(dataclasses.asdict(getattr(self, name))).items()}

    def to_flat_dict(self) -> Dict[str, Any]:
        flat = {'profile': self.profile, 'seed': self.seed}
        for name in SECTIONS:
            flat.update({f"{name}.{key}": value for key, value in self.section_dict(name).items()})
        return flat

    def hash(self, *sections: str) -> str:
        return config_hash({name: self.section_dict(name) for name in sections})

    def save(self, path: Union[str, Path]) -> Path:
        """Frozen copy of the fully resolved configuration"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_flat_dict(), f, indent=2, sort_keys=True)
        return path

    def with_seed(self, seed: int) -> 'RunConfig':
        """Copy with the master seed and every section seed set to seed"""
        return dataclasses.replace(
            self, seed=seed,
            toy=dataclasses.replace(self.toy, seed=seed),
            pretrain=dataclasses.replace(self.pretrain, seed=seed),
            transfer=dataclasses.replace(self.transfer, seed=seed),
        )

    def validate(self):
        if self.profile not in PROFILES:
            raise ConfigError(f"Unknown profile: {self.profile}")
        self.toy.validate()
        self.augment.validate()
        self.loss.validate()
        self.pretrain.validate()
        self.transfer.validate()

        model = self.model
        if not model.encoder_widths or min(model.encoder_widths) < 1:
            raise ConfigError(f"Invalid encoder widths: {model.encoder_widths}")
        if model.projection_dim < NUM_CLASSES:
            raise ConfigError(f"projection_dim must be >= {NUM_CLASSES} for the emotion matrix, "
                              f"got {model.projection_dim}")
        if model.hidden_dim < 1 or model.group_norm_groups < 1:
            raise ConfigError("hidden_dim and group_norm_groups must be positive")
        if model.activation not in ACTIVATIONS:
            raise ConfigError(f"Unknown activation: {model.activation}")
        if model.in_channels < 1:
            raise ConfigError(f"Invalid in_channels: {model.in_channels}")

        if self.eval.batch_size < 1:
            raise ConfigError(f"Invalid eval batch size: {self.eval.batch_size}")
        if self.compare.num_seeds < 1:
            raise ConfigError(f"Invalid compare num_seeds: {self.compare.num_seeds}")
        if any(not 0.0 < f <= 1.0 for f in self.compare.ablation_fractions):
            raise ConfigError(f"Invalid ablation fractions: {self.compare.ablation_fractions}")
        unknown_arms = set(self.compare.arms) - {'supervised', 'byol', 'byel'}
        if unknown_arms:
            raise ConfigError(f"Unknown compare arms: {sorted(unknown_arms)}")


def resolve_config(profile: Optional[str] = None, config_path: Optional[Union[str, Path]] = None,
                   overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """profile defaults -> config file -> explicit overrides"""
    file_values = flatten(load_config(config_path)) if config_path else {}
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    profile_name = profile or file_values.get('profile') or DEFAULT_PROFILE
    merged = load_profile(profile_name)
    merged.update(file_values)
    merged.update(overrides)
    merged['profile'] = profile_name

    seed = merged.get('seed', 0)
    for section in SEEDED_SECTIONS:
        key = f"{section}.seed"
        if 'seed' in overrides or key not in merged:
            merged[key] = seed

    config = RunConfig.from_flat_dict(merged)
    logger.debug(f"Resolved config: profile={profile_name}, seed={config.seed}")
    return config


def ablation_epochs(epochs: int, fractions: Sequence[float]) -> Tuple[int, ...]:
    """Epoch indices at the given fractions of the pre-training budget"""
    return tuple(sorted({max(1, int(round(f * epochs))) for f in fractions}))

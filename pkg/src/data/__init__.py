"""
Data module - ToyEmotions benchmark, manifests and augmentations

Includes label vocabulary, manifest I/O, image sets, the synthetic generator
and the two-view augmentation pipeline
"""

from .labels import EmotionLabel, Domain, NUM_CLASSES, CLASS_NAMES
from .manifest import DatasetManifest, ManifestEntry, load_manifest, save_manifest
from .image_set import ImageSet, load_image_set, write_image_set
from .toy_benchmark import ToySpec, CorruptionSpec, generate_toy_benchmark
from .augmentations import AugmentConfig, augment_pair, augment_batch

__all__ = [
    'EmotionLabel',
    'Domain',
    'NUM_CLASSES',
    'CLASS_NAMES',
    'DatasetManifest',
    'ManifestEntry',
    'load_manifest',
    'save_manifest',
    'ImageSet',
    'load_image_set',
    'write_image_set',
    'ToySpec',
    'CorruptionSpec',
    'generate_toy_benchmark',
    'AugmentConfig',
    'augment_pair',
    'augment_batch'
]

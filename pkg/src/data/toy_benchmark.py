"""
ToyEmotions: procedural six-class domain-shift benchmark

Class k is drawn as k+1 parallel bars oriented at k*30 degrees. Source images
are clean renders; target images are the same renders after a translation,
an additive brightness shift and Gaussian pixel noise. Each (class, index)
instance draws its nuisance parameters from its own seeded stream, so the
target image i of class k starts from exactly the render of source image i.
"""

import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import torch

from .labels import EmotionLabel, Domain, NUM_CLASSES
from .manifest import DatasetManifest, ManifestEntry
from .image_set import ImageSet
from ..utils.exceptions import ConfigError
from ..utils.seeding import derive_rng, STREAM_TOY_INSTANCE, STREAM_TOY_CORRUPTION

logger = logging.getLogger(__name__)

BAR_ANGLE_DEGREES = 30.0
ANGLE_JITTER_DEGREES = 6.0
SCALE_RANGE = (0.85, 1.0)
INTENSITY_RANGE = (0.75, 1.0)
GLYPH_EXTENT = 0.34


@dataclass
class CorruptionSpec:
    noise_sigma: float = 0.15
    brightness_shift: float = 0.2
    max_translate: int = 3


@dataclass
class ToySpec:
    image_size: int = 32
    per_class_count_source: int = 100
    per_class_count_target: int = 50
    corruption: CorruptionSpec = field(default_factory=CorruptionSpec)
    seed: int = 0

    def validate(self):
        if self.image_size < 16:
            raise ConfigError(f"Invalid image_size: {self.image_size} (must be >= 16)")
        if self.per_class_count_source < 1 or self.per_class_count_target < 1:
            raise ConfigError("Per-class counts must be >= 1")
        c = self.corruption
        if c.noise_sigma < 0:
            raise ConfigError(f"Invalid noise_sigma: {c.noise_sigma}")
        if not 0 <= c.brightness_shift <= 0.5:
            raise ConfigError(f"Invalid brightness_shift: {c.brightness_shift} (must be in [0, 0.5])")
        if not 0 <= c.max_translate < self.image_size / 4:
            raise ConfigError(f"Invalid max_translate: {c.max_translate} (must be in [0, image_size/4))")


def render_glyph(label: int, image_size: int, angle_jitter: float = 0.0,
                 scale: float = 1.0, intensity: float = 1.0) -> np.ndarray:
    """Anti-aliased bar glyph for a class on a black canvas (H x W, float64)"""
    coords = np.arange(image_size, dtype=np.float64) + 0.5 - image_size / 2.0
    ys, xs = np.meshgrid(coords, coords, indexing='ij')

    theta = np.deg2rad(BAR_ANGLE_DEGREES * label + angle_jitter)
    along = xs * np.cos(theta) + ys * np.sin(theta)
    across = -xs * np.sin(theta) + ys * np.cos(theta)

    extent = GLYPH_EXTENT * image_size * scale
    spacing = 2.0 * extent / NUM_CLASSES
    thickness = max(1.2, 0.5 * spacing)
    n_bars = label + 1
    offsets = (np.arange(n_bars) - (n_bars - 1) / 2.0) * spacing

    length_cover = np.clip(extent + 0.5 - np.abs(along), 0.0, 1.0)
    canvas = np.zeros((image_size, image_size), dtype=np.float64)
    for offset in offsets:
        width_cover = np.clip(thickness / 2.0 + 0.5 - np.abs(across - offset), 0.0, 1.0)
        canvas = np.maximum(canvas, width_cover * length_cover)

    return canvas * intensity


def translate(image: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Integer shift with zero fill"""
    if dx == 0 and dy == 0:
        return image
    shifted = np.zeros_like(image)
    h, w = image.shape
    src_y = slice(max(0, -dy), min(h, h - dy))
    dst_y = slice(max(0, dy), min(h, h + dy))
    src_x = slice(max(0, -dx), min(w, w - dx))
    dst_x = slice(max(0, dx), min(w, w + dx))
    shifted[dst_y, dst_x] = image[src_y, src_x]
    return shifted


def corrupt(image: np.ndarray, corruption: CorruptionSpec, rng: np.random.Generator) -> np.ndarray:
    """Target-domain shift: translate, brighten, add noise, clip"""
    t = corruption.max_translate
    dx, dy = (int(v) for v in rng.integers(-t, t + 1, size=2))
    shifted = translate(image, dx, dy)

    if corruption.brightness_shift > 0:
        shifted = shifted + corruption.brightness_shift
    if corruption.noise_sigma > 0:
        shifted = shifted + rng.normal(0.0, corruption.noise_sigma, size=shifted.shape)

    return np.clip(shifted, 0.0, 1.0)


def _render_instance(spec: ToySpec, label: int, index: int) -> np.ndarray:
    rng = derive_rng(spec.seed, STREAM_TOY_INSTANCE, label, index)
    angle_jitter = rng.uniform(-ANGLE_JITTER_DEGREES, ANGLE_JITTER_DEGREES)
    scale = rng.uniform(*SCALE_RANGE)
    intensity = rng.uniform(*INTENSITY_RANGE)
    return np.clip(render_glyph(label, spec.image_size, angle_jitter, scale, intensity), 0.0, 1.0)


def _build_domain(spec: ToySpec, domain: Domain, per_class: int) -> ImageSet:
    entries = []
    images = []
    for label in EmotionLabel:
        for index in range(per_class):
            image = _render_instance(spec, int(label), index)
            if domain is Domain.TARGET:
                rng = derive_rng(spec.seed, STREAM_TOY_CORRUPTION, int(label), index)
                image = corrupt(image, spec.corruption, rng)
            images.append(image.astype(np.float32))
            entries.append(ManifestEntry(image=f"toy:{domain.value}:{int(label)}:{index:05d}",
                                         label=label, domain=domain))

    manifest = DatasetManifest(entries=entries)
    tensor = torch.from_numpy(np.stack(images)[:, None, :, :])
    labels = torch.tensor(manifest.labels, dtype=torch.long)
    return ImageSet(manifest=manifest, images=tensor, labels=labels)


def generate_toy_benchmark(spec: ToySpec) -> Tuple[ImageSet, ImageSet]:
    """Deterministic (source, target) pair for a ToySpec"""
    spec.validate()
    source = _build_domain(spec, Domain.SOURCE, spec.per_class_count_source)
    target = _build_domain(spec, Domain.TARGET, spec.per_class_count_target)
    logger.info(f"Generated ToyEmotions: {len(source)} source / {len(target)} target images "
                f"at {spec.image_size}px (seed {spec.seed})")
    return source, target

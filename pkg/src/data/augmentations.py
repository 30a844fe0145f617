"""
Two-view augmentation pipeline (t, t') following the BYOL recipe

Every random decision is drawn from an explicit numpy Generator and applied
through torchvision's functional transforms, so a pair is a pure function of
(image, generator state, config).
"""

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import torch
import torchvision.transforms.functional as TF

from ..utils.exceptions import ConfigError

CROP_RATIO_RANGE = (3.0 / 4.0, 4.0 / 3.0)
CROP_ATTEMPTS = 10
BLUR_SIGMA_RANGE = (0.1, 2.0)
SOLARIZE_THRESHOLD = 0.5


@dataclass
class ColorJitterConfig:
    brightness: float = 0.4
    contrast: float = 0.4
    saturation: float = 0.2
    hue: float = 0.1
    prob: float = 0.8


@dataclass
class AugmentConfig:
    crop_scale_range: Tuple[float, float] = (0.08, 1.0)
    flip_prob: float = 0.5
    color_jitter: ColorJitterConfig = field(default_factory=ColorJitterConfig)
    grayscale_prob: float = 0.2
    blur_prob_view1: float = 1.0
    blur_prob_view2: float = 0.1
    solarize_prob_view2: float = 0.2

    def validate(self):
        probs = {
            'flip_prob': self.flip_prob,
            'color_jitter.prob': self.color_jitter.prob,
            'grayscale_prob': self.grayscale_prob,
            'blur_prob_view1': self.blur_prob_view1,
            'blur_prob_view2': self.blur_prob_view2,
            'solarize_prob_view2': self.solarize_prob_view2,
        }
        for name, value in probs.items():
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"Invalid probability {name}: {value}")

        low, high = self.crop_scale_range
        if not (0.0 < low <= high <= 1.0):
            raise ConfigError(f"Invalid crop_scale_range: {self.crop_scale_range}")

        cj = self.color_jitter
        if min(cj.brightness, cj.contrast, cj.saturation) < 0 or not 0 <= cj.hue <= 0.5:
            raise ConfigError(f"Invalid color jitter strengths: {cj}")

    @classmethod
    def identity(cls) -> 'AugmentConfig':
        """Configuration under which both views equal the input"""
        return cls(crop_scale_range=(1.0, 1.0), flip_prob=0.0,
                   color_jitter=ColorJitterConfig(prob=0.0), grayscale_prob=0.0,
                   blur_prob_view1=0.0, blur_prob_view2=0.0, solarize_prob_view2=0.0)


def _crop_box(height: int, width: int, scale: Tuple[float, float],
              rng: np.random.Generator) -> Tuple[int, int, int, int]:
    """RandomResizedCrop box (top, left, h, w); falls back to the full image"""
    if scale[0] >= 1.0:
        return 0, 0, height, width

    area = height * width
    log_ratio = (math.log(CROP_RATIO_RANGE[0]), math.log(CROP_RATIO_RANGE[1]))

    for _ in range(CROP_ATTEMPTS):
        target_area = area * rng.uniform(scale[0], scale[1])
        aspect = math.exp(rng.uniform(*log_ratio))
        w = int(round(math.sqrt(target_area * aspect)))
        h = int(round(math.sqrt(target_area / aspect)))
        if 0 < w <= width and 0 < h <= height:
            top = int(rng.integers(0, height - h + 1))
            left = int(rng.integers(0, width - w + 1))
            return top, left, h, w

    return 0, 0, height, width


def _blur_kernel_size(image_size: int) -> int:
    """Odd kernel of roughly a tenth of the image side"""
    k = max(3, int(round(image_size / 10)))
    return k if k % 2 == 1 else k + 1


def _color_jitter(image: torch.Tensor, cfg: ColorJitterConfig, rng: np.random.Generator) -> torch.Tensor:
    order = rng.permutation(4)
    for op in order:
        if op == 0 and cfg.brightness > 0:
            factor = rng.uniform(max(0.0, 1 - cfg.brightness), 1 + cfg.brightness)
            image = TF.adjust_brightness(image, factor)
        elif op == 1 and cfg.contrast > 0:
            factor = rng.uniform(max(0.0, 1 - cfg.contrast), 1 + cfg.contrast)
            image = TF.adjust_contrast(image, factor)
        elif op == 2 and cfg.saturation > 0:
            factor = rng.uniform(max(0.0, 1 - cfg.saturation), 1 + cfg.saturation)
            image = TF.adjust_saturation(image, factor)
        elif op == 3 and cfg.hue > 0:
            image = TF.adjust_hue(image, rng.uniform(-cfg.hue, cfg.hue))
    return image


def augment_view(image: torch.Tensor, cfg: AugmentConfig, rng: np.random.Generator,
                 blur_prob: float, solarize_prob: float) -> torch.Tensor:
    """One branch of the pipeline on a C x H x W image"""
    channels, height, width = image.shape
    view = image

    top, left, h, w = _crop_box(height, width, cfg.crop_scale_range, rng)
    if (h, w) != (height, width):
        view = TF.resized_crop(view, top, left, h, w, [height, width],
                               interpolation=TF.InterpolationMode.BILINEAR, antialias=True)

    if rng.uniform() < cfg.flip_prob:
        view = TF.hflip(view)

    if rng.uniform() < cfg.color_jitter.prob:
        view = _color_jitter(view, cfg.color_jitter, rng)

    if rng.uniform() < cfg.grayscale_prob and channels == 3:
        view = TF.rgb_to_grayscale(view, num_output_channels=3)

    if rng.uniform() < blur_prob:
        k = _blur_kernel_size(height)
        sigma = float(rng.uniform(*BLUR_SIGMA_RANGE))
        view = TF.gaussian_blur(view, kernel_size=[k, k], sigma=[sigma, sigma])

    if rng.uniform() < solarize_prob:
        view = TF.solarize(view, SOLARIZE_THRESHOLD)

    return view.clamp(0.0, 1.0)


def augment_pair(image: torch.Tensor, rng: np.random.Generator,
                 cfg: AugmentConfig) -> Tuple[torch.Tensor, torch.Tensor]:
    """Views (t(x), t'(x)); view 1 uses the t-branch, view 2 the t'-branch"""
    if image.ndim != 3:
        raise ValueError(f"Expected a C x H x W image, got shape {tuple(image.shape)}")
    if image.numel() and (image.min() < 0 or image.max() > 1):
        raise ValueError("Image values must lie in [0, 1]")

    view1 = augment_view(image, cfg, rng, cfg.blur_prob_view1, 0.0)
    view2 = augment_view(image, cfg, rng, cfg.blur_prob_view2, cfg.solarize_prob_view2)
    return view1, view2


def augment_batch(images: torch.Tensor, rng: np.random.Generator,
                  cfg: AugmentConfig) -> Tuple[torch.Tensor, torch.Tensor]:
    """Pairs for every image of an N x C x H x W batch, consumed in batch order"""
    pairs = [augment_pair(image, rng, cfg) for image in images]
    return torch.stack([p[0] for p in pairs]), torch.stack([p[1] for p in pairs])

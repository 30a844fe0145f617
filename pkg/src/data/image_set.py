import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import torch
from torchvision.io import read_image, write_png, ImageReadMode

from .manifest import DatasetManifest, ManifestEntry, save_manifest
from ..utils.exceptions import MissingArtifactError

logger = logging.getLogger(__name__)


@dataclass
class ImageSet:
    """Manifest plus its decoded images (N x C x H x W, float32 in [0,1])"""
    manifest: DatasetManifest
    images: torch.Tensor
    labels: torch.Tensor

    def __post_init__(self):
        if self.images.ndim != 4:
            raise ValueError(f"Images must be rank 4, got shape {tuple(self.images.shape)}")
        if len(self.images) != len(self.manifest) or len(self.labels) != len(self.manifest):
            raise ValueError("Images, labels and manifest entries must align")

    def __len__(self) -> int:
        return len(self.manifest)

    @property
    def image_size(self) -> int:
        return int(self.images.shape[-1])

    @property
    def refs(self):
        return [e.image for e in self.manifest.entries]


def load_image_set(manifest: DatasetManifest, expected_size: Optional[int] = None) -> ImageSet:
    """Decode every image referenced by a manifest"""
    tensors = []
    for entry in manifest.entries:
        path = manifest.resolve(entry)
        if not path.is_file():
            raise MissingArtifactError(f"Image not found: {path}")
        image = read_image(str(path), mode=ImageReadMode.GRAY)
        if expected_size is not None and tuple(image.shape[-2:]) != (expected_size, expected_size):
            raise ValueError(f"Image {path} has size {tuple(image.shape[-2:])}, expected {expected_size}")
        tensors.append(image)

    images = torch.stack(tensors).to(torch.float32) / 255.0
    labels = torch.tensor(manifest.labels, dtype=torch.long)
    return ImageSet(manifest=manifest, images=images, labels=labels)


def to_uint8(image: torch.Tensor) -> torch.Tensor:
    return (image * 255.0).round().clamp(0, 255).to(torch.uint8)


def image_path_for(entry: ManifestEntry, index: int) -> str:
    """Relative path `<domain>/<label>/<index>.png`"""
    return f"{entry.domain.value}/{int(entry.label)}/{index:05d}.png"


def write_image_set(image_set: ImageSet, data_root: Union[str, Path], manifest_name: str) -> DatasetManifest:
    """Persist images as 8-bit grayscale PNG and write the manifest next to them"""
    root = Path(data_root)
    per_class_index = {}
    entries = []

    for entry, image in zip(image_set.manifest.entries, image_set.images):
        index = per_class_index.get(entry.label, 0)
        per_class_index[entry.label] = index + 1

        relative = image_path_for(entry, index)
        target = root / relative
        target.parent.mkdir(parents=True, exist_ok=True)
        write_png(to_uint8(image), str(target))
        entries.append(ManifestEntry(image=relative, label=entry.label, domain=entry.domain))

    manifest = DatasetManifest(entries=entries, root=root)
    save_manifest(manifest, root / manifest_name)
    logger.info(f"Wrote {len(entries)} images and {manifest_name} under {root}")
    return manifest

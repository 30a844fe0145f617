"""
Dataset manifests

A manifest is a JSON-lines file, one object per line:
    {"image": "<relative path or inline id>", "label": <0-5>, "domain": "source"|"target"}
Relative image paths are resolved against the manifest's directory.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from .labels import EmotionLabel, Domain, NUM_CLASSES
from ..utils.exceptions import ManifestError, MissingArtifactError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ManifestEntry:
    image: str
    label: EmotionLabel
    domain: Domain

    def to_json(self) -> str:
        return json.dumps({'image': self.image, 'label': int(self.label), 'domain': self.domain.value})


@dataclass
class DatasetManifest:
    entries: List[ManifestEntry]
    counts: List[int] = field(default=None)
    root: Optional[Path] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.entries:
            raise ManifestError("Manifest has no entries")
        recomputed = class_distribution(self)
        if self.counts is None:
            self.counts = recomputed
        elif list(self.counts) != recomputed:
            raise ManifestError(f"Manifest counts {list(self.counts)} disagree with entries {recomputed}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def labels(self) -> List[int]:
        return [int(e.label) for e in self.entries]

    @property
    def domains(self) -> set:
        return {e.domain for e in self.entries}

    def resolve(self, entry: ManifestEntry) -> Path:
        """Filesystem path of an entry's image"""
        path = Path(entry.image)
        if path.is_absolute() or self.root is None:
            return path
        return self.root / path


def class_distribution(manifest: DatasetManifest) -> List[int]:
    """Per-class entry counts, index k = label k"""
    labels = np.fromiter((int(e.label) for e in manifest.entries), dtype=np.int64,
                         count=len(manifest.entries))
    return np.bincount(labels, minlength=NUM_CLASSES).tolist()


def parse_entry(record: dict, line_number: int) -> ManifestEntry:
    """Validate one decoded manifest record"""
    if not isinstance(record, dict):
        raise ManifestError(f"malformed line {line_number}: expected an object", line_number)

    missing = {'image', 'label', 'domain'} - set(record)
    if missing:
        raise ManifestError(f"malformed line {line_number}: missing keys {sorted(missing)}", line_number)

    if not isinstance(record['image'], str) or not record['image']:
        raise ManifestError(f"malformed line {line_number}: image must be a non-empty string", line_number)

    try:
        label = EmotionLabel.parse(record['label'])
    except ValueError:
        raise ManifestError(f"invalid label at line {line_number}: {record['label']!r}", line_number) from None

    try:
        domain = Domain.parse(record['domain'])
    except ValueError:
        raise ManifestError(f"unknown domain at line {line_number}: {record['domain']!r}", line_number) from None

    return ManifestEntry(image=record['image'], label=label, domain=domain)


def load_manifest(path: Union[str, Path]) -> DatasetManifest:
    """Load and validate a JSON-lines manifest"""
    manifest_path = Path(path)
    if not manifest_path.is_file():
        raise MissingArtifactError(f"Manifest not found: {manifest_path}")

    entries = []
    with open(manifest_path, 'r', encoding='utf-8') as f:
        for line_number, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ManifestError(f"malformed line {line_number}: {e.msg}", line_number) from None
            entries.append(parse_entry(record, line_number))

    manifest = DatasetManifest(entries=entries, root=manifest_path.parent)
    logger.info(f"Loaded manifest {manifest_path} with {len(manifest)} entries")
    return manifest


def save_manifest(manifest: DatasetManifest, path: Union[str, Path]):
    """Write a manifest as JSON lines"""
    manifest_path = Path(path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    with open(manifest_path, 'w', encoding='utf-8') as f:
        for entry in manifest.entries:
            f.write(entry.to_json() + '\n')

"""Samples, dataset manifests and their on-disk format (manifest.json plus one PNG per sample)."""

import json
import logging
import os
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path

import numpy as np

from utils.errors import ValidationError
from utils.image_io import load_png, save_png

MANIFEST_FILE = "manifest.json"
IMAGE_DIR = "images"


class Origin(StrEnum):
    SYNTHETIC = "synthetic"
    REAL = "real"


@dataclass(eq=False)
class Sample:
    """One image x_i with its identity label y_i and domain label."""

    image: np.ndarray
    identity_id: int
    domain_id: int
    origin: Origin

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return (
            self.identity_id == other.identity_id
            and self.domain_id == other.domain_id
            and self.origin == other.origin
            and self.image.shape == other.image.shape
            and np.array_equal(self.image, other.image)
        )


@dataclass(eq=False)
class DatasetManifest:
    """A named collection of equally sized samples."""

    name: str
    height: int
    width: int
    samples: list[Sample] = field(default_factory=list)

    def __post_init__(self):
        for index, sample in enumerate(self.samples):
            if sample.image.shape != (self.height, self.width, 3):
                raise ValidationError(
                    f"{self.name}: sample {index} has shape {sample.image.shape}, "
                    f"expected {(self.height, self.width, 3)}"
                )
            if sample.image.min() < 0.0 or sample.image.max() > 1.0:
                raise ValidationError(f"{self.name}: sample {index} has pixels outside [0, 1]")

    def __len__(self) -> int:
        return len(self.samples)

    def __eq__(self, other):
        if not isinstance(other, DatasetManifest):
            return NotImplemented
        return (
            self.name == other.name
            and self.height == other.height
            and self.width == other.width
            and self.samples == other.samples
        )

    @property
    def domain_ids(self) -> set[int]:
        return {s.domain_id for s in self.samples}

    @property
    def identity_ids(self) -> set[int]:
        return {s.identity_id for s in self.samples}

    @property
    def origins(self) -> set[Origin]:
        return {s.origin for s in self.samples}

    def images(self) -> list[np.ndarray]:
        return [s.image for s in self.samples]

    def identity_labels(self) -> list[int]:
        return [s.identity_id for s in self.samples]

    def domain_labels(self) -> list[int]:
        return [s.domain_id for s in self.samples]

    def single_domain_id(self) -> int:
        """The domain id of a single-domain manifest."""
        if len(self.domain_ids) != 1:
            raise ValidationError(f"{self.name} spans domains {sorted(self.domain_ids)}, expected exactly one")
        return next(iter(self.domain_ids))


def write_manifest(manifest: DatasetManifest, directory) -> Path:
    """Writes images and manifest.json; the manifest file is replaced atomically."""
    directory = Path(directory)
    (directory / IMAGE_DIR).mkdir(parents=True, exist_ok=True)

    records = []
    for index, sample in enumerate(manifest.samples):
        relative = f"{IMAGE_DIR}/{index:06d}.png"
        save_png(directory / relative, sample.image)
        records.append(
            {
                "path": relative,
                "identity_id": int(sample.identity_id),
                "domain_id": int(sample.domain_id),
                "origin": str(sample.origin),
            }
        )

    document = {"name": manifest.name, "height": manifest.height, "width": manifest.width, "samples": records}
    target = directory / MANIFEST_FILE
    tmp = directory / (MANIFEST_FILE + ".tmp")
    tmp.write_text(json.dumps(document, indent=2))
    os.replace(tmp, target)

    logging.info(f"{manifest.name} Wrote {len(records)} samples to {directory}")
    return target


def read_manifest(directory) -> DatasetManifest:
    """Reads a dataset directory written by write_manifest; image paths resolve relative to it."""
    directory = Path(directory)
    path = directory / MANIFEST_FILE
    try:
        document = json.loads(path.read_text())
    except FileNotFoundError as e:
        raise ValidationError(f"No {MANIFEST_FILE} in {directory}") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}:{e.lineno}: {e.msg}") from e

    try:
        samples = [
            Sample(
                image=load_png(directory / record["path"]),
                identity_id=int(record["identity_id"]),
                domain_id=int(record["domain_id"]),
                origin=Origin(record["origin"]),
            )
            for record in document["samples"]
        ]
        return DatasetManifest(document["name"], int(document["height"]), int(document["width"]), samples)
    except (KeyError, ValueError) as e:
        raise ValidationError(f"Malformed manifest {path}: {e}") from e


def load_manifests(path) -> list[DatasetManifest]:
    """Reads one dataset directory, or every dataset directory directly below path (sorted by name)."""
    path = Path(path)
    if (path / MANIFEST_FILE).exists():
        return [read_manifest(path)]

    children = sorted(p for p in path.iterdir() if (p / MANIFEST_FILE).exists()) if path.is_dir() else []
    if not children:
        raise ValidationError(f"No dataset found at {path}")
    return [read_manifest(child) for child in children]


def merge_manifests(name: str, manifests: list[DatasetManifest]) -> DatasetManifest:
    """Concatenates manifests of equal image size."""
    if not manifests:
        raise ValidationError("Nothing to merge")
    sizes = {(m.height, m.width) for m in manifests}
    if len(sizes) != 1:
        raise ValidationError(f"Cannot merge datasets with different image sizes {sorted(sizes)}")
    height, width = sizes.pop()
    return DatasetManifest(name, height, width, [s for m in manifests for s in m.samples])

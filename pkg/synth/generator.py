"""Dataset generation: synthetic illumination domains and held-out "real" target cameras."""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from synth.manifest import DatasetManifest, Origin, Sample
from synth.render import BACKGROUND, compose, person_layout
from synth.specs import IdentitySpec, IlluminationSpec
from utils.errors import ValidationError
from utils.image_io import quantize

CATALOG_FILE = "catalog.json"


@dataclass(frozen=True)
class RealnessGap:
    """Fixed, seeded degradation separating "real" cameras from clean renders."""

    noise_sigma: float = 0.02
    texture: bool = True
    texture_amplitude: float = 0.15
    texture_cell: int = 8
    blur: bool = True

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValidationError(f"noise_sigma={self.noise_sigma} must be >= 0")
        if self.texture_cell < 1:
            raise ValidationError(f"texture_cell={self.texture_cell} must be >= 1")

    @classmethod
    def none(cls) -> "RealnessGap":
        return cls(noise_sigma=0.0, texture=False, blur=False)


def _value_noise(height: int, width: int, cell: int, rng: np.random.Generator) -> np.ndarray:
    """Smooth H×W×3 noise in [0,1]: a coarse random grid upsampled bilinearly."""
    grid = rng.random((1, 3, height // cell + 2, width // cell + 2))
    smooth = F.interpolate(torch.from_numpy(grid), size=(height, width), mode="bilinear", align_corners=True)
    return smooth[0].permute(1, 2, 0).numpy()


def _box_blur(image: np.ndarray) -> np.ndarray:
    """3×3 box filter with edge replication."""
    padded = np.pad(image, ((1, 1), (1, 1), (0, 0)), mode="edge")
    height, width = image.shape[:2]
    total = np.zeros_like(image)
    for du in range(3):
        for dv in range(3):
            total += padded[du : du + height, dv : dv + width]
    return total / 9.0


def apply_gap(
    clean: np.ndarray, labels: np.ndarray, illum: IlluminationSpec, gap: RealnessGap, rng: np.random.Generator
) -> np.ndarray:
    """Textured background, then one box blur, then additive Gaussian sensor noise."""
    image = clean.copy()
    height, width = labels.shape

    if gap.texture:
        noise = _value_noise(height, width, gap.texture_cell, rng)
        background = illum.apply(np.asarray(illum.background_color) + gap.texture_amplitude * (noise - 0.5))
        mask = labels == BACKGROUND
        image[mask] = background[mask]

    if gap.blur:
        image = _box_blur(image)

    if gap.noise_sigma > 0:
        image = image + rng.normal(0.0, gap.noise_sigma, size=image.shape)

    return np.clip(image, 0.0, 1.0)


def _render_domain(identities, illum, samples_per_identity, rng_seed, height, width):
    """Yields (identity, layout, clean image) in a fixed order; poses come from the seeded generator."""
    rng = np.random.default_rng([rng_seed, illum.illum_id])
    for identity in identities:
        for _ in range(samples_per_identity):
            pose = float(rng.uniform(0.0, 2.0 * math.pi))
            sample_seed = int(rng.integers(0, 2**31 - 1))
            labels = person_layout(identity, pose, sample_seed, height, width)
            yield identity, labels, illum.apply(compose(identity, illum, labels))


def _check_request(identities: list[IdentitySpec], samples_per_identity: int):
    if not identities:
        raise ValidationError("identities must not be empty")
    if samples_per_identity < 1:
        raise ValidationError(f"samples_per_identity={samples_per_identity} must be >= 1")
    ids = [i.identity_id for i in identities]
    if len(set(ids)) != len(ids):
        raise ValidationError("identity_id values must be unique")


def generate_domain(
    identities: list[IdentitySpec],
    illum: IlluminationSpec,
    samples_per_identity: int,
    rng_seed: int,
    height: int = 64,
    width: int = 32,
    name: str | None = None,
) -> DatasetManifest:
    """Renders one synthetic domain S_k: every identity under one illumination."""
    _check_request(identities, samples_per_identity)

    samples = [
        Sample(quantize(image), identity.identity_id, illum.illum_id, Origin.SYNTHETIC)
        for identity, _, image in _render_domain(identities, illum, samples_per_identity, rng_seed, height, width)
    ]

    logging.debug(f"domain {illum.illum_id} Rendered {len(samples)} synthetic samples")
    return DatasetManifest(name or f"synthetic-{illum.illum_id:03d}", height, width, samples)


def generate_target_domain(
    identities: list[IdentitySpec],
    illum: IlluminationSpec,
    samples_per_identity: int,
    gap: RealnessGap,
    rng_seed: int,
    catalog: list[IlluminationSpec] | None = None,
    height: int = 64,
    width: int = 32,
    name: str | None = None,
) -> DatasetManifest:
    """Renders a "real" camera under a held-out illumination and applies the realness gap."""
    _check_request(identities, samples_per_identity)

    for entry in catalog or []:
        if entry.illum_id == illum.illum_id or entry.same_parameters(illum):
            raise ValidationError(
                f"Target illumination {illum.illum_id} collides with catalog entry {entry.illum_id}; "
                "target illuminations must be held out"
            )

    gap_rng = np.random.default_rng([rng_seed, illum.illum_id, 1])
    samples = []
    for identity, labels, clean in _render_domain(identities, illum, samples_per_identity, rng_seed, height, width):
        image = apply_gap(clean, labels, illum, gap, gap_rng)
        samples.append(Sample(quantize(image), identity.identity_id, illum.illum_id, Origin.REAL))

    logging.debug(f"domain {illum.illum_id} Rendered {len(samples)} target samples")
    return DatasetManifest(name or f"real-{illum.illum_id:03d}", height, width, samples)


def write_catalog(path, identities: list[IdentitySpec], illuminations: list[IlluminationSpec]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {
        "identities": [i.to_dict() for i in identities],
        "illuminations": [i.to_dict() for i in illuminations],
    }
    path.write_text(json.dumps(document, indent=2))
    return path


def read_catalog(path) -> tuple[list[IdentitySpec], list[IlluminationSpec]]:
    path = Path(path)
    if path.is_dir():
        path = path / CATALOG_FILE
    try:
        document = json.loads(path.read_text())
    except FileNotFoundError as e:
        raise ValidationError(f"No illumination catalog at {path}") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}:{e.lineno}: {e.msg}") from e

    identities = [IdentitySpec.from_dict(d) for d in document.get("identities", [])]
    illuminations = [IlluminationSpec.from_dict(d) for d in document.get("illuminations", [])]
    return identities, illuminations

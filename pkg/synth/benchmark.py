"""The toy benchmark: synthetic domains S, labeled real cameras R and unlabeled target cameras."""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from synth.generator import CATALOG_FILE, RealnessGap, generate_domain, generate_target_domain, read_catalog, write_catalog
from synth.manifest import DatasetManifest, load_manifests, write_manifest
from synth.specs import IdentitySpec, IlluminationSpec, sample_identities, sample_illuminations
from utils.config import DataConfig, GapConfig
from utils.errors import ValidationError

SYNTHETIC_DIR = "synthetic"
REAL_DIR = "real"
TARGET_DIR = "target"

# id ranges keep identities and domains of the three collections disjoint
REAL_FIRST_IDENTITY = 1000
TARGET_FIRST_IDENTITY = 2000
REAL_FIRST_ILLUMINATION = 100
TARGET_FIRST_ILLUMINATION = 200


@dataclass
class Benchmark:
    synthetic: list[DatasetManifest]
    real: list[DatasetManifest]
    target: list[DatasetManifest]
    identities: list[IdentitySpec] = field(default_factory=list)
    illuminations: list[IlluminationSpec] = field(default_factory=list)


def derive_seed(seed: int, purpose: str) -> int:
    """Independent seed per purpose so that collections never share a random stream."""
    entropy = [seed] + [ord(c) for c in purpose]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def realness_gap(gap: GapConfig) -> RealnessGap:
    return RealnessGap(noise_sigma=gap.noise_sigma, texture=gap.texture, blur=gap.blur)


def build_synthetic(data: DataConfig, seed: int):
    """The synthetic collection S: every identity rendered under every catalog illumination."""
    identities = sample_identities(data.identities, derive_seed(seed, "identities"))
    catalog = sample_illuminations(data.illuminations, derive_seed(seed, "illuminations"))
    synthetic = [
        generate_domain(
            identities, illum, data.samples_per_identity, derive_seed(seed, "synthetic"), data.height, data.width
        )
        for illum in catalog
    ]
    return identities, catalog, synthetic


def build_benchmark(data: DataConfig, seed: int) -> Benchmark:
    """
    Renders the synthetic catalog (identities × illuminations), data.real_cameras labeled real
    cameras with their own identities, and data.target_cameras target cameras that share one
    identity set so that any two of them form a probe/gallery pair.
    """
    gap = realness_gap(data.gap)
    identities, catalog, synthetic = build_synthetic(data, seed)

    real = []
    if data.real_cameras > 0 and data.real_identities > 0:
        real_identities = sample_identities(
            data.real_identities, derive_seed(seed, "real-identities"), first_id=REAL_FIRST_IDENTITY
        )
        real_illuminations = sample_illuminations(
            data.real_cameras, derive_seed(seed, "real-illuminations"), first_id=REAL_FIRST_ILLUMINATION
        )
        real = [
            generate_target_domain(
                real_identities,
                illum,
                data.real_samples_per_identity,
                gap,
                derive_seed(seed, "real"),
                catalog,
                data.height,
                data.width,
            )
            for illum in real_illuminations
        ]

    target_identities = sample_identities(
        data.target_identities, derive_seed(seed, "target-identities"), first_id=TARGET_FIRST_IDENTITY
    )
    target_illuminations = sample_illuminations(
        data.target_cameras, derive_seed(seed, "target-illuminations"), first_id=TARGET_FIRST_ILLUMINATION
    )
    target = [
        generate_target_domain(
            target_identities,
            illum,
            data.target_samples_per_identity,
            gap,
            derive_seed(seed, "target"),
            catalog,
            data.height,
            data.width,
            name=f"target-cam{camera}",
        )
        for camera, illum in enumerate(target_illuminations)
    ]

    logging.info(
        f"gen-data {len(synthetic)} synthetic domains, {len(real)} real cameras and {len(target)} target cameras "
        f"({sum(map(len, synthetic + real + target))} images)"
    )
    return Benchmark(synthetic, real, target, identities, catalog)


def write_benchmark(benchmark: Benchmark, directory) -> Path:
    directory = Path(directory)
    for subdir, manifests in ((SYNTHETIC_DIR, benchmark.synthetic), (REAL_DIR, benchmark.real), (TARGET_DIR, benchmark.target)):
        for manifest in manifests:
            write_manifest(manifest, directory / subdir / manifest.name)
    write_catalog(directory / CATALOG_FILE, benchmark.identities, benchmark.illuminations)
    return directory


def read_benchmark(directory) -> Benchmark:
    directory = Path(directory)
    if not (directory / SYNTHETIC_DIR).is_dir() or not (directory / TARGET_DIR).is_dir():
        raise ValidationError(f"{directory} is not a benchmark directory")

    real = load_manifests(directory / REAL_DIR) if (directory / REAL_DIR).is_dir() else []
    identities, illuminations = read_catalog(directory / CATALOG_FILE)
    return Benchmark(
        load_manifests(directory / SYNTHETIC_DIR), real, load_manifests(directory / TARGET_DIR), identities, illuminations
    )

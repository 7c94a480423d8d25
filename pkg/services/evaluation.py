"""Single-shot probe/gallery evaluation (CMC) and the image-statistics gap between datasets."""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from services.losses import SoftMatte
from synth.manifest import DatasetManifest
from utils.config import Metric
from utils.errors import ValidationError

HISTOGRAM_BINS = 64
# forward-difference magnitude of [0,1] intensities never exceeds √2
GRADIENT_RANGE = (0.0, math.sqrt(2.0))
FOREGROUND_THRESHOLD = 0.5
# largest tolerated per-channel foreground shift of a regularized translation, in [0,1] units
COLOR_SHIFT_BOUND = 0.25


@dataclass(frozen=True)
class ProbeGallerySplit:
    """Feature vectors with identity labels; one gallery entry per identity."""

    probe_features: np.ndarray
    probe_ids: tuple[int, ...]
    gallery_features: np.ndarray
    gallery_ids: tuple[int, ...]
    seed: int = 0

    def __post_init__(self):
        if len(self.probe_features) != len(self.probe_ids) or len(self.gallery_features) != len(self.gallery_ids):
            raise ValidationError("Every feature vector needs exactly one identity label")
        if len(set(self.gallery_ids)) != len(self.gallery_ids):
            raise ValidationError("Gallery identities must be unique in the single-shot setting")
        missing = sorted(set(self.probe_ids) - set(self.gallery_ids))
        if missing:
            raise ValidationError(f"Probe identities {missing} have no gallery entry")


@dataclass(frozen=True)
class CMCCurve:
    accuracies: np.ndarray
    n_probes: int

    @property
    def rank1(self) -> float:
        return float(self.accuracies[0])

    def rank(self, k: int) -> float:
        """Accuracy at rank k (1-based), saturating past the gallery size."""
        return float(self.accuracies[min(k, len(self.accuracies)) - 1])

    def to_dict(self) -> dict:
        return {"rank1": self.rank1, "n_probes": self.n_probes, "cmc": [float(a) for a in self.accuracies]}


@dataclass(frozen=True)
class ImageStats:
    intensity_histogram: np.ndarray
    gradient_magnitude_histogram: np.ndarray

    def to_dict(self) -> dict:
        return {
            "intensity_histogram": self.intensity_histogram.tolist(),
            "gradient_magnitude_histogram": self.gradient_magnitude_histogram.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ImageStats":
        return cls(np.asarray(data["intensity_histogram"]), np.asarray(data["gradient_magnitude_histogram"]))


def raw_pixels(images: list[np.ndarray]) -> np.ndarray:
    """Flattened images, the featureless baseline."""
    return np.stack([np.asarray(img, dtype=np.float64).ravel() for img in images])


def make_split(
    probe_manifest: DatasetManifest,
    gallery_manifest: DatasetManifest,
    seed: int,
    embed: Callable[[list[np.ndarray]], np.ndarray] = raw_pixels,
) -> ProbeGallerySplit:
    """
    Picks one probe image per identity from probe_manifest and one gallery image per identity from
    gallery_manifest, with a generator seeded by seed, then embeds both sides.
    """
    probe_ids, gallery_ids = probe_manifest.identity_ids, gallery_manifest.identity_ids
    only_probe, only_gallery = sorted(probe_ids - gallery_ids), sorted(gallery_ids - probe_ids)
    if only_probe or only_gallery:
        raise ValidationError(
            f"Probe and gallery identity sets differ: only in {probe_manifest.name}: {only_probe}, "
            f"only in {gallery_manifest.name}: {only_gallery}"
        )
    if not probe_ids:
        raise ValidationError("Cannot split empty datasets")

    rng = np.random.default_rng(seed)
    identities = sorted(probe_ids)

    def pick(manifest: DatasetManifest) -> list[np.ndarray]:
        by_identity: dict[int, list[np.ndarray]] = {}
        for sample in manifest.samples:
            by_identity.setdefault(sample.identity_id, []).append(sample.image)
        return [by_identity[i][rng.integers(len(by_identity[i]))] for i in identities]

    probe_images, gallery_images = pick(probe_manifest), pick(gallery_manifest)
    split = ProbeGallerySplit(
        np.asarray(embed(probe_images), dtype=np.float64),
        tuple(identities),
        np.asarray(embed(gallery_images), dtype=np.float64),
        tuple(identities),
        seed,
    )
    logging.debug(f"evaluate Split {len(identities)} probes against {len(identities)} gallery entries (seed {seed})")
    return split


def similarity_matrix(probe: np.ndarray, gallery: np.ndarray, metric: Metric) -> np.ndarray:
    """Higher is more similar: cosine similarity or negated Euclidean distance."""
    if metric == Metric.COSINE:
        p = probe / np.maximum(np.linalg.norm(probe, axis=1, keepdims=True), 1e-12)
        g = gallery / np.maximum(np.linalg.norm(gallery, axis=1, keepdims=True), 1e-12)
        return p @ g.T
    squared = (probe**2).sum(1)[:, None] + (gallery**2).sum(1)[None, :] - 2 * probe @ gallery.T
    return -np.sqrt(np.maximum(squared, 0.0))


def cmc(split: ProbeGallerySplit, metric: Metric = Metric.COSINE) -> CMCCurve:
    """
    Cumulative matching characteristic. A probe's match rank counts the gallery entries scoring
    strictly higher than the true match, plus equally scoring entries at a smaller gallery index.
    """
    probe, gallery = np.atleast_2d(split.probe_features), np.atleast_2d(split.gallery_features)
    if len(probe) == 0 or len(gallery) == 0:
        raise ValidationError("CMC needs at least one probe and one gallery entry")
    if probe.shape[1] != gallery.shape[1]:
        raise ValidationError(f"Feature dimensions differ: probe {probe.shape[1]}, gallery {gallery.shape[1]}")

    scores = similarity_matrix(probe, gallery, Metric(metric))
    match_index = np.array([split.gallery_ids.index(i) for i in split.probe_ids])
    true_scores = scores[np.arange(len(probe)), match_index]

    gallery_index = np.arange(len(gallery))[None, :]
    higher = scores > true_scores[:, None]
    tied_before = (scores == true_scores[:, None]) & (gallery_index < match_index[:, None])
    ranks = (higher | tied_before).sum(axis=1)

    accuracies = np.array([(ranks <= r).mean() for r in range(len(gallery))])
    return CMCCurve(accuracies, len(probe))


def _normalized_histogram(values: np.ndarray, bins: int, value_range: tuple[float, float]) -> np.ndarray:
    counts, _ = np.histogram(values, bins=bins, range=value_range)
    return counts / counts.sum()


def gradient_magnitudes(image: np.ndarray) -> np.ndarray:
    """Forward-difference gradient magnitude of the channel-mean intensity, on the (H-1)×(W-1) interior."""
    gray = np.asarray(image, dtype=np.float64).mean(axis=2)
    dx = gray[:-1, 1:] - gray[:-1, :-1]
    dy = gray[1:, :-1] - gray[:-1, :-1]
    return np.sqrt(dx**2 + dy**2)


def image_stats(manifest: DatasetManifest, bins: int = HISTOGRAM_BINS) -> ImageStats:
    """Per-channel intensity histograms and a gradient-magnitude histogram over every pixel of every image."""
    if len(manifest) == 0:
        raise ValidationError(f"{manifest.name} has no images")

    images = np.stack(manifest.images())
    intensity = np.stack([_normalized_histogram(images[..., c], bins, (0.0, 1.0)) for c in range(3)])
    gradients = np.concatenate([gradient_magnitudes(img).ravel() for img in images])
    return ImageStats(intensity, _normalized_histogram(gradients, bins, GRADIENT_RANGE))


def chi_squared(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric chi-squared 0.5·Σ (a−b)²/(a+b) over the bins where either histogram is non-empty."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"Histogram shapes differ: {a.shape} vs {b.shape}")
    total = a + b
    occupied = total > 0
    return float(0.5 * np.sum((a[occupied] - b[occupied]) ** 2 / total[occupied]))


def stats_distance(a: ImageStats, b: ImageStats) -> float:
    """Sum of the chi-squared distances of the three intensity histograms and the gradient histogram."""
    return chi_squared(a.intensity_histogram, b.intensity_histogram) + chi_squared(
        a.gradient_magnitude_histogram, b.gradient_magnitude_histogram
    )


def foreground_color_shift(before: DatasetManifest, after: DatasetManifest, matte: SoftMatte) -> np.ndarray:
    """
    Per-channel |E[fg(after)] − E[fg(before)]|: the dataset-mean colour inside the matte core (m > 0.5)
    before and after translation. Compare the largest channel against COLOR_SHIFT_BOUND.
    """
    if len(before) != len(after) or len(before) == 0:
        raise ValidationError("Colour shift needs two non-empty datasets of paired samples")
    if matte.shape != (before.height, before.width) or matte.shape != (after.height, after.width):
        raise ValidationError(f"Matte shape {matte.shape} does not match the image size")

    core = matte.m > FOREGROUND_THRESHOLD
    first = np.stack(before.images())[:, core].mean(axis=(0, 1))
    second = np.stack(after.images())[:, core].mean(axis=(0, 1))
    return np.abs(second - first)

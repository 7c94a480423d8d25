"""Illumination classifier training and closest-domain selection by vote counting."""

import logging
from dataclasses import dataclass

import numpy as np
import torch

from models.illum_net import ILLUM_CHECKPOINT_VERSION, IlluminationClassifier
from synth.manifest import DatasetManifest
from utils.checkpoints import load_checkpoint, save_checkpoint
from utils.config import SelectionMode, TrainConfig
from utils.errors import ValidationError
from utils.tensors import images_to_tensor
from utils.training import canonical_order, predict, train_classifier

CHECKPOINT_KIND = "illum"
HOLDOUT_FRACTION = 0.2
# mean pairwise confusion above which two domains are reported as indistinguishable
DEGENERATE_CONFUSION = 0.2


@dataclass(frozen=True)
class DomainSelection:
    """
    Result of the counting argmax: k_star indexes the classifier's classes.
    A random selection credits every target image to the drawn class so that the votes still sum to n_images.
    """

    k_star: int
    vote_counts: tuple[int, ...]
    n_images: int
    domain_id: int | None = None
    mode: SelectionMode = SelectionMode.INFERRED

    def __post_init__(self):
        if self.n_images < 1 or sum(self.vote_counts) != self.n_images:
            raise ValidationError(f"vote_counts sum to {sum(self.vote_counts)}, expected n_images={self.n_images}")
        if not 0 <= self.k_star < len(self.vote_counts) or int(np.argmax(self.vote_counts)) != self.k_star:
            raise ValidationError(f"k_star={self.k_star} is not the first maximum of vote_counts")

    def to_dict(self) -> dict:
        return {
            "k_star": self.k_star,
            "vote_counts": list(self.vote_counts),
            "n_images": self.n_images,
            "domain_id": self.domain_id,
            "mode": SelectionMode(self.mode).value,
        }


def select_domain(predictions, n_classes: int) -> tuple[int, tuple[int, ...]]:
    """k* = argmax_k Σ_i Δ(𝕃(x_i), k); ties go to the smallest class index."""
    predictions = np.asarray(predictions, dtype=np.int64)
    if predictions.size == 0:
        raise ValidationError("Cannot select a domain from zero predictions")
    if predictions.min() < 0 or predictions.max() >= n_classes:
        raise ValidationError(f"Predictions must lie in [0, {n_classes})")

    votes = np.bincount(predictions, minlength=n_classes)
    # np.argmax returns the first maximum
    return int(np.argmax(votes)), tuple(int(v) for v in votes)


def _split_holdout(n: int, fraction: float, generator: torch.Generator) -> tuple[torch.Tensor, torch.Tensor]:
    permutation = torch.randperm(n, generator=generator)
    n_holdout = int(round(n * fraction)) if n >= 5 else 0
    return permutation[n_holdout:], permutation[:n_holdout]


def train_illum_classifier(synthetic: list[DatasetManifest], config: TrainConfig) -> IlluminationClassifier:
    """
    Trains an N-way classifier on synthetic domains, labels being domain ids.
    A per-domain fraction of images is held out to report per-image accuracy.
    """
    if len(synthetic) < 2:
        raise ValidationError(f"Illumination inference needs at least 2 synthetic domains, got {len(synthetic)}")

    domain_ids = [m.single_domain_id() for m in synthetic]
    if len(set(domain_ids)) != len(domain_ids):
        raise ValidationError(f"Synthetic domains must have distinct domain ids, got {domain_ids}")
    if len({(m.height, m.width) for m in synthetic}) != 1:
        raise ValidationError("Synthetic domains have different image sizes")

    generator = torch.Generator().manual_seed(config.seed)
    train_idx, holdout_idx = [], []
    offset = 0
    images, labels = [], []
    for class_index, manifest in enumerate(synthetic):
        domain_images = manifest.images()
        order = canonical_order(domain_images, manifest.identity_labels())
        images += [domain_images[i] for i in order]
        labels += [class_index] * len(order)

        train_part, holdout_part = _split_holdout(len(order), HOLDOUT_FRACTION, generator)
        train_idx.append(train_part + offset)
        holdout_idx.append(holdout_part + offset)
        offset += len(order)

    height, width = synthetic[0].height, synthetic[0].width
    inputs = images_to_tensor(images, height, width)
    targets = torch.tensor(labels, dtype=torch.long)
    train_idx, holdout_idx = torch.cat(train_idx), torch.cat(holdout_idx)

    torch.manual_seed(config.seed)
    classifier = IlluminationClassifier(domain_ids, height, width)
    logging.info(f"train-illum Training on {len(train_idx)} images of {len(domain_ids)} illumination domains")

    history = train_classifier(classifier, inputs[train_idx], targets[train_idx], config, stage="train-illum")

    if len(holdout_idx):
        predicted = predict(classifier, inputs[holdout_idx]).argmax(1)
        truth = targets[holdout_idx]
        history["holdout_accuracy"] = float((predicted == truth).float().mean())
        confusion = _confusion(truth.numpy(), predicted.numpy(), len(domain_ids))
        history["degenerate_pairs"] = _degenerate_pairs(confusion, domain_ids)
        logging.info(f"train-illum Held-out per-image accuracy {history['holdout_accuracy']:.3f}")
    else:
        history["holdout_accuracy"] = float("nan")
        history["degenerate_pairs"] = []

    classifier.history = history
    classifier.eval()
    return classifier


def _confusion(truth: np.ndarray, predicted: np.ndarray, n: int) -> np.ndarray:
    """Row-normalized confusion matrix: entry [i, j] is the fraction of class i predicted as j."""
    counts = np.zeros((n, n))
    np.add.at(counts, (truth, predicted), 1)
    totals = counts.sum(axis=1, keepdims=True)
    return np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)


def _degenerate_pairs(confusion: np.ndarray, domain_ids: list[int]) -> list[list[int]]:
    pairs = []
    n = len(domain_ids)
    for i in range(n):
        for j in range(i + 1, n):
            if (confusion[i, j] + confusion[j, i]) / 2 >= DEGENERATE_CONFUSION:
                pairs.append([domain_ids[i], domain_ids[j]])
                logging.warning(
                    f"train-illum Domains {domain_ids[i]} and {domain_ids[j]} are hard to tell apart "
                    f"(confusion {confusion[i, j]:.2f}/{confusion[j, i]:.2f}); their illuminations may be degenerate"
                )
    return pairs


def classify_images(classifier: IlluminationClassifier, images: list[np.ndarray]) -> np.ndarray:
    """Per-image predicted class 𝕃(x_i)."""
    inputs = images_to_tensor(images, classifier.height, classifier.width)
    return predict(classifier, inputs).argmax(1).numpy()


def infer_domain(classifier: IlluminationClassifier, target_images: list[np.ndarray]) -> DomainSelection:
    """Selects the synthetic domain S_k* whose class collects the most votes over the target images."""
    if len(target_images) == 0:
        raise ValidationError("infer_domain needs at least one target image")

    k_star, votes = select_domain(classify_images(classifier, target_images), classifier.num_classes)
    selection = DomainSelection(k_star, votes, len(target_images), classifier.domain_ids[k_star])
    logging.info(f"infer-illum Selected domain {selection.domain_id} (class {k_star}) with {votes[k_star]}/{len(target_images)} votes")
    return selection


def random_domain(classifier: IlluminationClassifier, n_images: int, rng: np.random.Generator) -> DomainSelection:
    """Baseline for the selection ablation: a uniformly drawn class instead of the vote."""
    k = int(rng.integers(classifier.num_classes))
    votes = [0] * classifier.num_classes
    votes[k] = n_images
    return DomainSelection(k, tuple(votes), n_images, classifier.domain_ids[k], SelectionMode.RANDOM)


def save_illum(classifier: IlluminationClassifier, path):
    history = {
        "loss": [float(x) for x in classifier.history.get("loss", [])],
        "accuracy": [float(x) for x in classifier.history.get("accuracy", [])],
        "final_accuracy": float(classifier.history.get("final_accuracy", float("nan"))),
        "holdout_accuracy": float(classifier.history.get("holdout_accuracy", float("nan"))),
        "degenerate_pairs": [list(map(int, p)) for p in classifier.history.get("degenerate_pairs", [])],
    }
    return save_checkpoint(
        path, CHECKPOINT_KIND, ILLUM_CHECKPOINT_VERSION, classifier.hparams(), classifier.state_dict(), history=history
    )


def load_illum(path) -> IlluminationClassifier:
    payload = load_checkpoint(path, CHECKPOINT_KIND, ILLUM_CHECKPOINT_VERSION)
    hparams = payload["hparams"]
    classifier = IlluminationClassifier(
        hparams["domain_ids"], hparams["height"], hparams["width"], tuple(hparams["channels"])
    )
    classifier.load_state_dict(payload["state"])
    classifier.history = payload.get("history", {})
    classifier.eval()
    return classifier

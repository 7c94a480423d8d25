"""Joint identity training of Φ over merged domains, feature extraction and fine-tuning."""

import copy
import logging

import numpy as np
import torch
import torch.nn.functional as F

from models.reid_net import REID_CHECKPOINT_VERSION, FeatureExtractor
from synth.manifest import DatasetManifest
from utils.checkpoints import load_checkpoint, save_checkpoint
from utils.config import TrainConfig
from utils.errors import ValidationError
from utils.tensors import images_to_tensor
from utils.training import canonical_order, train_classifier

CHECKPOINT_KIND = "reid"


def build_label_map(identity_ids) -> dict[int, int]:
    """Contiguous class indices for sorted identity ids."""
    return {identity: index for index, identity in enumerate(sorted(set(identity_ids)))}


def _training_tensors(manifests: list[DatasetManifest], label_map: dict[int, int]):
    samples = [s for m in manifests for s in m.samples]
    images = [s.image for s in samples]
    order = canonical_order(images, [s.domain_id for s in samples], [s.identity_id for s in samples])

    height, width = manifests[0].height, manifests[0].width
    inputs = images_to_tensor([images[i] for i in order], height, width)
    targets = torch.tensor([label_map[samples[i].identity_id] for i in order], dtype=torch.long)
    return inputs, targets


def _check_manifests(manifests: list[DatasetManifest]):
    if not manifests or all(len(m) == 0 for m in manifests):
        raise ValidationError("No training samples")
    sizes = {(m.height, m.width) for m in manifests}
    if len(sizes) != 1:
        raise ValidationError(f"Training datasets have different image sizes {sorted(sizes)}")


def train_joint(manifests: list[DatasetManifest], config: TrainConfig, embedding_dim: int = 64) -> FeatureExtractor:
    """
    Merges all real and synthetic domains into one identity classification problem and trains
    Φ from scratch. Identity ids are remapped to one contiguous class space recorded on the model.
    """
    _check_manifests(manifests)
    identities = set().union(*(m.identity_ids for m in manifests))
    if len(identities) < 2:
        raise ValidationError(f"Joint training needs at least 2 identities, got {len(identities)}")

    label_map = build_label_map(identities)
    inputs, targets = _training_tensors(manifests, label_map)

    torch.manual_seed(config.seed)
    model = FeatureExtractor(
        num_classes=len(label_map),
        embedding_dim=embedding_dim,
        height=manifests[0].height,
        width=manifests[0].width,
        label_map=label_map,
    )
    logging.info(f"train-reid Training on {len(inputs)} images of {len(label_map)} identities from {len(manifests)} domains")

    model.history = train_classifier(model, inputs, targets, config, stage="train-reid", flip=True)
    model.eval()
    return model


@torch.no_grad()
def extract_features(model: FeatureExtractor, images: list[np.ndarray], batch_size: int = 256) -> np.ndarray:
    """
    Embedding-layer outputs Φ(x), one unit-length D-vector per image; the classifier head is not applied.
    Unit length makes the euclidean ranking agree with the cosine one.
    """
    if len(images) == 0:
        return np.zeros((0, model.embedding_dim))
    inputs = images_to_tensor(images, model.height, model.width)

    model.eval()
    features = [model.embed(inputs[i : i + batch_size]) for i in range(0, len(inputs), batch_size)]
    return F.normalize(torch.cat(features), dim=1).double().numpy()


def finetune(model: FeatureExtractor, translated: DatasetManifest, config: TrainConfig) -> FeatureExtractor:
    """
    Continues training on translated synthetic images. The conv stack and embedding layer are
    warm-started from model, the classifier head is re-initialized for the translated label space,
    and the input model is left untouched.
    """
    _check_manifests([translated])
    if (translated.height, translated.width) != (model.height, model.width):
        raise ValidationError(
            f"Model expects {model.height}×{model.width} images, got {translated.height}×{translated.width}"
        )
    if len(translated.identity_ids) < 2:
        raise ValidationError(f"Fine-tuning needs at least 2 identities, got {len(translated.identity_ids)}")

    label_map = build_label_map(translated.identity_ids)
    inputs, targets = _training_tensors([translated], label_map)

    torch.manual_seed(config.seed)
    tuned = copy.deepcopy(model)
    tuned.reset_classifier(len(label_map), label_map)
    logging.info(f"finetune Fine-tuning on {len(inputs)} translated images of {len(label_map)} identities")

    tuned.history = train_classifier(tuned, inputs, targets, config, stage="finetune", flip=True)
    tuned.eval()
    return tuned


def save_reid(model: FeatureExtractor, path):
    return save_checkpoint(
        path,
        CHECKPOINT_KIND,
        REID_CHECKPOINT_VERSION,
        model.hparams(),
        model.state_dict(),
        label_map={int(k): int(v) for k, v in model.label_map.items()},
        history=_plain(model.history),
    )


def load_reid(path) -> FeatureExtractor:
    payload = load_checkpoint(path, CHECKPOINT_KIND, REID_CHECKPOINT_VERSION)
    hparams = payload["hparams"]
    model = FeatureExtractor(
        num_classes=hparams["num_classes"],
        embedding_dim=hparams["embedding_dim"],
        height=hparams["height"],
        width=hparams["width"],
        channels=tuple(hparams["channels"]),
        label_map=payload["label_map"],
    )
    model.load_state_dict(payload["state"])
    model.history = payload.get("history", {})
    model.eval()
    return model


def _plain(history: dict) -> dict:
    """History with plain floats only, loadable with weights_only=True."""
    return {k: [float(x) for x in v] if isinstance(v, list) else float(v) for k, v in history.items()}

"""Seeded cross-entropy training loop shared by the identity and illumination classifiers."""

import hashlib
import logging
import math

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from utils.config import TrainConfig
from utils.errors import TrainingDivergedError

MOMENTUM = 0.9
LR_DECAY = 0.1


def canonical_order(images: list[np.ndarray], *keys: list[int]) -> list[int]:
    """Indices sorting samples by the given integer keys, then by image content."""
    digests = [hashlib.sha1(np.ascontiguousarray(img).tobytes()).hexdigest() for img in images]
    return sorted(range(len(images)), key=lambda i: tuple(k[i] for k in keys) + (digests[i],))


def batches(permutation: torch.Tensor, batch_size: int) -> list[torch.Tensor]:
    """Splits a permutation into batches; a trailing batch of one joins its predecessor (batch norm needs two)."""
    chunks = list(torch.split(permutation, batch_size))
    if len(chunks) > 1 and len(chunks[-1]) == 1:
        chunks[-2] = torch.cat([chunks[-2], chunks.pop()])
    return chunks


def milestone(epochs: int) -> int:
    """Epoch at which the learning rate drops ×0.1 (two thirds of the run)."""
    return max(1, round(2 * epochs / 3))


@torch.no_grad()
def predict(model: nn.Module, inputs: torch.Tensor, batch_size: int = 256) -> torch.Tensor:
    """Class logits in eval mode."""
    model.eval()
    outputs = [model(inputs[i : i + batch_size]) for i in range(0, len(inputs), batch_size)]
    return torch.cat(outputs)


def accuracy(model: nn.Module, inputs: torch.Tensor, targets: torch.Tensor) -> float:
    if len(inputs) == 0:
        return float("nan")
    return float((predict(model, inputs).argmax(1) == targets).float().mean())


def train_classifier(
    model: nn.Module,
    inputs: torch.Tensor,
    targets: torch.Tensor,
    config: TrainConfig,
    stage: str,
    flip: bool = False,
) -> dict:
    """
    Minimizes cross-entropy with SGD (momentum 0.9, step decay at 2/3 of the epochs).
    Batch order and flips come from a generator seeded with config.seed.
    Returns the per-epoch loss and accuracy history plus the final eval-mode training accuracy.
    """
    generator = torch.Generator().manual_seed(config.seed)
    optimizer = torch.optim.SGD(
        model.parameters(), lr=config.learning_rate, momentum=MOMENTUM, weight_decay=config.weight_decay
    )
    scheduler = torch.optim.lr_scheduler.MultiStepLR(optimizer, milestones=[milestone(config.epochs)], gamma=LR_DECAY)
    history = {"loss": [], "accuracy": []}

    for epoch in range(config.epochs):
        model.train()
        total_loss, correct = 0.0, 0

        for index in batches(torch.randperm(len(inputs), generator=generator), config.batch_size):
            x, y = inputs[index], targets[index]
            if flip:
                mirrored = torch.rand(len(x), generator=generator) < 0.5
                x = torch.where(mirrored[:, None, None, None], x.flip(3), x)

            logits = model(x)
            loss = F.cross_entropy(logits, y)
            if not math.isfinite(loss.item()):
                raise TrainingDivergedError(stage, epoch + 1, loss.item())

            optimizer.zero_grad()
            loss.backward()
            optimizer.step()

            total_loss += loss.item() * len(x)
            correct += int((logits.argmax(1) == y).sum())

        scheduler.step()
        history["loss"].append(total_loss / len(inputs))
        history["accuracy"].append(correct / len(inputs))
        logging.info(f"{stage} Epoch {epoch + 1}/{config.epochs} loss {history['loss'][-1]:.4f} accuracy {history['accuracy'][-1]:.3f}")

    history["final_accuracy"] = accuracy(model, inputs, targets)
    logging.info(f"{stage} Final training accuracy {history['final_accuracy']:.3f}")
    return history

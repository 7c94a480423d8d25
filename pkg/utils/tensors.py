"""Conversions between ImageTensor lists and the [-1,1] NCHW tensors the networks consume."""

import numpy as np
import torch

from utils.errors import ValidationError


def images_to_tensor(images, height: int | None = None, width: int | None = None) -> torch.Tensor:
    """Stacks H×W×3 images in [0,1] into an N×3×H×W float32 tensor in [-1,1]."""
    if len(images) == 0:
        raise ValidationError("Cannot build a batch from an empty image list")

    array = np.stack([np.asarray(img, dtype=np.float32) for img in images])
    if array.ndim != 4 or array.shape[3] != 3:
        raise ValidationError(f"Expected H×W×3 images, got batch shape {array.shape}")

    if height is not None and width is not None and array.shape[1:3] != (height, width):
        raise ValidationError(f"Expected {height}×{width} images, got {array.shape[1]}×{array.shape[2]}")

    return torch.from_numpy(array).permute(0, 3, 1, 2).contiguous() * 2.0 - 1.0


def tensor_to_images(batch: torch.Tensor) -> list[np.ndarray]:
    """Inverse of images_to_tensor: [-1,1] NCHW back to a list of H×W×3 arrays in [0,1]."""
    array = ((batch.detach().cpu().double().clamp(-1.0, 1.0) + 1.0) / 2.0).permute(0, 2, 3, 1).numpy()
    return [array[i] for i in range(array.shape[0])]

"""Image file I/O and conversions between the [0,1] float images and 8-bit files."""

import numpy as np
from PIL import Image

from utils.errors import ValidationError


def quantize(image: np.ndarray) -> np.ndarray:
    """Snaps a [0,1] image to the 8-bit grid so a PNG round-trip is exact."""
    return np.round(np.clip(image, 0.0, 1.0) * 255.0) / 255.0


def to_uint8(image: np.ndarray) -> np.ndarray:
    """Converts a [0,1] float image to 8-bit RGB."""
    return np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_png(path, image: np.ndarray) -> None:
    """Writes an H×W×3 image in [0,1] as lossless 8-bit RGB PNG."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValidationError(f"Expected an H×W×3 image, got shape {image.shape}")
    Image.fromarray(to_uint8(image), mode="RGB").save(path, format="PNG")


def load_png(path) -> np.ndarray:
    """Reads an image file as an H×W×3 float64 array in [0,1]."""
    try:
        with Image.open(path) as img:
            data = np.asarray(img.convert("RGB"), dtype=np.float64)
    except OSError as e:
        raise ValidationError(f"Cannot read image {path}: {e}") from e
    return data / 255.0

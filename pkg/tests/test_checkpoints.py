"""Tests for checkpoint containers, JSON documents and image files."""

import numpy as np
import pytest
import torch

from utils.checkpoints import load_checkpoint, read_json, save_checkpoint, write_json
from utils.errors import ValidationError
from utils.image_io import load_png, quantize, save_png
from utils.tensors import images_to_tensor, tensor_to_images


def test_checkpoint_round_trip(tmp_path):
    """Test that kind, version, hparams, state and extras survive a save and load."""
    state = {"weight": torch.arange(4.0)}
    save_checkpoint(tmp_path / "m.pt", "reid", 1, {"embedding_dim": 8}, state, label_map={3: 0})

    payload = load_checkpoint(tmp_path / "m.pt", "reid", 1)

    assert payload["hparams"] == {"embedding_dim": 8}
    assert torch.equal(payload["state"]["weight"], state["weight"])
    assert payload["label_map"] == {3: 0}
    assert not (tmp_path / "m.pt.tmp").exists()


def test_checkpoint_kind_and_version(tmp_path):
    """Test that a checkpoint of another kind or schema version is rejected."""
    save_checkpoint(tmp_path / "m.pt", "illum", 1, {}, {})

    with pytest.raises(ValidationError, match="holds a illum model, expected translation"):
        load_checkpoint(tmp_path / "m.pt", "translation", 1)
    with pytest.raises(ValidationError, match="version 1, expected 2"):
        load_checkpoint(tmp_path / "m.pt", "illum", 2)


def test_checkpoint_missing_or_corrupt(tmp_path):
    """Test that missing and unreadable files raise validation errors."""
    with pytest.raises(ValidationError, match="does not exist"):
        load_checkpoint(tmp_path / "missing.pt", "reid", 1)

    (tmp_path / "broken.pt").write_bytes(b"not a checkpoint")
    with pytest.raises(ValidationError, match="cannot be read"):
        load_checkpoint(tmp_path / "broken.pt", "reid", 1)


def test_json_documents(tmp_path):
    """Test atomic JSON writes, reads and the errors for missing or malformed files."""
    write_json(tmp_path / "nested" / "doc.json", {"b": 1, "a": [1.5, None]})

    assert read_json(tmp_path / "nested" / "doc.json") == {"a": [1.5, None], "b": 1}
    with pytest.raises(ValidationError, match="does not exist"):
        read_json(tmp_path / "missing.json")

    (tmp_path / "bad.json").write_text('{\n  "a": 1,\n}')
    with pytest.raises(ValidationError, match="bad.json:3"):
        read_json(tmp_path / "bad.json")


def test_png_round_trip_is_exact(tmp_path):
    """Test that quantized images read back bit-identically."""
    image = quantize(np.random.default_rng(0).random((16, 8, 3)))
    save_png(tmp_path / "x.png", image)

    assert np.array_equal(load_png(tmp_path / "x.png"), image)


def test_png_errors(tmp_path):
    """Test that non-RGB arrays and unreadable files are rejected."""
    with pytest.raises(ValidationError, match="H×W×3"):
        save_png(tmp_path / "x.png", np.zeros((4, 4)))

    (tmp_path / "y.png").write_bytes(b"nope")
    with pytest.raises(ValidationError, match="Cannot read image"):
        load_png(tmp_path / "y.png")


def test_tensor_conversion():
    """Test the [0,1] ↔ [-1,1] conversion and its size check."""
    images = [np.zeros((16, 8, 3)), np.ones((16, 8, 3))]
    batch = images_to_tensor(images, 16, 8)

    assert batch.shape == (2, 3, 16, 8)
    assert batch.min() == -1.0 and batch.max() == 1.0
    assert np.allclose(tensor_to_images(batch)[1], 1.0)
    with pytest.raises(ValidationError, match="Expected 32×8"):
        images_to_tensor(images, 32, 8)
    with pytest.raises(ValidationError, match="empty"):
        images_to_tensor([])

"""Tests for dataset manifests and their on-disk format."""

import json

import numpy as np
import pytest

from synth.generator import generate_domain
from synth.manifest import (
    MANIFEST_FILE,
    DatasetManifest,
    Origin,
    Sample,
    load_manifests,
    merge_manifests,
    read_manifest,
    write_manifest,
)
from synth.specs import IlluminationSpec, sample_identities
from utils.errors import ValidationError


@pytest.fixture
def manifest():
    """A small rendered domain."""
    return generate_domain(sample_identities(3, rng_seed=0), IlluminationSpec(4, (1.1, 0.9, 1.0)), 2, rng_seed=1)


def test_write_then_read(tmp_path, manifest):
    """Test that a written dataset reads back with identical pixels and labels."""
    write_manifest(manifest, tmp_path / "domain")

    assert read_manifest(tmp_path / "domain") == manifest
    assert not (tmp_path / "domain" / (MANIFEST_FILE + ".tmp")).exists()


def test_missing_manifest(tmp_path):
    """Test that a directory without manifest.json is rejected."""
    with pytest.raises(ValidationError, match="No manifest.json"):
        read_manifest(tmp_path)


def test_malformed_manifest(tmp_path, manifest):
    """Test that a record without labels raises a validation error."""
    write_manifest(manifest, tmp_path)
    document = json.loads((tmp_path / MANIFEST_FILE).read_text())
    del document["samples"][0]["identity_id"]
    (tmp_path / MANIFEST_FILE).write_text(json.dumps(document))

    with pytest.raises(ValidationError, match="Malformed manifest"):
        read_manifest(tmp_path)


def test_shape_mismatch():
    """Test that a sample with the wrong size is rejected."""
    sample = Sample(np.zeros((32, 32, 3)), 0, 0, Origin.SYNTHETIC)

    with pytest.raises(ValidationError, match="sample 0 has shape"):
        DatasetManifest("bad", 64, 32, [sample])


def test_pixel_range():
    """Test that pixels outside [0, 1] are rejected."""
    sample = Sample(np.full((16, 16, 3), 1.5), 0, 0, Origin.REAL)

    with pytest.raises(ValidationError, match="outside"):
        DatasetManifest("bad", 16, 16, [sample])


def test_load_manifests_sorted(tmp_path, manifest):
    """Test that a parent directory yields its datasets sorted by directory name."""
    write_manifest(manifest, tmp_path / "b")
    write_manifest(DatasetManifest("first", manifest.height, manifest.width, manifest.samples[:1]), tmp_path / "a")

    loaded = load_manifests(tmp_path)

    assert [m.name for m in loaded] == ["first", manifest.name]
    assert load_manifests(tmp_path / "b") == [manifest]


def test_load_manifests_empty(tmp_path):
    """Test that a directory without datasets is rejected."""
    with pytest.raises(ValidationError, match="No dataset found"):
        load_manifests(tmp_path)


def test_merge(manifest):
    """Test that merging concatenates samples and rejects mixed sizes."""
    merged = merge_manifests("all", [manifest, manifest])

    assert len(merged) == 2 * len(manifest)
    assert merged.identity_labels() == manifest.identity_labels() * 2

    small = DatasetManifest("small", 16, 16, [Sample(np.zeros((16, 16, 3)), 0, 0, Origin.REAL)])
    with pytest.raises(ValidationError, match="different image sizes"):
        merge_manifests("mixed", [manifest, small])
    with pytest.raises(ValidationError, match="Nothing to merge"):
        merge_manifests("none", [])


def test_single_domain_id(manifest):
    """Test that single_domain_id returns the one domain and rejects mixed manifests."""
    assert manifest.single_domain_id() == 4

    mixed = DatasetManifest("mixed", 64, 32, manifest.samples[:1] + [Sample(manifest.samples[1].image, 0, 5, Origin.SYNTHETIC)])
    with pytest.raises(ValidationError, match="exactly one"):
        mixed.single_domain_id()

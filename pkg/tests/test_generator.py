"""Tests for synthetic and target dataset generation."""

import numpy as np
import pytest

from synth.generator import RealnessGap, generate_domain, generate_target_domain, read_catalog, write_catalog
from synth.manifest import Origin
from synth.specs import IlluminationSpec, sample_identities, sample_illuminations
from utils.errors import ValidationError


@pytest.fixture
def identities():
    """Ten identities for the small rendering tests."""
    return sample_identities(10, rng_seed=0)


@pytest.fixture
def catalog():
    """Four catalog illuminations."""
    return sample_illuminations(4, rng_seed=1)


def test_synthetic_collection_counts():
    """Test that 20 identities under 8 illuminations with 6 samples each give 960 labeled images."""
    many = sample_identities(20, rng_seed=0)
    domains = [generate_domain(many, illum, 6, rng_seed=3) for illum in sample_illuminations(8, rng_seed=2)]

    assert sum(len(d) for d in domains) == 960
    for domain in domains:
        assert len(domain.domain_ids) == 1
        assert domain.identity_ids == set(range(20))
        assert domain.origins == {Origin.SYNTHETIC}


def test_single_sample_domain(identities):
    """Test that one identity with one sample gives a dataset of size 1."""
    domain = generate_domain(identities[:1], IlluminationSpec(0), 1, rng_seed=0)

    assert len(domain) == 1
    assert domain.samples[0].image.shape == (64, 32, 3)


def test_empty_identity_list():
    """Test that an empty identity list is rejected."""
    with pytest.raises(ValidationError, match="identities must not be empty"):
        generate_domain([], IlluminationSpec(0), 1, rng_seed=0)


def test_samples_per_identity_must_be_positive(identities):
    """Test that zero samples per identity is rejected."""
    with pytest.raises(ValidationError, match="samples_per_identity"):
        generate_domain(identities, IlluminationSpec(0), 0, rng_seed=0)


def test_generation_is_deterministic(identities, catalog):
    """Test that the same seed gives identical manifests."""
    assert generate_domain(identities, catalog[0], 2, rng_seed=9) == generate_domain(identities, catalog[0], 2, rng_seed=9)


def test_pixels_on_8bit_grid(identities, catalog):
    """Test that generated pixels lie in [0, 1] on the 1/255 grid."""
    domain = generate_target_domain(identities, IlluminationSpec(50, (1.2, 0.9, 1.1)), 2, RealnessGap(), 4, catalog)

    for image in domain.images():
        assert image.min() >= 0.0
        assert image.max() <= 1.0
        assert np.allclose(image * 255, np.round(image * 255))


def test_zero_gap_matches_synthetic_render(identities, catalog):
    """Test that a target domain with the gap switched off equals the synthetic render of the same illumination."""
    illum = IlluminationSpec(77, (0.8, 1.1, 1.3), (0.02, -0.03, 0.0), 1.2, (0.3, 0.4, 0.5))

    target = generate_target_domain(identities, illum, 3, RealnessGap.none(), 5, catalog)
    synthetic = generate_domain(identities, illum, 3, 5)

    assert target.identity_labels() == synthetic.identity_labels()
    for a, b in zip(target.images(), synthetic.images()):
        assert np.array_equal(a, b)
    assert target.origins == {Origin.REAL}


def test_sensor_noise_level(identities, catalog):
    """Test that the residual of a noise-only gap has standard deviation 0.02 ± 0.005."""
    illum = IlluminationSpec(60)
    noisy = generate_target_domain(identities, illum, 4, RealnessGap(0.02, texture=False, blur=False), 8, catalog)
    clean = generate_domain(identities, illum, 4, 8)

    residuals = []
    for a, b in zip(noisy.images(), clean.images()):
        interior = (b > 0.1) & (b < 0.9)
        residuals.append((a - b)[interior])

    assert np.std(np.concatenate(residuals)) == pytest.approx(0.02, abs=0.005)


def test_target_illumination_collision(identities, catalog):
    """Test that a target illumination equal to a catalog entry is rejected."""
    copy = IlluminationSpec.from_dict({**catalog[2].to_dict(), "illum_id": 99})

    with pytest.raises(ValidationError, match="held out"):
        generate_target_domain(identities, copy, 1, RealnessGap(), 0, catalog)
    with pytest.raises(ValidationError, match="collides"):
        generate_target_domain(identities, IlluminationSpec(catalog[0].illum_id, (1.5, 1.5, 1.5)), 1, RealnessGap(), 0, catalog)


def test_negative_noise_sigma():
    """Test that a negative noise level is rejected."""
    with pytest.raises(ValidationError, match="noise_sigma"):
        RealnessGap(noise_sigma=-0.1)


def test_catalog_round_trip(tmp_path, identities, catalog):
    """Test that a written catalog reads back identical specs, also when given its directory."""
    write_catalog(tmp_path / "catalog.json", identities, catalog)

    assert read_catalog(tmp_path / "catalog.json") == (identities, catalog)
    assert read_catalog(tmp_path) == (identities, catalog)


def test_missing_catalog(tmp_path):
    """Test that a missing catalog raises a validation error."""
    with pytest.raises(ValidationError, match="No illumination catalog"):
        read_catalog(tmp_path / "missing.json")

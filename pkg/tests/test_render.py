"""Tests for the sprite renderer."""

import math

import numpy as np
import pytest

from services.losses import make_soft_matte
from synth.render import BACKGROUND, HEAD, LEGS, TORSO, person_layout, render_person
from synth.specs import IdentitySpec, IlluminationSpec, sample_identities, sample_illuminations
from utils.errors import ValidationError


@pytest.fixture
def identity():
    """A single identity with distinct part colours."""
    return IdentitySpec(7, ((0.9, 0.7, 0.6), (0.1, 0.2, 0.8), (0.3, 0.5, 0.2)), (0.4, 0.33, 0.15, 0.12))


def test_identity_illumination_keeps_base_colours(identity):
    """Test that foreground pixels equal the identity's colours under the identity illumination."""
    illum = IlluminationSpec(0)
    image = render_person(identity, illum, pose_angle=0.3, rng_seed=5)
    labels = person_layout(identity, 0.3, 5, 64, 32)

    for part, color in zip((HEAD, TORSO, LEGS), identity.body_colors):
        assert (labels == part).any()
        assert np.array_equal(image[labels == part], np.tile(color, ((labels == part).sum(), 1)))
    assert np.allclose(image[labels == BACKGROUND], illum.background_color)


def test_render_is_deterministic(identity):
    """Test that identical inputs give bit-identical images."""
    illum = sample_illuminations(1, rng_seed=3)[0]

    first = render_person(identity, illum, 1.0, 11)
    second = render_person(identity, illum, 1.0, 11)

    assert first.tobytes() == second.tobytes()


def test_illuminations_change_foreground(identity):
    """Test that two different illuminations produce different foreground pixels."""
    bright = IlluminationSpec(0, (1.4, 1.2, 1.0), (0.05, 0.0, -0.05), 0.8)
    dark = IlluminationSpec(1, (0.6, 0.7, 0.9), (0.0, 0.02, 0.0), 1.3)
    labels = person_layout(identity, 2.0, 3, 64, 32)

    a = render_person(identity, bright, 2.0, 3)
    b = render_person(identity, dark, 2.0, 3)

    assert np.abs(a - b)[labels != BACKGROUND].mean() > 0


def test_back_view_is_mirrored(identity):
    """Test that a pose facing away mirrors the layout of the corresponding front pose."""
    front = person_layout(identity, 0.0, 1, 64, 32)
    back = person_layout(identity, math.pi, 1, 64, 32)

    assert np.array_equal(back, front[:, ::-1])


@pytest.mark.parametrize("pose", [-0.1, 2 * math.pi, 7.0])
def test_pose_range(identity, pose):
    """Test that poses outside [0, 2π) are rejected."""
    with pytest.raises(ValidationError, match="pose_angle"):
        render_person(identity, IlluminationSpec(0), pose, 0)


def test_minimum_size(identity):
    """Test that crops smaller than 16 pixels are rejected."""
    with pytest.raises(ValidationError, match="too small"):
        render_person(identity, IlluminationSpec(0), 0.0, 0, height=15, width=32)


def test_pixels_in_range_for_random_specs():
    """Test that every rendered pixel lies in [0, 1] for specs drawn from the sampling ranges."""
    identities = sample_identities(10, rng_seed=0)
    catalog = sample_illuminations(10, rng_seed=1)
    rng = np.random.default_rng(2)

    for identity, illum in zip(identities, catalog):
        image = render_person(identity, illum, float(rng.uniform(0, 2 * math.pi)), int(rng.integers(1000)))
        assert image.min() >= 0.0
        assert image.max() <= 1.0


def test_foreground_lies_in_matte_core():
    """Test that at least 60% of the sprite's pixels lie where the default soft matte exceeds 0.5."""
    core = make_soft_matte(64, 32).m > 0.5
    identities = sample_identities(20, rng_seed=5)
    rng = np.random.default_rng(6)

    inside, total = 0, 0
    for identity in identities:
        for _ in range(5):
            labels = person_layout(identity, float(rng.uniform(0, 2 * math.pi)), int(rng.integers(1000)), 64, 32)
            foreground = labels != BACKGROUND
            inside += (foreground & core).sum()
            total += foreground.sum()

    assert inside / total >= 0.6

"""
Sprite renderer standing in for the game-engine renders: a head disc, a torso and two legs
drawn in the centre of a tall crop, then lit by an IlluminationSpec.
"""

import math

import numpy as np

from synth.specs import IdentitySpec, IlluminationSpec
from utils.errors import ValidationError

BACKGROUND, HEAD, TORSO, LEGS = 0, 1, 2, 3

TOP_FRACTION = 0.14
BOTTOM_FRACTION = 0.86
SHEAR = 0.1


def person_layout(identity: IdentitySpec, pose_angle: float, rng_seed: int, height: int, width: int) -> np.ndarray:
    """Returns an H×W integer label map (0 background, 1 head, 2 torso, 3 legs)."""
    if height < 16 or width < 16:
        raise ValidationError(f"Image size {height}×{width} is too small, both sides must be >= 16")
    if not 0.0 <= pose_angle < 2.0 * math.pi:
        raise ValidationError(f"pose_angle={pose_angle} is outside [0, 2π)")

    torso_w, torso_h, head_r, leg_w = identity.body_geometry
    rng = np.random.default_rng([rng_seed, identity.identity_id])
    jitter_v, jitter_u = rng.integers(-1, 2, size=2)

    rows = np.arange(height, dtype=np.float64)[:, None]
    cols = np.arange(width, dtype=np.float64)[None, :]

    cv = width / 2.0 + jitter_v
    top = TOP_FRACTION * height + jitter_u
    bottom = BOTTOM_FRACTION * height + jitter_u
    mid_u = (top + bottom) / 2.0

    # viewpoint: horizontal shear proportional to the sideways component of the pose
    shift = SHEAR * math.sin(pose_angle) * (rows - mid_u)
    x = cols - cv - shift

    radius = head_r * width
    head_cu = top + radius
    torso_top = top + 2.0 * radius
    torso_bottom = min(torso_top + torso_h * height, bottom - 0.15 * height)
    half_torso = torso_w * width / 2.0
    half_leg = leg_w * width / 2.0
    leg_offset = half_torso - half_leg

    labels = np.zeros((height, width), dtype=np.int8)

    legs = (rows >= torso_bottom) & (rows < bottom) & (np.abs(np.abs(x) - leg_offset) <= half_leg)
    labels[legs] = LEGS

    torso = (rows >= torso_top) & (rows < torso_bottom) & (np.abs(x) <= half_torso)
    labels[torso] = TORSO

    head = (rows - head_cu) ** 2 + x**2 <= radius**2
    labels[head] = HEAD

    # back view: the sprite is seen mirrored
    if math.cos(pose_angle) < 0:
        labels = labels[:, ::-1].copy()

    return labels


def compose(identity: IdentitySpec, illum: IlluminationSpec, labels: np.ndarray) -> np.ndarray:
    """Paints the label map with the identity's colours over the illumination's background, unlit."""
    base = np.empty(labels.shape + (3,), dtype=np.float64)
    base[:] = illum.background_color
    for part, color in zip((HEAD, TORSO, LEGS), identity.body_colors):
        base[labels == part] = color
    return base


def render_person(
    identity: IdentitySpec,
    illum: IlluminationSpec,
    pose_angle: float,
    rng_seed: int,
    height: int = 64,
    width: int = 32,
) -> np.ndarray:
    """Renders one H×W×3 person crop in [0,1]; deterministic given all inputs."""
    labels = person_layout(identity, pose_angle, rng_seed, height, width)
    return illum.apply(compose(identity, illum, labels))

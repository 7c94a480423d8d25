"""Identity and illumination specifications of the procedural dataset."""

import math
from dataclasses import dataclass, field

import numpy as np

from utils.errors import ValidationError

BODY_PARTS = ("head", "torso", "legs")
GEOMETRY_FIELDS = ("torso_width", "torso_height", "head_radius", "leg_width")

# sampling ranges for the toy catalog, all inside the validated ranges
TORSO_WIDTH_RANGE = (0.30, 0.48)
TORSO_HEIGHT_RANGE = (0.30, 0.38)
HEAD_RADIUS_RANGE = (0.12, 0.18)
LEG_WIDTH_RANGE = (0.10, 0.16)
MIN_IDENTITY_DISTANCE = 0.15

# sampling ranges of the illumination catalog; gamma is drawn log-uniformly
GAIN_RANGE = (0.4, 1.6)
BIAS_RANGE = (-0.12, 0.12)
GAMMA_RANGE = (0.6, 1.7)
BACKGROUND_RANGE = (0.1, 0.9)


def _check_triple(name: str, values, low: float, high: float) -> tuple[float, float, float]:
    triple = tuple(float(v) for v in values)
    if len(triple) != 3:
        raise ValidationError(f"{name} must have 3 components, got {len(triple)}")
    for channel, value in enumerate(triple):
        if not math.isfinite(value) or value < low or value > high:
            raise ValidationError(f"{name}[{channel}]={value} is outside [{low}, {high}]")
    return triple


def _width(bounds) -> float:
    return float(bounds[1] - bounds[0])


@dataclass(frozen=True)
class IdentitySpec:
    """A virtual human: three body-part colours and four geometry fractions."""

    identity_id: int
    body_colors: tuple
    body_geometry: tuple

    def __post_init__(self):
        if self.identity_id < 0:
            raise ValidationError(f"identity_id={self.identity_id} must be >= 0")
        if len(self.body_colors) != len(BODY_PARTS):
            raise ValidationError(f"body_colors needs {len(BODY_PARTS)} RGB triples, got {len(self.body_colors)}")

        colors = tuple(
            _check_triple(f"body_colors.{part}", rgb, 0.0, 1.0) for part, rgb in zip(BODY_PARTS, self.body_colors)
        )
        object.__setattr__(self, "body_colors", colors)

        if len(self.body_geometry) != len(GEOMETRY_FIELDS):
            raise ValidationError(f"body_geometry needs {len(GEOMETRY_FIELDS)} values, got {len(self.body_geometry)}")
        for name, value in zip(GEOMETRY_FIELDS, self.body_geometry):
            if not 0.0 < float(value) < 1.0:
                raise ValidationError(f"body_geometry.{name}={value} is outside (0, 1)")
        object.__setattr__(self, "body_geometry", tuple(float(v) for v in self.body_geometry))

    def color_vector(self) -> np.ndarray:
        return np.asarray(self.body_colors, dtype=np.float64).reshape(-1)

    def to_dict(self) -> dict:
        return {
            "identity_id": self.identity_id,
            "body_colors": [list(c) for c in self.body_colors],
            "body_geometry": list(self.body_geometry),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IdentitySpec":
        try:
            return cls(int(data["identity_id"]), tuple(map(tuple, data["body_colors"])), tuple(data["body_geometry"]))
        except (KeyError, TypeError) as e:
            raise ValidationError(f"Malformed identity spec: {e}") from e


@dataclass(frozen=True)
class IlluminationSpec:
    """Parametric stand-in for an environment map: per-channel gain, bias and gamma."""

    illum_id: int
    channel_gain: tuple = (1.0, 1.0, 1.0)
    channel_bias: tuple = (0.0, 0.0, 0.0)
    gamma: float = 1.0
    background_color: tuple = field(default=(0.5, 0.5, 0.5))

    def __post_init__(self):
        if self.illum_id < 0:
            raise ValidationError(f"illum_id={self.illum_id} must be >= 0")
        object.__setattr__(self, "channel_gain", _check_triple("channel_gain", self.channel_gain, 0.2, 1.8))
        object.__setattr__(self, "channel_bias", _check_triple("channel_bias", self.channel_bias, -0.2, 0.2))
        object.__setattr__(
            self, "background_color", _check_triple("background_color", self.background_color, 0.0, 1.0)
        )
        if not math.isfinite(float(self.gamma)) or not 0.5 <= float(self.gamma) <= 2.0:
            raise ValidationError(f"gamma={self.gamma} is outside [0.5, 2.0]")
        object.__setattr__(self, "gamma", float(self.gamma))

    def apply(self, image: np.ndarray) -> np.ndarray:
        """clamp(gain ⊙ image + bias) ^ gamma, per channel."""
        gain = np.asarray(self.channel_gain, dtype=np.float64)
        bias = np.asarray(self.channel_bias, dtype=np.float64)
        lit = np.clip(image * gain + bias, 0.0, 1.0)
        if self.gamma == 1.0:
            return lit
        return lit**self.gamma

    def parameter_vector(self) -> np.ndarray:
        """All photometric parameters as one vector."""
        return np.concatenate(
            [self.channel_gain, self.channel_bias, [self.gamma], self.background_color]
        ).astype(np.float64)

    def normalized_parameters(self) -> np.ndarray:
        """
        Parameters scaled by the width of their catalog sampling range (gamma in log space),
        so that gain, bias, gamma and background weigh alike in distances.
        """
        return np.concatenate(
            [
                np.asarray(self.channel_gain) / _width(GAIN_RANGE),
                np.asarray(self.channel_bias) / _width(BIAS_RANGE),
                [math.log(self.gamma) / _width(np.log(GAMMA_RANGE))],
                np.asarray(self.background_color) / _width(BACKGROUND_RANGE),
            ]
        )

    def distance(self, other: "IlluminationSpec") -> float:
        """L2 distance of the normalized parameters."""
        return float(np.linalg.norm(self.normalized_parameters() - other.normalized_parameters()))

    def same_parameters(self, other: "IlluminationSpec") -> bool:
        return bool(np.allclose(self.parameter_vector(), other.parameter_vector(), atol=1e-9))

    def to_dict(self) -> dict:
        return {
            "illum_id": self.illum_id,
            "channel_gain": list(self.channel_gain),
            "channel_bias": list(self.channel_bias),
            "gamma": self.gamma,
            "background_color": list(self.background_color),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IlluminationSpec":
        try:
            return cls(
                int(data["illum_id"]),
                tuple(data["channel_gain"]),
                tuple(data["channel_bias"]),
                float(data["gamma"]),
                tuple(data["background_color"]),
            )
        except (KeyError, TypeError) as e:
            raise ValidationError(f"Malformed illumination spec: {e}") from e


def sample_identities(
    count: int, rng_seed: int, first_id: int = 0, min_distance: float = MIN_IDENTITY_DISTANCE
) -> list[IdentitySpec]:
    """Samples identities whose stacked body colours are pairwise at least min_distance apart."""
    if count < 1:
        raise ValidationError(f"count={count} must be >= 1")

    rng = np.random.default_rng(rng_seed)
    identities: list[IdentitySpec] = []
    attempts = 0

    while len(identities) < count:
        attempts += 1
        if attempts > 1000 * count:
            raise ValidationError(f"Cannot place {count} identities with colour distance {min_distance}")

        colors = rng.uniform(0.05, 0.95, size=(3, 3))
        if any(np.linalg.norm(colors.reshape(-1) - other.color_vector()) < min_distance for other in identities):
            continue

        geometry = (
            rng.uniform(*TORSO_WIDTH_RANGE),
            rng.uniform(*TORSO_HEIGHT_RANGE),
            rng.uniform(*HEAD_RADIUS_RANGE),
            rng.uniform(*LEG_WIDTH_RANGE),
        )
        identities.append(IdentitySpec(first_id + len(identities), tuple(map(tuple, colors)), geometry))

    return identities


def sample_illumination(illum_id: int, rng: np.random.Generator) -> IlluminationSpec:
    """Draws one illumination from the catalog distribution."""
    return IlluminationSpec(
        illum_id=illum_id,
        channel_gain=tuple(rng.uniform(*GAIN_RANGE, size=3)),
        channel_bias=tuple(rng.uniform(*BIAS_RANGE, size=3)),
        gamma=float(np.exp(rng.uniform(*np.log(GAMMA_RANGE)))),
        background_color=tuple(rng.uniform(*BACKGROUND_RANGE, size=3)),
    )


def sample_illuminations(count: int, rng_seed: int, first_id: int = 0) -> list[IlluminationSpec]:
    """Builds an illumination catalog S = {S_1 … S_N}."""
    if count < 1:
        raise ValidationError(f"count={count} must be >= 1")
    rng = np.random.default_rng(rng_seed)
    return [sample_illumination(first_id + i, rng) for i in range(count)]


def nearest_illumination(illum: IlluminationSpec, catalog: list[IlluminationSpec]) -> IlluminationSpec:
    """Catalog entry closest to illum in normalized parameter space."""
    if not catalog:
        raise ValidationError("Illumination catalog is empty")
    return min(catalog, key=illum.distance)


def neighbouring_illumination(
    illum: IlluminationSpec, illum_id: int, scale: float, rng: np.random.Generator
) -> IlluminationSpec:
    """
    A held-out illumination near illum: every parameter moves by a uniform step of at most scale
    times its sampling range (gamma in log space), then is clipped back into that range.
    """
    if not 0.0 < scale <= 1.0:
        raise ValidationError(f"scale={scale} must lie in (0, 1]")

    def step(values, bounds):
        moved = np.asarray(values) + rng.uniform(-scale, scale, size=len(values)) * _width(bounds)
        return tuple(float(v) for v in np.clip(moved, *bounds))

    log_gamma = step([math.log(illum.gamma)], np.log(GAMMA_RANGE))[0]
    return IlluminationSpec(
        illum_id=illum_id,
        channel_gain=step(illum.channel_gain, GAIN_RANGE),
        channel_bias=step(illum.channel_bias, BIAS_RANGE),
        gamma=math.exp(log_gamma),
        background_color=step(illum.background_color, BACKGROUND_RANGE),
    )

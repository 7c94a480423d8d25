"""
Loss terms of the translation objective and the soft matte used by the masked regularizer.

All image losses take N×3×H×W tensors in the [-1,1] convention and return scalar tensors,
so they can be minimized directly and checked with autograd.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch

from utils.config import GanMode
from utils.errors import NumericalError, ValidationError

EPS = 1e-7
DEFAULT_LAMBDAS = (10.0, 10.0, 5.0)


@dataclass(frozen=True)
class SoftMatte:
    """Centre-peaked Gaussian weights m[u, v] over the image plane."""

    m: np.ndarray
    center: tuple[float, float]
    sigmas: tuple[float, float]

    @property
    def shape(self) -> tuple[int, int]:
        return self.m.shape

    def value_at(self, u: float, v: float) -> float:
        cu, cv = self.center
        su, sv = self.sigmas
        return math.exp(-((u - cu) ** 2 / (2 * su**2) + (v - cv) ** 2 / (2 * sv**2)))

    def as_tensor(self, dtype=torch.float32) -> torch.Tensor:
        return torch.as_tensor(self.m, dtype=dtype)


def make_soft_matte(height: int, width: int, sigma_frac: tuple[float, float] = (1.0 / 3.0, 0.25)) -> SoftMatte:
    """Gaussian matte centred on pixel (H // 2, W // 2) with σu = frac_u·H and σv = frac_v·W."""
    if height < 8 or width < 8:
        raise ValidationError(f"Matte size {height}×{width} must be at least 8×8")
    if len(sigma_frac) != 2 or any(not s > 0 for s in sigma_frac):
        raise ValidationError(f"Matte sigmas {sigma_frac} must be positive")

    cu, cv = float(height // 2), float(width // 2)
    su, sv = sigma_frac[0] * height, sigma_frac[1] * width
    u = np.arange(height, dtype=np.float64)[:, None]
    v = np.arange(width, dtype=np.float64)[None, :]
    m = np.exp(-((u - cu) ** 2 / (2 * su**2) + (v - cv) ** 2 / (2 * sv**2)))
    return SoftMatte(m, (cu, cv), (su, sv))


def _check_finite_scores(*grids: torch.Tensor):
    for grid in grids:
        if torch.isnan(grid).any():
            raise NumericalError("Discriminator scores contain NaN")


def _check_shapes(*pairs):
    for a, b in pairs:
        if a.shape != b.shape:
            raise ValidationError(f"Shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")


def adversarial_loss(scores_real: torch.Tensor, scores_fake: torch.Tensor, eps: float = EPS) -> torch.Tensor:
    """E[log D(x)] + E[log(1 − D(G(s)))] over probability score grids clamped to [ε, 1 − ε]."""
    _check_finite_scores(scores_real, scores_fake)
    real = scores_real.clamp(eps, 1 - eps)
    fake = scores_fake.clamp(eps, 1 - eps)
    return torch.log(real).mean() + torch.log(1 - fake).mean()


def generator_adversarial_loss(fake_logits: torch.Tensor, mode: GanMode, eps: float = EPS) -> torch.Tensor:
    """The generator's side of the adversarial game, in the configured form."""
    _check_finite_scores(fake_logits)
    if mode == GanMode.LEAST_SQUARES:
        return ((fake_logits - 1) ** 2).mean()

    fake = torch.sigmoid(fake_logits).clamp(eps, 1 - eps)
    if mode == GanMode.MINIMAX:
        return torch.log(1 - fake).mean()
    # same fixed points as minimax, without the vanishing gradient early on
    return -torch.log(fake).mean()


def discriminator_loss(real_logits: torch.Tensor, fake_logits: torch.Tensor, mode: GanMode) -> torch.Tensor:
    """Quantity the discriminator minimizes; for the log forms this is −adversarial_loss."""
    if mode == GanMode.LEAST_SQUARES:
        _check_finite_scores(real_logits, fake_logits)
        return ((real_logits - 1) ** 2).mean() + (fake_logits**2).mean()
    return -adversarial_loss(torch.sigmoid(real_logits), torch.sigmoid(fake_logits))


def cycle_loss(s: torch.Tensor, fgs: torch.Tensor, x: torch.Tensor, gfx: torch.Tensor) -> torch.Tensor:
    """E‖F(G(s)) − s‖₁ + E‖G(F(x)) − x‖₁ with the norms as per-element means."""
    _check_shapes((s, fgs), (x, gfx))
    return (fgs - s).abs().mean() + (gfx - x).abs().mean()


def identity_mapping_loss(gx: torch.Tensor, x: torch.Tensor, fs: torch.Tensor, s: torch.Tensor) -> torch.Tensor:
    """E‖G(x) − x‖₁ + E‖F(s) − s‖₁."""
    _check_shapes((gx, x), (fs, s))
    return (gx - x).abs().mean() + (fs - s).abs().mean()


def ref_loss(gs: torch.Tensor, s: torch.Tensor) -> torch.Tensor:
    """E‖G(s) − s‖₁ over the whole image."""
    _check_shapes((gs, s))
    return (gs - s).abs().mean()


def masked_reg_loss(gs: torch.Tensor, s: torch.Tensor, matte: SoftMatte | torch.Tensor) -> torch.Tensor:
    """E‖(G(s) − s) ⊙ m‖₁; the H×W matte broadcasts over batch and channels."""
    _check_shapes((gs, s))
    m = matte.as_tensor(gs.dtype) if isinstance(matte, SoftMatte) else matte.to(gs.dtype)
    if tuple(m.shape) != tuple(gs.shape[-2:]):
        raise ValidationError(f"Matte shape {tuple(m.shape)} does not match image size {tuple(gs.shape[-2:])}")
    return ((gs - s).abs() * m).mean()


@dataclass
class LossComponents:
    """The five terms of the full objective for one generator step."""

    gan_g: torch.Tensor | float = 0.0
    gan_f: torch.Tensor | float = 0.0
    cycle: torch.Tensor | float = 0.0
    identity: torch.Tensor | float = 0.0
    mask: torch.Tensor | float = 0.0


def full_objective(components: LossComponents, lambdas: tuple[float, float, float] = DEFAULT_LAMBDAS):
    """L_GAN(G) + L_GAN(F) + λ1·L_cyc + λ2·L_id + λ3·L_Mask; with λ2 = λ3 = 0 this is the plain cycle objective."""
    lambda_cyc, lambda_id, lambda_mask = lambdas
    return (
        components.gan_g
        + components.gan_f
        + lambda_cyc * components.cycle
        + lambda_id * components.identity
        + lambda_mask * components.mask
    )

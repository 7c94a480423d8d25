"""
Generators (encoder, residual blocks, decoder, tanh output) and 3-layer patch discriminators
for unpaired translation of small person crops.
"""

import torch
import torch.nn as nn

TRANSLATION_CHECKPOINT_VERSION = 1

# keeps atanh finite for inputs at exactly ±1
_ATANH_LIMIT = 1.0 - 1e-4


def weights_init_normal(module: nn.Module) -> None:
    """N(0, 0.02) conv weights and zero biases."""
    if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
        nn.init.normal_(module.weight.data, 0.0, 0.02)
        if module.bias is not None:
            nn.init.constant_(module.bias.data, 0.0)


class ResidualBlock(nn.Module):
    def __init__(self, features: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.ReflectionPad2d(1),
            nn.Conv2d(features, features, 3),
            nn.InstanceNorm2d(features),
            nn.ReLU(inplace=True),
            nn.ReflectionPad2d(1),
            nn.Conv2d(features, features, 3),
            nn.InstanceNorm2d(features),
        )

    def forward(self, x):
        return x + self.block(x)


class Generator(nn.Module):
    """
    c7s1-f, d2f, d4f, R4f × n, u2f, uf, c7s1-3.

    With identity_init the network predicts a correction in tanh-preimage space,
    out = tanh(atanh(x) + body(x)), and the last convolution starts at zero, so an
    untrained generator returns its input.
    """

    def __init__(self, filters: int = 16, residual_blocks: int = 3, identity_init: bool = False):
        super().__init__()
        self.filters = filters
        self.residual_blocks = residual_blocks
        self.identity_init = identity_init

        layers = [
            nn.ReflectionPad2d(3),
            nn.Conv2d(3, filters, 7),
            nn.InstanceNorm2d(filters),
            nn.ReLU(inplace=True),
        ]
        features = filters
        for _ in range(2):
            layers += [
                nn.Conv2d(features, features * 2, 3, stride=2, padding=1),
                nn.InstanceNorm2d(features * 2),
                nn.ReLU(inplace=True),
            ]
            features *= 2

        layers += [ResidualBlock(features) for _ in range(residual_blocks)]

        for _ in range(2):
            layers += [
                nn.Upsample(scale_factor=2),
                nn.Conv2d(features, features // 2, 3, stride=1, padding=1),
                nn.InstanceNorm2d(features // 2),
                nn.ReLU(inplace=True),
            ]
            features //= 2

        self.output_conv = nn.Conv2d(features, 3, 7)
        layers += [nn.ReflectionPad2d(3), self.output_conv]
        self.body = nn.Sequential(*layers)

        self.apply(weights_init_normal)
        if identity_init:
            nn.init.zeros_(self.output_conv.weight)
            nn.init.zeros_(self.output_conv.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if self.identity_init:
            return torch.tanh(torch.atanh(x.clamp(-_ATANH_LIMIT, _ATANH_LIMIT)) + self.body(x))
        return torch.tanh(self.body(x))

    def hparams(self) -> dict:
        return {"filters": self.filters, "residual_blocks": self.residual_blocks, "identity_init": self.identity_init}


class PatchDiscriminator(nn.Module):
    """Three conv layers mapping an image to a grid of real/fake logits."""

    def __init__(self, filters: int = 16):
        super().__init__()
        self.filters = filters
        self.model = nn.Sequential(
            nn.Conv2d(3, filters, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(filters, filters * 2, 4, stride=2, padding=1),
            nn.InstanceNorm2d(filters * 2),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(filters * 2, 1, 3, padding=1),
        )
        self.apply(weights_init_normal)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.model(x)

    def hparams(self) -> dict:
        return {"filters": self.filters}

"""Small conv classifier predicting which illumination condition an image was rendered with."""

import torch
import torch.nn as nn

from models.reid_net import conv_block

ILLUM_CHECKPOINT_VERSION = 1


class IlluminationClassifier(nn.Module):
    """N-way illumination classifier 𝕃(·); class k corresponds to domain_ids[k]."""

    version = ILLUM_CHECKPOINT_VERSION

    def __init__(self, domain_ids: list[int], height: int = 64, width: int = 32, channels: tuple = (16, 32, 64)):
        super().__init__()
        self.domain_ids = [int(d) for d in domain_ids]
        self.height = height
        self.width = width
        self.channels = tuple(channels)
        self.history: dict = {}

        blocks = []
        in_channels = 3
        for out_channels in self.channels:
            blocks.append(conv_block(in_channels, out_channels))
            in_channels = out_channels
        # whole crops, background included: illumination acts on both
        self.features = nn.Sequential(*blocks, nn.AdaptiveAvgPool2d(1), nn.Flatten())
        self.head = nn.Linear(in_channels, len(self.domain_ids))

    @property
    def num_classes(self) -> int:
        return len(self.domain_ids)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.features(x))

    def hparams(self) -> dict:
        return {
            "domain_ids": list(self.domain_ids),
            "height": self.height,
            "width": self.width,
            "channels": list(self.channels),
        }

"""Re-identification network Φ: conv stack, D-dimensional embedding layer and identity classifier."""

import torch
import torch.nn as nn
import torch.nn.functional as F

REID_CHECKPOINT_VERSION = 1


def conv_block(in_channels: int, out_channels: int) -> nn.Sequential:
    """3×3 conv, batch norm, ReLU, then 2× downsampling."""
    return nn.Sequential(
        nn.Conv2d(in_channels, out_channels, 3, padding=1, bias=False),
        nn.BatchNorm2d(out_channels),
        nn.ReLU(inplace=True),
        nn.MaxPool2d(2),
    )


class FeatureExtractor(nn.Module):
    """Multi-class identity classifier whose embedding layer is the re-identification feature."""

    version = REID_CHECKPOINT_VERSION

    def __init__(
        self,
        num_classes: int,
        embedding_dim: int = 64,
        height: int = 64,
        width: int = 32,
        channels: tuple = (32, 64, 96, 128),
        label_map: dict[int, int] | None = None,
    ):
        super().__init__()
        self.num_classes = num_classes
        self.embedding_dim = embedding_dim
        self.height = height
        self.width = width
        self.channels = tuple(channels)
        # identity_id -> class index
        self.label_map = dict(label_map or {})
        self.history: dict = {}

        blocks = []
        in_channels = 3
        for out_channels in self.channels:
            blocks.append(conv_block(in_channels, out_channels))
            in_channels = out_channels
        self.conv_stack = nn.Sequential(*blocks, nn.AdaptiveAvgPool2d(1), nn.Flatten())
        self.embedding_layer = nn.Linear(in_channels, embedding_dim)
        self.classifier_head = nn.Linear(embedding_dim, num_classes)

    def embed(self, x: torch.Tensor) -> torch.Tensor:
        return self.embedding_layer(self.conv_stack(x))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.classifier_head(F.relu(self.embed(x)))

    def reset_classifier(self, num_classes: int, label_map: dict[int, int]) -> None:
        """Replaces the classifier head for a new label space; the rest of the network is kept."""
        self.num_classes = num_classes
        self.label_map = dict(label_map)
        self.classifier_head = nn.Linear(self.embedding_dim, num_classes)

    def hparams(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "embedding_dim": self.embedding_dim,
            "height": self.height,
            "width": self.width,
            "channels": list(self.channels),
        }

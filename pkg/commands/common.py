"""Helpers shared by the CLI handlers: config resolution, dataset arguments and JSON output."""

import argparse
import dataclasses
import logging
from pathlib import Path

from synth.manifest import DatasetManifest, load_manifests, merge_manifests
from utils.checkpoints import write_json
from utils.config import ExperimentConfig, TrainConfig, stage_seed, validate_config, with_seed
from utils.errors import ValidationError


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    --config file if given, defaults otherwise; --seed overrides the file. Commands registered with a
    default seed fall back to it when neither flag is given, the others require one of them.
    """
    if args.config:
        config = validate_config(args.config)
    elif args.seed is not None:
        config = ExperimentConfig(seed=args.seed)
    elif getattr(args, "default_seed", None) is not None:
        logging.info(f"{args.command} No --config or --seed given, using seed {args.default_seed}")
        config = ExperimentConfig(seed=args.default_seed)
    else:
        raise ValidationError(f"{args.command} needs --config or --seed")

    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return config


def train_config(config: ExperimentConfig, stage: str, args: argparse.Namespace) -> TrainConfig:
    """Stage optimizer settings with the derived stage seed and any --epochs/--lr/--batch-size override."""
    train = with_seed(getattr(config.train, stage), stage_seed(config, stage))
    overrides = {
        name: getattr(args, name)
        for name in ("epochs", "learning_rate", "batch_size")
        if getattr(args, name, None) is not None
    }
    return dataclasses.replace(train, **overrides)


def read_datasets(paths: str) -> list[DatasetManifest]:
    """Comma-separated dataset directories; each may also be a parent of several datasets."""
    manifests = []
    for path in filter(None, (p.strip() for p in paths.split(","))):
        manifests += load_manifests(path)
    return manifests


def read_dataset(path: str) -> DatasetManifest:
    """One dataset; several found under path are merged."""
    manifests = read_datasets(path)
    if len(manifests) == 1:
        return manifests[0]
    return merge_manifests(Path(path).name, manifests)


def require_out(args: argparse.Namespace) -> Path:
    if not args.out:
        raise ValidationError(f"{args.command} needs --out")
    return Path(args.out)


def write_output(args: argparse.Namespace, document: dict) -> Path:
    path = write_json(require_out(args), document)
    logging.info(f"{args.command} Wrote {path}")
    return path

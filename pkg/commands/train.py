"""Training commands for the re-identification, illumination and translation networks."""

import argparse
import logging

from commands.common import load_config, read_dataset, read_datasets, require_out, train_config
from services.illum_inference import save_illum, train_illum_classifier
from services.reid_training import finetune as finetune_model
from services.reid_training import load_reid, save_reid, train_joint
from services.translation import save_translation, train_translation
from utils.config import Ablation, GanMode
from utils.errors import ValidationError


def train_reid(args: argparse.Namespace) -> int:
    """Joint identity training of Φ on every dataset passed with --data."""
    config = load_config(args)
    out = require_out(args)
    model = train_joint(read_datasets(args.data), train_config(config, "reid", args), config.model.embedding_dim)
    save_reid(model, out)
    return 0


def train_illum(args: argparse.Namespace) -> int:
    """Illumination classifier over the synthetic domains under --data (one class per domain)."""
    config = load_config(args)
    out = require_out(args)
    classifier = train_illum_classifier(read_datasets(args.data), train_config(config, "illum", args))
    save_illum(classifier, out)
    return 0


def train_translate(args: argparse.Namespace) -> int:
    """Trains G: source → target and F back with the chosen regularizers."""
    config = load_config(args)
    out = require_out(args)
    translation = config.translation
    lambdas = tuple(args.lambdas) if args.lambdas else translation.lambdas
    if len(lambdas) != 3:
        raise ValidationError(f"--lambdas takes three values, got {len(lambdas)}")

    model = train_translation(
        read_dataset(args.source),
        read_dataset(args.target),
        lambdas=lambdas,
        config=train_config(config, "translation", args),
        ablation=Ablation(args.ablation) if args.ablation else translation.ablation,
        gan_mode=GanMode(args.gan_mode) if args.gan_mode else translation.gan_mode,
        model_config=config.model,
        buffer_size=translation.replay_buffer,
        matte_sigma_frac=translation.matte_sigma_frac,
        mask_budget=translation.mask_budget,
    )
    save_translation(model, out)
    final = model.history["final"]
    logging.info(f"train-translate Final cycle {final['cycle']:.4f}, masked {final['mask']:.4f}")
    return 0


def finetune(args: argparse.Namespace) -> int:
    """Fine-tunes a joint model on translated data; the input checkpoint is left untouched."""
    config = load_config(args)
    out = require_out(args)
    tuned = finetune_model(load_reid(args.ckpt), read_dataset(args.data), train_config(config, "finetune", args))
    save_reid(tuned, out)
    return 0

"""Evaluation commands: CMC on a probe/gallery pair, image statistics and the ablation battery."""

import argparse
import dataclasses
import logging

from commands.common import load_config, read_dataset, write_output
from services.ablation import run_ablation
from services.evaluation import cmc, image_stats, make_split, stats_distance
from services.reid_training import extract_features, load_reid
from utils.config import Metric, stage_seed


def evaluate(args: argparse.Namespace) -> int:
    """Single-shot CMC of a re-identification checkpoint with probes and gallery from two cameras."""
    config = load_config(args)
    model = load_reid(args.ckpt)
    metric = Metric(args.metric) if args.metric else config.evaluation.metric

    split = make_split(
        read_dataset(args.probe),
        read_dataset(args.gallery),
        stage_seed(config, "evaluate"),
        embed=lambda images: extract_features(model, images),
    )
    curve = cmc(split, metric)
    logging.info(f"evaluate Rank-1 {curve.rank1:.3f} over {curve.n_probes} probes ({metric})")
    write_output(args, {"metric": str(metric), **curve.to_dict()})
    return 0


def stats(args: argparse.Namespace) -> int:
    """Intensity and gradient histograms of a dataset, and the distance to --against if given."""
    data_stats = image_stats(read_dataset(args.data))
    document = data_stats.to_dict()
    if args.against:
        document["distance"] = stats_distance(data_stats, image_stats(read_dataset(args.against)))
        logging.info(f"stats Distance {document['distance']:.4f} between {args.data} and {args.against}")
    write_output(args, document)
    return 0


def ablation(args: argparse.Namespace) -> int:
    """Runs the condition × seed battery of the config and writes the report."""
    config = load_config(args)
    if args.root:
        config = dataclasses.replace(config, output_root=args.root)
    report = run_ablation(config, force=args.force, keep_going=args.keep_going)
    if args.out:
        write_output(args, report)
    return 0

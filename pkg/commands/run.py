"""Full pipeline command."""

import argparse
import dataclasses

from commands.common import load_config
from services.pipeline import run_pipeline


def run(args: argparse.Namespace) -> int:
    """Runs or resumes every stage in the experiment directory (--out overrides output_root)."""
    config = load_config(args)
    if args.out:
        config = dataclasses.replace(config, output_root=args.out)
    run_pipeline(config, force=args.force)
    return 0

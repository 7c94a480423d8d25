"""Illumination inference and translation commands."""

import argparse

from commands.common import read_dataset, require_out, write_output
from services.illum_inference import infer_domain, load_illum
from services.translation import load_translation, translate as translate_dataset
from synth.manifest import write_manifest
from utils.html_renderer import print_json


def infer_illum(args: argparse.Namespace) -> int:
    """Selects the synthetic domain closest to the target camera and writes selection.json."""
    classifier = load_illum(args.ckpt)
    selection = infer_domain(classifier, read_dataset(args.target).images())
    write_output(args, selection.to_dict())
    print_json(selection.to_dict())
    return 0


def translate(args: argparse.Namespace) -> int:
    """Writes G(s) for every source sample as a new dataset."""
    out = require_out(args)
    translated = translate_dataset(load_translation(args.ckpt), read_dataset(args.source))
    write_manifest(translated, out)
    return 0

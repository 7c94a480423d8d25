"""Main command-line entry point that registers all subcommands."""

import argparse
import logging
import os
import sys

from commands.data import gen_data, gen_target
from commands.evaluate import ablation, evaluate, stats
from commands.inference import infer_illum, translate
from commands.run import run
from commands.train import finetune, train_illum, train_reid, train_translate
from utils.config import Ablation, GanMode, Metric, configure_threads
from utils.errors import ReidAdaptException

# seed of the commands whose usual invocation carries no --seed (train-illum, finetune, evaluate)
DEFAULT_SEED = 0


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="experiment seed (overrides the config file)")
    common.add_argument("--out", help="output file or directory of the command")
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--force", action="store_true", help="recompute stages stored for another config")
    return common


def _training(parser: argparse.ArgumentParser):
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--lr", dest="learning_rate", type=float)
    parser.add_argument("--batch-size", type=int)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="reidadapt", description="Synthetic-to-real adaptation for person re-id")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler, help_text: str, default_seed: int | None = None) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        sub.set_defaults(handler=handler, default_seed=default_seed)
        return sub

    # Register dataset commands
    sub = add("gen-data", gen_data, "render the synthetic domains and their catalog")
    sub.add_argument("--identities", type=int)
    sub.add_argument("--illums", type=int)
    sub.add_argument("--per-id", type=int)
    sub.add_argument("--height", type=int)
    sub.add_argument("--width", type=int)

    sub = add("gen-target", gen_target, "render a held-out camera with the realness gap")
    sub.add_argument("--illum-spec", required=True)
    sub.add_argument("--gap-sigma", type=float)
    sub.add_argument("--catalog")
    sub.add_argument("--reuse-identities", action="store_true")
    sub.add_argument("--identities", type=int)
    sub.add_argument("--per-id", type=int)
    sub.add_argument("--height", type=int)
    sub.add_argument("--width", type=int)
    sub.add_argument("--no-texture", action="store_true")
    sub.add_argument("--no-blur", action="store_true")
    sub.add_argument("--name")

    # Register training commands
    sub = add("train-reid", train_reid, "joint identity training on real and synthetic datasets")
    sub.add_argument("--data", required=True, help="DIR[,DIR...]")
    _training(sub)

    sub = add("train-illum", train_illum, "illumination classifier over synthetic domains", DEFAULT_SEED)
    sub.add_argument("--data", required=True)
    _training(sub)

    sub = add("infer-illum", infer_illum, "select the closest synthetic domain for a target camera")
    sub.add_argument("--ckpt", required=True)
    sub.add_argument("--target", required=True)

    sub = add("train-translate", train_translate, "train the source-to-target translation")
    sub.add_argument("--source", required=True)
    sub.add_argument("--target", required=True)
    sub.add_argument("--ablation", choices=[a.value for a in Ablation])
    sub.add_argument("--gan-mode", choices=[m.value for m in GanMode])
    sub.add_argument("--lambdas", type=float, nargs="+")
    _training(sub)

    sub = add("translate", translate, "translate a synthetic dataset")
    sub.add_argument("--ckpt", required=True)
    sub.add_argument("--source", required=True)

    sub = add("finetune", finetune, "fine-tune a joint model on translated data", DEFAULT_SEED)
    sub.add_argument("--ckpt", required=True)
    sub.add_argument("--data", required=True)
    _training(sub)

    # Register evaluation commands
    sub = add("evaluate", evaluate, "single-shot CMC on a probe/gallery pair", DEFAULT_SEED)
    sub.add_argument("--ckpt", required=True)
    sub.add_argument("--probe", required=True)
    sub.add_argument("--gallery", required=True)
    sub.add_argument("--metric", choices=[m.value for m in Metric])

    sub = add("stats", stats, "image statistics of a dataset")
    sub.add_argument("--data", required=True)
    sub.add_argument("--against")

    sub = add("ablation", ablation, "condition × seed rank-1 battery")
    sub.add_argument("--root", help="experiment root (overrides output_root)")
    sub.add_argument("--keep-going", action="store_true", help="record failing conditions and continue")

    add("run", run, "run or resume the full pipeline")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.getenv("REIDADAPT_LOGLEVEL", "INFO").upper(), format="%(asctime)s %(levelname)s %(message)s"
    )
    configure_threads()

    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ReidAdaptException as e:
        logging.error(str(e))
        for note in getattr(e, "__notes__", []):
            logging.error(note)
        return e.exit_code
    except Exception:  # pylint: disable=broad-exception-caught
        logging.exception(f"{args.command} failed unexpectedly")
        return 1


if __name__ == "__main__":
    sys.exit(main())

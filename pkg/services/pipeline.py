"""
Three-step adaptation run inside one experiment directory.

Every stage writes its artifacts next to a stage.json holding the config hash it was computed
for. A rerun reuses stages whose hash matches, refuses stages computed for another config unless
forced, and the run ends with an atomically written run_manifest.json.
"""

import dataclasses
import logging
import os
import shutil
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from services.evaluation import CMCCurve, cmc, foreground_color_shift, image_stats, make_split, stats_distance
from services.illum_inference import infer_domain, load_illum, random_domain, save_illum, train_illum_classifier
from services.losses import make_soft_matte
from services.reports import render_run_report
from services.reid_training import extract_features, finetune, load_reid, save_reid, train_joint
from services.translation import load_translation, save_translation, train_translation, translate
from synth.benchmark import Benchmark, build_benchmark, read_benchmark, write_benchmark
from synth.generator import CATALOG_FILE
from synth.manifest import MANIFEST_FILE, DatasetManifest, merge_manifests, read_manifest, write_manifest
from utils.checkpoints import read_json, write_json
from utils.config import ExperimentConfig, SelectionMode, config_hash, stage_seed, with_seed
from utils.errors import PipelineStageError, StaleCheckpointError, ValidationError

STAGES = (
    "gen-data",
    "train-reid",
    "train-illum",
    "infer-illum",
    "train-translate",
    "translate",
    "finetune",
    "evaluate",
)
LOCK_FILE = ".lock"
STAGE_FILE = "stage.json"
RUN_MANIFEST_FILE = "run_manifest.json"
MODEL_FILE = "model.pt"
METRICS_FILE = "metrics.json"
SELECTION_FILE = "selection.json"


@dataclass
class StageRecord:
    stage: str
    directory: str
    config_hash: str
    artifacts: list[str]
    wall_time: float
    result: dict = field(default_factory=dict)
    reused: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class RunManifest:
    """Config snapshot, per-stage artifacts and wall times, selected domains and final metrics."""

    config: dict
    config_hash: str
    stages: dict[str, StageRecord]
    selections: dict[str, dict]
    metrics: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "stages": {label: record.to_dict() for label, record in self.stages.items()},
            "selections": self.selections,
            "metrics": self.metrics,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        return cls(
            data["config"],
            data["config_hash"],
            {label: StageRecord(**record) for label, record in data["stages"].items()},
            data["selections"],
            data["metrics"],
        )


@contextmanager
def experiment_lock(root: Path):
    """One pipeline per experiment directory."""
    root.mkdir(parents=True, exist_ok=True)
    path = root / LOCK_FILE
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as e:
        raise ValidationError(f"{root} is locked by another run (remove {path} if none is active)") from e
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield path
    finally:
        path.unlink(missing_ok=True)


class StageRunner:
    """Runs or resumes stages and keeps their records in execution order."""

    def __init__(self, force: bool = False):
        self.force = force
        self.records: dict[str, StageRecord] = {}

    def run(self, label: str, directory: Path, key: str, artifacts: list[str], build: Callable[[Path], dict | None]):
        record_path = directory / STAGE_FILE
        if record_path.exists():
            stored = read_json(record_path)
            complete = all((directory / a).exists() for a in artifacts)
            if stored.get("config_hash") == key and complete:
                logging.info(f"{label} Reusing {directory}")
                record = StageRecord(**stored, reused=True)
                self.records[label] = record
                return record
            if stored.get("config_hash") != key and not self.force:
                raise StaleCheckpointError(label, stored.get("config_hash", ""), key)

        if directory.exists():
            # artifacts of a previous build must not leak into this one
            logging.info(f"{label} Clearing {directory}")
            shutil.rmtree(directory)
        logging.info(f"{label} Running in {directory}")
        directory.mkdir(parents=True)
        start = time.perf_counter()
        try:
            result = build(directory) or {}
        except Exception as e:  # pylint: disable=broad-exception-caught
            raise PipelineStageError(label, e) from e

        record = StageRecord(label, str(directory), key, list(artifacts), time.perf_counter() - start, result)
        stored = record.to_dict()
        del stored["reused"]
        write_json(record_path, stored)
        logging.info(f"{label} Finished in {record.wall_time:.1f}s")
        self.records[label] = record
        return record


def camera_label(camera: int) -> str:
    return f"cam{camera}"


class Experiment:
    """
    The stages of one adaptation run. Shared stages (data, joint model, illumination classifier)
    live directly under root; stages that depend on the translation objective or the selection
    mode live under root/variant, so several variants can share one root.
    """

    def __init__(self, config: ExperimentConfig, root=None, variant: str = "", force: bool = False):
        self.config = config
        self.root = Path(root if root is not None else config.output_root)
        self.variant_root = self.root / variant if variant else self.root
        self.runner = StageRunner(force)
        self.keys: dict[str, str] = {}

    @cached_property
    def benchmark(self) -> Benchmark:
        return read_benchmark(self.root / "data")

    def _train(self, stage: str):
        return with_seed(getattr(self.config.train, stage), stage_seed(self.config, stage))

    def _source(self, domain_id: int) -> DatasetManifest:
        for manifest in self.benchmark.synthetic:
            if manifest.single_domain_id() == domain_id:
                return manifest
        raise ValidationError(f"No synthetic domain {domain_id}")

    def gen_data(self) -> StageRecord:
        key = config_hash("gen-data", self.config.data, self.config.seed)
        self.keys["gen-data"] = key

        def build(directory: Path):
            benchmark = build_benchmark(self.config.data, stage_seed(self.config, "gen-data"))
            write_benchmark(benchmark, directory)
            return {"synthetic": len(benchmark.synthetic), "real": len(benchmark.real), "target": len(benchmark.target)}

        return self.runner.run("gen-data", self.root / "data", key, [CATALOG_FILE, "synthetic", "target"], build)

    def train_reid(self, real_only: bool = False) -> StageRecord:
        """Joint training of Φ on R ∪ S, or on R alone for the real-only baseline."""
        label = "train-reid-real" if real_only else "train-reid"
        key = config_hash(label, self.keys["gen-data"], self.config.model.embedding_dim, self.config.train.reid)
        self.keys[label] = key

        def build(directory: Path):
            manifests = list(self.benchmark.real)
            if not real_only:
                manifests += self.benchmark.synthetic
            elif not manifests:
                raise ValidationError("The real-only baseline needs data.real_cameras >= 1")
            model = train_joint(
                manifests, with_seed(self.config.train.reid, stage_seed(self.config, label)), self.config.model.embedding_dim
            )
            save_reid(model, directory / MODEL_FILE)
            return {"final_accuracy": model.history["final_accuracy"]}

        return self.runner.run(label, self.root / label.removeprefix("train-"), key, [MODEL_FILE], build)

    def train_illum(self) -> StageRecord:
        key = config_hash("train-illum", self.keys["gen-data"], self.config.train.illum)
        self.keys["train-illum"] = key

        def build(directory: Path):
            classifier = train_illum_classifier(self.benchmark.synthetic, self._train("illum"))
            save_illum(classifier, directory / MODEL_FILE)
            return {
                "holdout_accuracy": classifier.history["holdout_accuracy"],
                "degenerate_pairs": classifier.history["degenerate_pairs"],
            }

        return self.runner.run("train-illum", self.root / "illum", key, [MODEL_FILE], build)

    def infer_illum(self, selection: SelectionMode = SelectionMode.INFERRED, draw: int = 0) -> dict[str, dict]:
        """Closest synthetic domain per target camera, or a seeded random domain for the random baseline."""
        selection = SelectionMode(selection)
        key = config_hash("infer-illum", self.keys["train-illum"], selection, draw)
        self.keys["infer-illum"] = key
        folder = "infer" if selection == SelectionMode.INFERRED else f"infer-random{draw}"

        def build(directory: Path):
            classifier = load_illum(self.root / "illum" / MODEL_FILE)
            selections = {}
            for camera, target in enumerate(self.benchmark.target):
                if selection == SelectionMode.INFERRED:
                    chosen = infer_domain(classifier, target.images())
                else:
                    rng = np.random.default_rng(stage_seed(self.config, "random-selection", 1000 * draw + camera))
                    chosen = random_domain(classifier, len(target), rng)
                    logging.info(f"infer-illum Randomly selected domain {chosen.domain_id} for {target.name}")
                selections[camera_label(camera)] = chosen.to_dict()
            write_json(directory / SELECTION_FILE, selections)
            return selections

        record = self.runner.run("infer-illum", self.root / folder, key, [SELECTION_FILE], build)
        return record.result

    def adapt_cameras(self, selections: dict[str, dict]) -> list[Path]:
        """Trains G on (S_k*, camera) and translates S_k* for every target camera; returns the translated dataset dirs."""
        translation = self.config.translation
        translated_dirs = []
        for camera, target in enumerate(self.benchmark.target):
            cam = camera_label(camera)
            domain_id = selections[cam]["domain_id"]
            train_label, translate_label = f"train-translate/{cam}", f"translate/{cam}"
            train_key = config_hash(
                train_label,
                self.keys["infer-illum"],
                domain_id,
                translation,
                self.config.model,
                self.config.train.translation,
            )
            model_dir = self.variant_root / "translation" / cam

            def train(directory: Path, target=target, domain_id=domain_id, train_label=train_label):
                model = train_translation(
                    self._source(domain_id),
                    target,
                    lambdas=translation.lambdas,
                    config=with_seed(self.config.train.translation, stage_seed(self.config, train_label)),
                    ablation=translation.ablation,
                    gan_mode=translation.gan_mode,
                    model_config=self.config.model,
                    buffer_size=translation.replay_buffer,
                    matte_sigma_frac=translation.matte_sigma_frac,
                    mask_budget=translation.mask_budget,
                )
                save_translation(model, directory / MODEL_FILE)
                return {"initial": model.history["initial"], "final": model.history["final"]}

            self.runner.run(train_label, model_dir, train_key, [MODEL_FILE], train)

            translate_key = config_hash(translate_label, train_key)
            self.keys[translate_label] = translate_key

            def run_translate(directory: Path, domain_id=domain_id, model_dir=model_dir):
                translated = translate(load_translation(model_dir / MODEL_FILE), self._source(domain_id))
                write_manifest(translated, directory)
                return {"samples": len(translated), "domain_id": translated.single_domain_id()}

            directory = self.variant_root / "translated" / cam
            self.runner.run(translate_label, directory, translate_key, [MANIFEST_FILE], run_translate)
            translated_dirs.append(directory)
        return translated_dirs

    def finetune(self, translated_dirs: list[Path]) -> StageRecord:
        """Fine-tunes the joint model on the union of the translated datasets."""
        translate_keys = [self.keys[f"translate/{camera_label(c)}"] for c in range(len(translated_dirs))]
        key = config_hash("finetune", self.keys["train-reid"], translate_keys, self.config.train.finetune)
        self.keys["finetune"] = key

        def build(directory: Path):
            translated = merge_manifests("translated", [read_manifest(d) for d in translated_dirs])
            model = finetune(load_reid(self.root / "reid" / MODEL_FILE), translated, self._train("finetune"))
            save_reid(model, directory / MODEL_FILE)
            return {"final_accuracy": model.history["final_accuracy"]}

        return self.runner.run("finetune", self.variant_root / "finetune", key, [MODEL_FILE], build)

    def rank(self, model_path: Path) -> CMCCurve:
        """CMC of a re-identification model on the probe/gallery cameras of the target."""
        evaluation = self.config.evaluation
        model = load_reid(model_path)
        split = make_split(
            self.benchmark.target[evaluation.probe_camera],
            self.benchmark.target[evaluation.gallery_camera],
            stage_seed(self.config, "evaluate"),
            embed=lambda images: extract_features(model, images),
        )
        return cmc(split, evaluation.metric)

    def evaluate(self, selections: dict[str, dict], translated_dirs: list[Path]) -> dict:
        """Baseline and adapted CMC, plus the image-statistics gap and colour shift per camera."""
        key = config_hash("evaluate", self.keys["finetune"], self.config.evaluation)
        self.keys["evaluate"] = key

        def build(directory: Path):
            baseline = self.rank(self.root / "reid" / MODEL_FILE)
            adapted = self.rank(self.variant_root / "finetune" / MODEL_FILE)
            matte = make_soft_matte(
                self.config.data.height, self.config.data.width, self.config.translation.matte_sigma_frac
            )
            cameras = {}
            for camera, target in enumerate(self.benchmark.target):
                cam = camera_label(camera)
                source = self._source(selections[cam]["domain_id"])
                translated = read_manifest(translated_dirs[camera])
                target_stats = image_stats(target)
                shift = foreground_color_shift(source, translated, matte)
                cameras[cam] = {
                    "stats_distance_synthetic": stats_distance(image_stats(source), target_stats),
                    "stats_distance_translated": stats_distance(image_stats(translated), target_stats),
                    "foreground_color_shift": float(shift.max()),
                    "foreground_color_shift_channels": shift.tolist(),
                }
            metrics = {
                "baseline_rank1": baseline.rank1,
                "adapted_rank1": adapted.rank1,
                "baseline": baseline.to_dict(),
                "adapted": adapted.to_dict(),
                "cameras": cameras,
            }
            write_json(directory / METRICS_FILE, metrics)
            logging.info(f"evaluate Rank-1 {baseline.rank1:.3f} without adaptation, {adapted.rank1:.3f} adapted")
            return {"baseline_rank1": baseline.rank1, "adapted_rank1": adapted.rank1}

        record = self.runner.run("evaluate", self.variant_root / "evaluate", key, [METRICS_FILE], build)
        return read_json(Path(record.directory) / METRICS_FILE)

    def run(self, selection: SelectionMode | None = None, draw: int = 0) -> RunManifest:
        self.gen_data()
        self.train_reid()
        self.train_illum()
        selections = self.infer_illum(selection or self.config.selection, draw)
        translated_dirs = self.adapt_cameras(selections)
        self.finetune(translated_dirs)
        metrics = self.evaluate(selections, translated_dirs)
        return RunManifest(
            self.config.to_dict(), config_hash(self.config), dict(self.runner.records), selections, metrics
        )


def run_pipeline(config: ExperimentConfig, force: bool = False) -> RunManifest:
    """gen-data → train-reid → train-illum → infer-illum → train-translate → translate → finetune → evaluate."""
    root = Path(config.output_root)
    with experiment_lock(root):
        manifest = Experiment(config, root, force=force).run()
        write_json(root / RUN_MANIFEST_FILE, manifest.to_dict())
        render_run_report(manifest, root)

    logging.info(
        f"run Finished: rank-1 {manifest.metrics['baseline_rank1']:.3f} → {manifest.metrics['adapted_rank1']:.3f}, "
        f"manifest at {root / RUN_MANIFEST_FILE}"
    )
    return manifest


def read_run_manifest(root) -> RunManifest:
    return RunManifest.from_dict(read_json(Path(root) / RUN_MANIFEST_FILE))

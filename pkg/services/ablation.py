"""
Ablation battery: rank-1 of every training condition over several seeds, plus the comparison of
inferred against randomly chosen synthetic domains.
"""

import dataclasses
import logging
import math
from pathlib import Path

import numpy as np

from services.pipeline import MODEL_FILE, Experiment, experiment_lock
from services.reports import render_ablation_report
from utils.checkpoints import write_json
from utils.config import Ablation, ExperimentConfig, SelectionMode
from utils.data_converter import rank1_table, records_to_dataframe
from utils.errors import ReidAdaptException, ValidationError

# conditions without translation evaluate the joint model directly
BASELINES = {"R": "reid-real", "R+S": "reid"}
TRANSLATION_CONDITIONS = {
    "CycleGan": Ablation.NONE,
    "CycleGan+L_id": Ablation.ID,
    "CycleGan+L_Ref": Ablation.REF,
    "Ours": Ablation.MASK_FULL,
}
CONDITIONS = tuple(BASELINES) + tuple(TRANSLATION_CONDITIONS)
RANDOM_ROW, MIN_ROW = "Random", "MIN"
ABLATION_DIR = "ablation"
REPORT_JSON = "report.json"


def _slug(condition: str) -> str:
    return condition.lower().replace("+", "-")


def _with_ablation(config: ExperimentConfig, ablation: Ablation) -> ExperimentConfig:
    return dataclasses.replace(config, translation=dataclasses.replace(config.translation, ablation=ablation))


def _adapted_record(condition: str, seed: int, manifest) -> dict:
    cameras = manifest.metrics["cameras"].values()
    return {
        "condition": condition,
        "seed": seed,
        "rank1": manifest.metrics["adapted_rank1"],
        "cmc": manifest.metrics["adapted"]["cmc"],
        "foreground_color_shift": float(np.mean([c["foreground_color_shift"] for c in cameras])),
        "stats_distance_translated": float(np.mean([c["stats_distance_translated"] for c in cameras])),
        "stats_distance_synthetic": float(np.mean([c["stats_distance_synthetic"] for c in cameras])),
    }


def run_condition(condition: str, config: ExperimentConfig, root: Path, force: bool = False) -> dict:
    """Trains and evaluates one condition for config.seed inside root; shared stages are reused across conditions."""
    if condition in BASELINES:
        experiment = Experiment(config, root, variant=_slug(condition), force=force)
        experiment.gen_data()
        experiment.train_reid(real_only=condition == "R")
        curve = experiment.rank(root / BASELINES[condition] / MODEL_FILE)
        return {"condition": condition, "seed": config.seed, "rank1": curve.rank1, "cmc": curve.to_dict()["cmc"]}

    if condition not in TRANSLATION_CONDITIONS:
        raise ValidationError(f"Unknown ablation condition '{condition}', expected one of {', '.join(CONDITIONS)}")
    experiment = Experiment(
        _with_ablation(config, TRANSLATION_CONDITIONS[condition]), root, variant=_slug(condition), force=force
    )
    return _adapted_record(condition, config.seed, experiment.run(SelectionMode.INFERRED))


def run_random_selection(config: ExperimentConfig, root: Path, force: bool = False) -> list[dict]:
    """The full objective with randomly chosen synthetic domains: mean and minimum over the draws."""
    config = _with_ablation(config, Ablation.MASK_FULL)
    draws = []
    for draw in range(config.ablation.random_draws):
        experiment = Experiment(config, root, variant=f"random{draw}", force=force)
        draws.append(experiment.run(SelectionMode.RANDOM, draw).metrics["adapted_rank1"])
        logging.info(f"ablation seed {config.seed} random draw {draw}: rank-1 {draws[-1]:.3f}")

    return [
        {"condition": RANDOM_ROW, "seed": config.seed, "rank1": float(np.mean(draws)), "draws": draws},
        {"condition": MIN_ROW, "seed": config.seed, "rank1": float(np.min(draws)), "draws": draws},
    ]


def _mean(summary: dict, condition: str) -> float:
    return summary.get(condition, {}).get("mean", math.nan)


def _trends(records: list[dict], summary: dict) -> dict:
    """Directional comparisons the battery is run for; NaN-safe when a condition is missing."""
    by_seed = {}
    for record in records:
        by_seed.setdefault(record["seed"], {})[record["condition"]] = record

    adapted_wins = sum(
        1 for seed in by_seed.values() if "Ours" in seed and "R+S" in seed and seed["Ours"]["rank1"] >= seed["R+S"]["rank1"]
    )
    shifts = {
        condition: float(np.mean([r["foreground_color_shift"] for r in records if r["condition"] == condition]))
        for condition in ("CycleGan", "Ours")
        if any(r["condition"] == condition for r in records)
    }
    return {
        "ours_ge_baseline": _mean(summary, "Ours") >= _mean(summary, "R+S"),
        "ours_beats_baseline_seeds": adapted_wins,
        "ours_ge_cyclegan": _mean(summary, "Ours") >= _mean(summary, "CycleGan"),
        "inferred_ge_random": _mean(summary, "Ours") >= _mean(summary, RANDOM_ROW),
        "foreground_color_shift": shifts,
    }


def _summarize(df, table) -> dict:
    """condition -> mean, standard deviation (None for a single seed) and per-seed rank-1."""
    if table is None:
        return {}
    summary = {}
    for condition, row in table.iterrows():
        rows = df[df["condition"] == condition]
        summary[condition] = {
            "mean": float(row["mean"]),
            "std": None if math.isnan(row["std"]) else float(row["std"]),
            "per_seed": {int(seed): float(value) for seed, value in zip(rows["seed"], rows["rank1"])},
        }
    return summary


def run_ablation(config: ExperimentConfig, force: bool = False, keep_going: bool = False) -> dict:
    """
    Runs every configured condition for every configured seed. A failing condition is tagged with its
    name and seed and re-raised, or recorded in the report and skipped when keep_going is set.
    """
    unknown = [c for c in config.ablation.conditions if c not in CONDITIONS]
    if unknown:
        raise ValidationError(f"Unknown ablation conditions {unknown}, expected a subset of {list(CONDITIONS)}")

    root = Path(config.output_root) / ABLATION_DIR
    records, failures = [], []

    with experiment_lock(root):
        for seed in config.ablation.seeds:
            seed_config = dataclasses.replace(config, seed=seed)
            seed_root = root / f"seed{seed}"
            tasks = [(c, lambda c=c: [run_condition(c, seed_config, seed_root, force)]) for c in config.ablation.conditions]
            if "Ours" in config.ablation.conditions and config.ablation.random_draws > 0:
                tasks.append((RANDOM_ROW, lambda: run_random_selection(seed_config, seed_root, force)))

            for condition, task in tasks:
                logging.info(f"ablation {condition} seed {seed}")
                try:
                    records += task()
                except ReidAdaptException as e:
                    e.add_note(f"ablation condition {condition}, seed {seed}")
                    logging.error(f"ablation {condition} seed {seed} failed: {e}")
                    if not keep_going:
                        raise
                    failures.append({"condition": condition, "seed": seed, "error": str(e)})

        df = records_to_dataframe([{k: v for k, v in r.items() if k in ("condition", "seed", "rank1")} for r in records])
        order = list(config.ablation.conditions) + [RANDOM_ROW, MIN_ROW]
        table = rank1_table(df, order) if len(df) else None
        summary = _summarize(df, table)

        report = {
            "seeds": list(config.ablation.seeds),
            "metric": str(config.evaluation.metric),
            "conditions": order,
            "records": records,
            "summary": summary,
            "failures": failures,
            "trends": _trends(records, summary),
        }
        write_json(root / REPORT_JSON, report)
        if table is not None:
            render_ablation_report(report, table, root)

    for condition, values in summary.items():
        logging.info(f"ablation {condition}: mean rank-1 {values['mean']:.3f}")
    return report

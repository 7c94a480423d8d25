"""Utility functions for data conversion and processing."""

import pandas as pd


def records_to_dataframe(records: list[dict]) -> pd.DataFrame:
    """Convert ablation records ({condition, seed, rank1, ...}) to a DataFrame sorted by condition and seed."""
    if not records:
        return pd.DataFrame(columns=["condition", "seed", "rank1"])
    df = pd.DataFrame.from_records(records)
    return df.sort_values(["condition", "seed"], kind="stable").reset_index(drop=True)


def rank1_table(df: pd.DataFrame, conditions: list[str]) -> pd.DataFrame:
    """Per-condition mean and standard deviation of rank-1 plus one column per seed, in the given condition order."""
    per_seed = df.pivot_table(index="condition", columns="seed", values="rank1", aggfunc="mean")
    per_seed.columns = [f"seed {c}" for c in per_seed.columns]
    summary = df.groupby("condition")["rank1"].agg(["mean", "std"])
    table = summary.join(per_seed)
    return table.reindex([c for c in conditions if c in table.index])


def cmc_to_dataframe(curves: dict[str, list[float]]) -> pd.DataFrame:
    """Convert named CMC curves to a long DataFrame with rank, accuracy and curve columns."""
    frames = [
        pd.DataFrame({"rank": range(1, len(acc) + 1), "accuracy": acc, "curve": name}) for name, acc in curves.items()
    ]
    if not frames:
        return pd.DataFrame(columns=["rank", "accuracy", "curve"])
    return pd.concat(frames, ignore_index=True)

"""
Sweep aggregation with pandas: one row per n.
"""

import logging
from typing import Optional, List

import numpy as np
import pandas as pd

from errors import Stage

logger = logging.getLogger("onlineham.summary")

SUMMARY_COLUMNS = [
    "n", "trials", "success_rate",
    *[f"stage_{s.value}" for s in Stage],
    "mean_m_star_ratio", "q10_m_star_ratio", "q50_m_star_ratio", "q90_m_star_ratio",
    "window_hit_rate", "mean_cycles_in_factor", "median_cycles_in_factor", "cycle_bound_rate",
    "mean_blue_seen", "mean_blue_eliminated", "mean_blue_fiveinout_at_B", "typical_rate",
    "baseline_success_rate", "baseline_m_star_success_rate",
]

BASELINE_COLUMNS = {"horizon": "baseline_success_rate", "m_star": "baseline_m_star_success_rate"}


def _rate(series: pd.Series) -> float:
    values = series.dropna()
    return float(values.astype(bool).mean()) if len(values) else float("nan")


def _mean(series: pd.Series) -> float:
    values = pd.to_numeric(series, errors="coerce").dropna()
    return float(values.mean()) if len(values) else float("nan")


def summarize(trials: pd.DataFrame, baseline: Optional[pd.DataFrame] = None) -> pd.DataFrame:
    """
    Aggregate trial rows per n.

    Args:
        trials: One row per pipeline trial (TrialResult.to_dict flattened)
        baseline: Optional rows of baseline trials; baseline_at splits them into
            the same-horizon rate and the rate at m*

    Returns:
        DataFrame with SUMMARY_COLUMNS, sorted by n (empty when there are no trials)
    """
    if trials is None or trials.empty:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)

    rows: List[dict] = []
    for n, group in trials.groupby("n", sort=True):
        ratio = pd.to_numeric(group["m_star_ratio"], errors="coerce").dropna()
        cycles = pd.to_numeric(group["cycles_in_factor"], errors="coerce").dropna()
        stages = group["stage"].value_counts()
        row = {
            "n": int(n),
            "trials": int(len(group)),
            "success_rate": _rate(group["success"]),
            "mean_m_star_ratio": float(ratio.mean()) if len(ratio) else float("nan"),
            "window_hit_rate": _rate(group["in_window"]),
            "mean_cycles_in_factor": float(cycles.mean()) if len(cycles) else float("nan"),
            "median_cycles_in_factor": float(cycles.median()) if len(cycles) else float("nan"),
            "cycle_bound_rate": _rate(group["cycle_bound_ok"]),
            "mean_blue_seen": _mean(group["blue_seen"]),
            "mean_blue_eliminated": _mean(group["blue_eliminated"]),
            "mean_blue_fiveinout_at_B": _mean(group["blue_fiveinout_at_B"]),
            "typical_rate": _rate(group["typical"]),
            "baseline_success_rate": float("nan"),
            "baseline_m_star_success_rate": float("nan"),
        }
        for q in (10, 50, 90):
            row[f"q{q}_m_star_ratio"] = float(np.percentile(ratio, q)) if len(ratio) else float("nan")
        for s in Stage:
            row[f"stage_{s.value}"] = int(stages.get(s.value, 0))
        if baseline is not None and not baseline.empty:
            base = baseline[baseline["n"] == n]
            at = base["baseline_at"] if "baseline_at" in base else pd.Series("horizon", index=base.index)
            for prefix, column in BASELINE_COLUMNS.items():
                picked = base[at == prefix]
                if len(picked):
                    row[column] = _rate(picked["success"])
        rows.append(row)

    table = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    logger.info(f"summarized {len(trials)} trials over {len(table)} values of n")
    return table

"""Deterministic serialization of run reports and campaign summaries.

JSON files depend only on the inputs (wall-clock and other timing live in
logs, never in the files), so identical config and seed give byte-identical
output.  CSV emitters produce one file per figure analogue with fixed,
documented columns.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path

import numpy as np

from .orchestrate import CampaignSummary, RunReport
from .scenario import ScenarioConfig


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def report_to_dict(report: RunReport) -> dict:
    doc = dataclasses.asdict(report)
    doc.pop("wall_clock")  # timing is logged, never serialized
    return _jsonable(doc)


def save_report(path, report: RunReport) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n")


def campaign_to_dict(summary: CampaignSummary) -> dict:
    cfg = dataclasses.asdict(summary.config)
    return _jsonable(
        {
            "config": cfg,
            "algorithms": summary.algorithms,
            "n_realizations": summary.n_realizations,
            "base_seed": summary.base_seed,
            "mean_utility": summary.mean_utility,
            "std_utility": summary.std_utility,
            "utilities": {a: u for a, u in summary.utilities.items()},
            "tier_stats": summary.tier_stats,
            "outer_iterations": summary.outer_iterations,
            "stopped_by": summary.stopped_by,
            "cdf_grid": summary.cdf_grid,
            "cdfs": summary.cdfs,
            "gain_levels": summary.gain_levels,
            "rate_gains": summary.rate_gains,
            "rates": {a: r for a, r in summary.rates.items()},
            "flags": summary.flags,
        }
    )


def save_campaign(path, summary: CampaignSummary) -> None:
    Path(path).write_text(json.dumps(campaign_to_dict(summary), indent=2, sort_keys=True) + "\n")


def load_campaign_dict(path) -> dict:
    return json.loads(Path(path).read_text())


def emit_campaign_csvs(doc: dict, out_dir) -> list:
    """Write the plot-data CSVs for a campaign document; returns the paths.

    Files and columns:
      utilities.csv        algo, mean_utility, std_utility
      cdf_<algo>.csv       rate_bps, fraction
      gains_<algo>.csv     p, gain
      tier_counts.csv      algo, tier, mean_users
      tier_powers.csv      algo, tier, mean_power_w
      convergence.csv      algo, seed_offset, outer_iterations, stopped_by
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def _write(name, header, rows):
        path = out / name
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        written.append(path)

    algos = doc["algorithms"]
    _write(
        "utilities.csv",
        ["algo", "mean_utility", "std_utility"],
        [[a, doc["mean_utility"][a], doc["std_utility"][a]] for a in algos],
    )
    for a in algos:
        _write(
            f"cdf_{a.replace('+', '_')}.csv",
            ["rate_bps", "fraction"],
            list(zip(doc["cdf_grid"], doc["cdfs"][a])),
        )
    for a, gains in doc["rate_gains"].items():
        _write(
            f"gains_{a.replace('+', '_')}.csv",
            ["p", "gain"],
            list(zip(doc["gain_levels"], gains)),
        )
    _write(
        "tier_counts.csv",
        ["algo", "tier", "mean_users"],
        [
            [a, tier, stats["mean_users"]]
            for a in algos
            for tier, stats in sorted(doc["tier_stats"][a].items())
        ],
    )
    _write(
        "tier_powers.csv",
        ["algo", "tier", "mean_power_w"],
        [
            [a, tier, stats["mean_power_w"]]
            for a in algos
            for tier, stats in sorted(doc["tier_stats"][a].items())
        ],
    )
    _write(
        "convergence.csv",
        ["algo", "seed_offset", "outer_iterations", "stopped_by"],
        [
            [a, k, doc["outer_iterations"][a][k], doc["stopped_by"][a][k]]
            for a in algos
            for k in range(len(doc["outer_iterations"][a]))
        ],
    )
    return written

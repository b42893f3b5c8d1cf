# utils.py - Utility functions for seeding, serialization and run bookkeeping
"""
Utility functions shared by the pipeline modules.
Provides split RNG streams, JSON / JSON-lines file helpers and the sweep registry.
"""

import os
import json
import math
import datetime
import logging
from typing import Dict, Any, Optional, List, Iterable, Iterator

import numpy as np

from config import RNG_STREAMS, PATHS

logger = logging.getLogger("onlineham.utils")


def rng_stream(seed: int, purpose: str) -> np.random.Generator:
    """
    Create the random generator for one purpose of one trial.

    Streams for different purposes are statistically independent, so changing
    how many numbers one stage draws never shifts another stage.

    Args:
        seed: 64-bit trial seed
        purpose: Key of RNG_STREAMS ("process", "orient", ...)

    Returns:
        A PCG64-backed numpy Generator
    """
    if purpose not in RNG_STREAMS:
        raise KeyError(f"Unknown RNG purpose: {purpose}")
    seq = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                                 spawn_key=(RNG_STREAMS[purpose],))
    return np.random.Generator(np.random.PCG64(seq))


def trial_seeds(base_seed: int, n: int, trials: int) -> List[int]:
    """
    Derive the 64-bit seeds of a sweep's trials at one n.

    Seeds depend only on (base_seed, n, trial index), never on scheduling.
    """
    seeds = []
    for k in range(trials):
        seq = np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, n, k])
        seeds.append(int(seq.generate_state(1, np.uint64)[0]))
    return seeds


def ln(x: float) -> float:
    """Natural log, 0 for x <= 0."""
    return math.log(x) if x > 0 else 0.0


def lnln(n: int) -> float:
    """ln ln n, clamped to 0 where it is undefined or negative."""
    inner = ln(n)
    return math.log(inner) if inner > 1 else 0.0


def hitting_time_center(n: int) -> float:
    """The asymptotic center 1/2 n ln n + 1/2 n ln ln n of the stopping time."""
    return 0.5 * n * ln(n) + 0.5 * n * lnln(n)


def hitting_time_mean(n: int) -> float:
    """
    Finite-n mean of the stopping time.

    The number of vertices of degree below 2 is about n e^-x (1 + x) at
    x = 2m/n and its limit law is Gumbel, so the mean sits at
    x = ln n + ln(1 + ln n + ln ln n) + euler_gamma. The center keeps only
    ln n + ln ln n and runs a few percent low at practical n.
    """
    if n < 3:
        return hitting_time_center(n)
    return 0.5 * n * (ln(n) + math.log(1.0 + ln(n) + lnln(n)) + float(np.euler_gamma))


def write_jsonl(path: str, records: Iterable[Dict[str, Any]]) -> int:
    """
    Write records as JSON-lines.

    Args:
        path: Output file path
        records: Iterable of JSON-serializable dicts

    Returns:
        Number of records written
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
            f.write("\n")
            count += 1
    return count


def read_jsonl(path: str) -> Iterator[Dict[str, Any]]:
    """Yield the records of a JSON-lines file, skipping blank lines."""
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_json(path: str, payload: Any) -> str:
    """Write a JSON document with stable key order and return its path."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
    return path


def get_sweep_registry(out_dir: str) -> List[Dict[str, Any]]:
    """
    Get the sweep registry of an output directory.

    Returns:
        List of sweep entries (empty if none or unreadable)
    """
    registry_file = os.path.join(out_dir, PATHS["registry_file"])

    if os.path.exists(registry_file):
        try:
            with open(registry_file, "r", encoding="utf-8") as f:
                return json.load(f)
        except Exception as e:
            logger.error(f"Error loading sweep registry: {e}")
            return []
    return []


def add_to_sweep_registry(out_dir: str, sweep_info: Dict[str, Any]) -> Optional[Dict[str, Any]]:
    """
    Add a finished sweep to the registry.

    Args:
        out_dir: Sweep output directory
        sweep_info: Parameters and output files of the sweep

    Returns:
        Registry entry dict or None if the registry could not be written
    """
    try:
        registry_file = os.path.join(out_dir, PATHS["registry_file"])
        os.makedirs(out_dir, exist_ok=True)

        registry = get_sweep_registry(out_dir)

        entry = dict(sweep_info)
        entry["sweep_id"] = f"sweep_{len(registry) + 1:04d}"
        entry["created"] = datetime.datetime.now().isoformat()
        registry.append(entry)

        with open(registry_file, "w", encoding="utf-8") as f:
            json.dump(registry, f, indent=2)

        return entry

    except Exception as e:
        logger.error(f"Error updating sweep registry: {e}")
        return None

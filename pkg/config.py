"""
Configuration module for onlineham.
Contains all configuration constants, presets and logging setup.
"""

import os
import logging
from typing import Dict, Any

import colorlog
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Application Configuration
APP_CONFIG = {
    "name": "onlineham",
    "description": "On-line edge orientation and directed Hamilton cycle experiments",
}

# Orientation presets. "paper" uses the literal constants, "desk" the
# constants that make saturation happen at n in the thousands.
PRESETS = {
    "paper": {
        "step1_multiplier": 2.0,       # step1_len = ceil(c1 * n * max(ln ln n, 0))
        "step1_floor": 0.0,
        "sat_threshold": 12,
        "step2_multiplier": None,      # horizon is m* itself
    },
    "desk": {
        "step1_multiplier": 24.0,      # step1_len = ceil(c1 * n * L0)
        "step1_floor": 1.0,            # L0
        "sat_threshold": 12,
        "step2_multiplier": 0.5,       # horizon >= step1_len + ceil(c2 * n * ln n)
    },
}

# Pipeline Configuration
PIPELINE_CONFIG = {
    "out_size": 5,                 # |OUT(v)| = |IN(v)| for saturated and blossomed vertices
    "min_sat_threshold_full": 12,  # needed when out_size == 5 (6 + 6 slots, one slack)
    "cycle_bound_factor": 2.0,     # factor must have <= 2 ln n cycles
    "saturation_numerator": 9,     # every cycle needs ceil(9/10 |C|) vertices of A-hat
    "saturation_denominator": 10,
    "strict_quality": True,
    "matching_retries": 1,
}

# Rotation-extension budgets
MERGE_CONFIG = {
    "rotations_per_n": 50,         # max rotations per closure attempt = 50 * n
    "max_restarts": 3,
    "validate_each_step": False,   # run the cover validator after every mutation
}

# Harness Configuration
HARNESS_CONFIG = {
    "default_mode": "graph",
    "default_preset": "desk",
    "default_seed": 20240101,
    "default_format": "csv",
    "oracle_max_n": 12,
    "oracle_hard_limit": 20,
    "record_timing": True,
    "csv_columns": [
        "n", "seed", "mode", "preset", "m_star", "stage", "success",
        "cycles_in_factor", "A", "B1", "B2", "blue_seen", "blue_eliminated", "ms_total",
    ],
}

# Purpose codes for the split RNG streams
RNG_STREAMS = {
    "process": 0,
    "coupling": 1,
    "orient": 2,
    "matching": 3,
    "merge": 4,
    "baseline": 5,
}

# File Paths
PATHS = {
    "out_dir": "results",
    "trials_csv": "trials.csv",
    "trials_jsonl": "trials.jsonl",
    "summary_json": "summary.json",
    "summary_csv": "summary.csv",
    "registry_file": "sweep_registry.json",
}

# Logging Configuration
LOGGING_CONFIG = {
    "level": "INFO",
    "format": "%(log_color)s%(asctime)s - %(name)s - %(levelname)s%(reset)s - %(message)s",
    "logger_name": "onlineham",
    "log_colors": {
        "DEBUG": "cyan",
        "INFO": "green",
        "WARNING": "yellow",
        "ERROR": "red",
        "CRITICAL": "bold_red",
    },
}


class ConfigError(ValueError):
    """Raised when a run configuration is inconsistent."""


def get_log_level() -> str:
    """Get the log level from environment variables."""
    return os.getenv("ONLINEHAM_LOG_LEVEL", LOGGING_CONFIG["level"]).upper()


def get_default_out_dir() -> str:
    """Get the default output directory for sweeps."""
    return os.getenv("ONLINEHAM_OUT_DIR", PATHS["out_dir"])


def get_default_jobs() -> int:
    """Get the default worker pool size."""
    raw = os.getenv("ONLINEHAM_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def get_preset(name: str) -> Dict[str, Any]:
    """
    Get a copy of a named orientation preset.

    Args:
        name: Preset name ("paper" or "desk")

    Returns:
        Dict with the preset constants
    """
    if name not in PRESETS:
        raise ConfigError(f"Unknown preset: {name!r} (expected one of {sorted(PRESETS)})")
    return dict(PRESETS[name])


def setup_logging(level: str = None) -> logging.Logger:
    """
    Install a colored console handler on the project logger.

    Calling it again only updates the level.

    Args:
        level: Log level name; defaults to the environment / LOGGING_CONFIG value

    Returns:
        The project root logger
    """
    logger = logging.getLogger(LOGGING_CONFIG["logger_name"])
    logger.setLevel(getattr(logging, (level or get_log_level()).upper(), logging.INFO))

    if not any(getattr(h, "_onlineham", False) for h in logger.handlers):
        handler = colorlog.StreamHandler()
        handler.setFormatter(colorlog.ColoredFormatter(
            LOGGING_CONFIG["format"],
            log_colors=LOGGING_CONFIG["log_colors"],
        ))
        handler._onlineham = True
        logger.addHandler(handler)
        logger.propagate = False

    return logger


def validate_config() -> bool:
    """Validate that the presets are internally consistent."""
    out_size = PIPELINE_CONFIG["out_size"]

    for name, preset in PRESETS.items():
        sat = preset["sat_threshold"]
        if sat < 2 * out_size:
            logging.getLogger("onlineham.config").warning(
                f"Preset {name}: sat_threshold {sat} < 2 * out_size {out_size}")
            return False
        if out_size == 5 and sat < PIPELINE_CONFIG["min_sat_threshold_full"]:
            return False
        if name == "desk" and preset["step1_multiplier"] * preset["step1_floor"] < 2 * sat:
            return False

    return True

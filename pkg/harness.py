#!/usr/bin/env python3
"""
Experiment runner and CLI.

A trial runs process -> orient -> classify -> fiveinout -> factor ->
compress -> merge -> verify and records where it stopped. Failures are
data: run_trial never raises. Only configuration and I/O errors leave
run_sweep, and they become a nonzero exit code in main().
"""

import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Dict, Any, Optional, List, Tuple

import pandas as pd

from config import (HARNESS_CONFIG, PIPELINE_CONFIG, PATHS, ConfigError, setup_logging,
                    get_default_out_dir, get_default_jobs, validate_config)
from classify import classify_vertices, typicality
from compress import compress_factor, decompress_cycle
from errors import Stage, Failure, PipelineError, ClassificationError
from factor import (OneFactor, randomized_perfect_matching, factor_quality, require_quality)
from fiveinout import build_five_in_out, build_bip, forbidden_arcs, blue_diagnostics
from merge import PoolEdge, build_pool, merge_factor
from oracle import Digraph, held_karp, verify_cycle
from orient import OrientedEdge, Rule, orient_events
from process import ProcessConfig, EdgeStream, EdgeEvent, UniformBuffer, run_until_min_degree_2
from summary import summarize
from utils import (rng_stream, trial_seeds, hitting_time_center, lnln,
                   write_jsonl, write_json, add_to_sweep_registry)

logger = logging.getLogger("onlineham.harness")


@dataclass(frozen=True)
class PipelineConfig:
    """A ProcessConfig plus the knobs of the later stages."""
    process: ProcessConfig
    out_size: int = PIPELINE_CONFIG["out_size"]
    oracle_max_n: int = HARNESS_CONFIG["oracle_max_n"]
    record_timing: bool = HARNESS_CONFIG["record_timing"]
    strict_quality: bool = PIPELINE_CONFIG["strict_quality"]
    matching_retries: int = PIPELINE_CONFIG["matching_retries"]
    # c1 override as given, so other n can be rebuilt with it
    step1_multiplier: Optional[float] = None
    # directory for per-trial FIVEINOUT, factor and compression dumps
    dump_dir: Optional[str] = None

    @classmethod
    def build(cls, n: int, seed: int, mode: str = HARNESS_CONFIG["default_mode"],
              preset: str = HARNESS_CONFIG["default_preset"], sat_threshold: Optional[int] = None,
              step1_multiplier: Optional[float] = None, step2_multiplier: Optional[float] = None,
              out_size: Optional[int] = None, oracle_max_n: Optional[int] = None,
              record_timing: Optional[bool] = None, dump_dir: Optional[str] = None) -> "PipelineConfig":
        """
        Build and validate a trial configuration.

        Raises:
            ConfigError: invalid combination of values
        """
        if n < 3:
            raise ConfigError(f"trials need n >= 3, got {n}")
        out_size = out_size or PIPELINE_CONFIG["out_size"]
        process = ProcessConfig.from_preset(n, mode, seed, preset, sat_threshold,
                                            step1_multiplier, step2_multiplier, out_size)
        oracle_max_n = HARNESS_CONFIG["oracle_max_n"] if oracle_max_n is None else oracle_max_n
        if oracle_max_n > HARNESS_CONFIG["oracle_hard_limit"]:
            raise ConfigError(f"oracle_max_n {oracle_max_n} above the hard limit "
                              f"{HARNESS_CONFIG['oracle_hard_limit']}")
        timing = HARNESS_CONFIG["record_timing"] if record_timing is None else record_timing
        return cls(process, out_size, oracle_max_n, timing, step1_multiplier=step1_multiplier, dump_dir=dump_dir)


@dataclass
class TrialResult:
    n: int
    seed: int
    mode: str
    preset: str
    kind: str = "alg"
    m_star: Optional[int] = None
    horizon: Optional[int] = None
    m_star_ratio: Optional[float] = None
    in_window: Optional[bool] = None
    stage: str = Stage.PROCESS.value
    success: bool = False
    failure: str = Failure.NONE.value
    error: Optional[str] = None
    details: Dict[str, Any] = field(default_factory=dict)
    cycle: Optional[List[int]] = None
    typicality: Optional[Dict[str, Any]] = None
    typical: Optional[bool] = None
    A: Optional[int] = None
    B1: Optional[int] = None
    B2: Optional[int] = None
    cycles_in_factor: Optional[int] = None
    cycle_bound_ok: Optional[bool] = None
    pool_size: Optional[int] = None
    rotations: Optional[int] = None
    blue_seen: Optional[int] = None
    blue_in_factor: Optional[int] = None
    blue_eliminated: Optional[int] = None
    blue_fiveinout: Optional[int] = None
    blue_fiveinout_at_B: Optional[int] = None
    blue_multi_vertices: Optional[int] = None
    merge: Dict[str, int] = field(default_factory=dict)
    decided_by: Optional[str] = None
    # "m_star" or "horizon" for baseline trials
    baseline_at: Optional[str] = None
    timings: Dict[str, float] = field(default_factory=dict)
    ms_total: Optional[float] = None

    def to_dict(self, record_timing: bool = True) -> Dict[str, Any]:
        payload = asdict(self)
        if not record_timing:
            payload.pop("timings")
            payload.pop("ms_total")
        return payload

    def to_json(self, record_timing: bool = True) -> str:
        return json.dumps(self.to_dict(record_timing), sort_keys=True, separators=(",", ":"))


class _StageClock:
    """Wall-clock per stage, in milliseconds."""

    def __init__(self, result: TrialResult, enabled: bool):
        self.result = result
        self.enabled = enabled
        self._start = time.perf_counter()
        self._mark = self._start
        self.stage = Stage.PROCESS

    def enter(self, stage: Stage) -> None:
        now = time.perf_counter()
        if self.enabled:
            self.result.timings[self.stage.value] = round((now - self._mark) * 1000.0, 3)
        self._mark = now
        self.stage = stage
        self.result.stage = stage.value

    def close(self) -> None:
        if self.enabled:
            now = time.perf_counter()
            self.result.timings[self.stage.value] = round((now - self._mark) * 1000.0, 3)
            self.result.ms_total = round((now - self._start) * 1000.0, 3)


def _stopping_window(n: int, m_star: int) -> Tuple[float, Optional[bool]]:
    center = hitting_time_center(n)
    ratio = m_star / center if center > 0 else float("nan")
    inner = lnln(n)
    if inner <= 1:
        return ratio, None
    spread = n * math.log(inner)
    return ratio, center - spread <= m_star <= center + spread


def _run_process(config: PipelineConfig, result: TrialResult) -> Tuple[List[EdgeEvent], int]:
    pc = config.process
    stream = EdgeStream(pc)
    events, m_star = run_until_min_degree_2(stream, min_length=pc.horizon_floor())
    result.m_star = m_star
    result.horizon = len(events)
    result.blue_seen = stream.state.blue_count
    result.m_star_ratio, result.in_window = _stopping_window(pc.n, m_star)
    return events, m_star


def run_trial(config: PipelineConfig) -> TrialResult:
    """
    Run the full pipeline once.

    Args:
        config: Trial configuration

    Returns:
        TrialResult; success implies the cycle verifies against the oriented
        graph with the blue arcs forbidden
    """
    pc = config.process
    result = TrialResult(pc.n, pc.seed, pc.mode.value, pc.preset)
    clock = _StageClock(result, config.record_timing)

    try:
        events, m_star = _run_process(config, result)

        clock.enter(Stage.ORIENT)
        state, oriented = orient_events(events, pc.n, pc.step1_len, pc.sat_threshold, pc.seed)

        clock.enter(Stage.CLASSIFY)
        classes = classify_vertices(state, m_star)
        counts = classes.counts()
        result.A, result.B1, result.B2 = counts["A"], counts["B1"], counts["B2"]
        if classes.violations:
            report = typicality(classes, events, m_star, state)
            result.typicality, result.typical = report.to_dict(), report.typical
            raise ClassificationError(f"{len(classes.violations)} restricted vertices are neither partial nor bud",
                                      {"violations": {str(v): r for v, r in sorted(classes.violations.items())[:20]}})

        clock.enter(Stage.FIVEINOUT)
        five = build_five_in_out(state, classes, config.out_size)
        _dump(config, "fiveinout", five.to_dict())
        forbidden = forbidden_arcs(oriented)
        diag = blue_diagnostics(five, classes, events, m_star)
        result.blue_fiveinout = diag["blue_fiveinout"]
        result.blue_fiveinout_at_B = diag["blue_fiveinout_at_B"]
        result.blue_multi_vertices = diag["blue_multi_vertices"]
        report = typicality(classes, events, m_star, state, five.consumed)
        result.typicality, result.typical = report.to_dict(), report.typical

        clock.enter(Stage.FACTOR)
        bip = build_bip(five, classes)
        matching_rng = rng_stream(pc.seed, "matching")
        for attempt in range(max(1, config.matching_retries)):
            factor = randomized_perfect_matching(bip, matching_rng, forbidden)
            quality = factor_quality(factor, bip.A_hat, pc.n)
            result.cycles_in_factor = quality.cycle_count
            result.cycle_bound_ok = quality.cycle_count <= quality.cycle_bound
            result.blue_in_factor = len(factor.blue)
            if quality.passed or attempt + 1 >= config.matching_retries:
                break
        _dump(config, "factor", factor.to_dict())
        require_quality(quality, config.strict_quality)

        clock.enter(Stage.COMPRESS)
        compressed, cmap = compress_factor(factor, bip.A_hat, first_id=pc.n)
        _dump(config, "compression", cmap.to_dict())

        clock.enter(Stage.MERGE)
        pool = build_pool(oriented, classes.A, five.consumed, pc.step1_len, cmap, compressed.vertices)
        result.pool_size = len(pool)
        merged = merge_factor(compressed, pool, rng_stream(pc.seed, "merge"), cmap)
        result.merge = merged.stats.to_dict()
        result.rotations = merged.stats.rotations
        result.blue_eliminated = merged.stats.blue_eliminated
        cycle = decompress_cycle(merged.cycle, cmap)

        digraph = Digraph.from_oriented(pc.n, oriented)
        ok, reason = verify_cycle(digraph, cycle, digraph.blue_only())
        if not ok:
            result.failure = Failure.VERIFY_FAILED.value
            result.error = f"emitted cycle failed verification: {reason}"
            logger.warning(f"trial n={pc.n} seed={pc.seed}: {result.error}")
        else:
            result.cycle = _rotate_to_min(cycle)
            result.success = True
            clock.enter(Stage.DONE)

    except PipelineError as e:
        result.stage = e.stage.value if e.stage.rank >= clock.stage.rank else clock.stage.value
        result.failure = e.failure.value
        result.error = str(e)
        result.details = _jsonable(e.details)
        logger.debug(f"trial n={pc.n} seed={pc.seed} stopped at {result.stage}: {e}")
    except Exception as e:
        result.failure = Failure.INTERNAL.value
        result.error = f"{type(e).__name__}: {e}"
        logger.exception(f"trial n={pc.n} seed={pc.seed} crashed at {clock.stage.value}")

    clock.close()
    return result


def _dump(config: PipelineConfig, name: str, payload: Dict[str, Any]) -> None:
    if not config.dump_dir:
        return
    pc = config.process
    path = os.path.join(config.dump_dir, f"n{pc.n}_seed{pc.seed}_{name}.json")
    try:
        write_json(path, payload)
    except OSError as e:
        logger.warning(f"could not write {path}: {e}")


def _rotate_to_min(cycle: List[int]) -> List[int]:
    k = cycle.index(min(cycle))
    return cycle[k:] + cycle[:k]


def _jsonable(value: Any) -> Any:
    return json.loads(json.dumps(value, default=str))


def random_orientation(events: List[EdgeEvent], seed: int) -> List[OrientedEdge]:
    """Orient every non-loop event by a fair coin from the "baseline" stream."""
    coins = UniformBuffer(rng_stream(seed, "baseline"))
    oriented = []
    for e in events:
        if e.is_loop:
            continue
        if coins.random() < 0.5:
            oriented.append(OrientedEdge(e.t, e.first, e.second, e.blue, Rule.STEP2_RANDOM))
        else:
            oriented.append(OrientedEdge(e.t, e.second, e.first, e.blue, Rule.STEP2_RANDOM))
    return oriented


BASELINE_PREFIXES = ("m_star", "horizon")


def run_baseline(config: PipelineConfig, at: str = "m_star") -> TrialResult:
    """
    Orient the same process uniformly at random and look for a Hamilton cycle.

    At "m_star" the baseline sees the m* prefix; at "horizon" it sees the
    same events the pipeline oriented, so the two can be compared edge for
    edge. The coins come from one stream, so the shorter prefix is oriented
    identically in both.

    The local certificate (some vertex without a clean in- or out-arc)
    decides first; otherwise Held-Karp decides when n <= oracle_max_n and a
    rotation search from the identity cover over all clean arcs runs above that.

    Args:
        config: Trial configuration
        at: Prefix to orient, "m_star" or "horizon"

    Returns:
        TrialResult with kind "baseline" and decided_by set

    Raises:
        ConfigError: unknown prefix
    """
    if at not in BASELINE_PREFIXES:
        raise ConfigError(f"unknown baseline prefix {at!r}")
    pc = config.process
    result = TrialResult(pc.n, pc.seed, pc.mode.value, pc.preset, kind="baseline", baseline_at=at)
    clock = _StageClock(result, config.record_timing)

    try:
        events, m_star = _run_process(config, result)
        clock.enter(Stage.ORIENT)
        oriented = random_orientation(events[:m_star] if at == "m_star" else events, pc.seed)
        digraph = Digraph.from_oriented(pc.n, oriented)
        forbidden = digraph.blue_only()
        clean = Digraph.from_arcs(pc.n, (a for a in digraph.multiplicity if a not in forbidden))

        clock.enter(Stage.MERGE)
        min_in, min_out = clean.min_in_out_degree()
        cycle = None
        if min_in == 0 or min_out == 0:
            result.decided_by = "certificate"
        elif pc.n <= config.oracle_max_n:
            result.decided_by = "oracle"
            cycle = held_karp(digraph, forbidden)
        else:
            result.decided_by = "search"
            identity = OneFactor({v: v for v in range(pc.n)})
            pool = [PoolEdge(e.t, e.tail, e.head, e.blue) for e in oriented]
            result.pool_size = len(pool)
            merged = merge_factor(identity, pool, rng_stream(pc.seed, "baseline"), join=False)
            result.rotations = merged.stats.rotations
            result.merge = merged.stats.to_dict()
            cycle = merged.cycle

        if cycle is not None and verify_cycle(digraph, cycle, forbidden)[0]:
            result.cycle = _rotate_to_min(cycle)
            result.success = True
            clock.enter(Stage.DONE)
        else:
            result.failure = Failure.MERGE_FAILED.value
            result.error = f"no Hamilton cycle ({result.decided_by})"

    except PipelineError as e:
        result.failure = e.failure.value
        result.error = str(e)
        result.details = _jsonable(e.details)
    except Exception as e:
        result.failure = Failure.INTERNAL.value
        result.error = f"{type(e).__name__}: {e}"
        logger.exception(f"baseline n={pc.n} seed={pc.seed} crashed")

    clock.close()
    return result


def _run_pair(args: Tuple[PipelineConfig, bool]) -> Tuple[TrialResult, List[TrialResult]]:
    config, baseline = args
    baselines = [run_baseline(config, at) for at in BASELINE_PREFIXES] if baseline else []
    return run_trial(config), baselines


def _frame(results: List[TrialResult], record_timing: bool) -> pd.DataFrame:
    rows = [r.to_dict(record_timing) for r in results]
    return pd.DataFrame(rows) if rows else pd.DataFrame(columns=HARNESS_CONFIG["csv_columns"])


def _csv_table(frame: pd.DataFrame, record_timing: bool) -> pd.DataFrame:
    columns = [c for c in HARNESS_CONFIG["csv_columns"] if record_timing or c != "ms_total"]
    table = frame.reindex(columns=columns).copy()
    for col in ("m_star", "cycles_in_factor", "A", "B1", "B2", "blue_seen", "blue_eliminated"):
        table[col] = pd.to_numeric(table[col], errors="coerce").astype("Int64")
    return table


def run_sweep(n_list: List[int], trials: int, base: PipelineConfig, out_dir: Optional[str] = None,
              fmt: str = HARNESS_CONFIG["default_format"], jobs: int = 1,
              baseline: bool = False) -> pd.DataFrame:
    """
    Run trials for every n and write per-trial and per-n outputs.

    Args:
        n_list: Vertex counts
        trials: Trials per n
        base: Template configuration; its seed is the sweep's base seed
        out_dir: Output directory (None writes nothing)
        fmt: "csv" or "jsonl" for the per-trial file
        jobs: Worker processes
        baseline: Also run the random-orientation baseline on each trial, once
            at m* and once on the pipeline's horizon

    Returns:
        Summary table (one row per n)

    Raises:
        ConfigError: invalid n or format
        OSError: output could not be written
    """
    if fmt not in ("csv", "jsonl"):
        raise ConfigError(f"unknown format {fmt!r}")
    pc = base.process
    configs = []
    for n in n_list:
        for seed in trial_seeds(pc.seed, n, trials):
            configs.append((PipelineConfig.build(
                n, seed, pc.mode.value, pc.preset, pc.sat_threshold, base.step1_multiplier, pc.step2_multiplier,
                base.out_size, base.oracle_max_n, base.record_timing, base.dump_dir), baseline))
    logger.info(f"sweep: {len(configs)} trials over n={list(n_list)} with {jobs} worker(s)")

    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_pair, configs))
    else:
        outcomes = [_run_pair(c) for c in configs]

    key = lambda r: (r.n, r.seed, r.baseline_at or "")
    results = sorted((t for t, _ in outcomes), key=key)
    base_results = sorted((b for _, bs in outcomes for b in bs), key=key)
    successes = sum(r.success for r in results)
    logger.info(f"sweep finished: {successes}/{len(results)} trials succeeded")

    frame = _frame(results, base.record_timing)
    base_frame = _frame(base_results, base.record_timing) if baseline else None
    table = summarize(frame, base_frame)

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        files = {}
        if fmt == "csv":
            files["trials"] = os.path.join(out_dir, PATHS["trials_csv"])
            _csv_table(frame, base.record_timing).to_csv(files["trials"], index=False)
        else:
            files["trials"] = os.path.join(out_dir, PATHS["trials_jsonl"])
            write_jsonl(files["trials"], (r.to_dict(base.record_timing) for r in results))
        if baseline:
            files["baseline"] = os.path.join(out_dir, "baseline_" + PATHS["trials_jsonl"])
            write_jsonl(files["baseline"], (r.to_dict(base.record_timing) for r in base_results))
        files["summary_csv"] = os.path.join(out_dir, PATHS["summary_csv"])
        table.to_csv(files["summary_csv"], index=False)
        files["summary_json"] = write_json(os.path.join(out_dir, PATHS["summary_json"]),
                                           json.loads(table.to_json(orient="records")))
        add_to_sweep_registry(out_dir, {
            "n": list(n_list), "trials": trials, "seed": pc.seed, "mode": pc.mode.value,
            "preset": pc.preset, "baseline": baseline, "files": files,
        })
    return table


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onlineham",
        description="Seeded trials of the on-line orientation and Hamilton cycle pipeline")
    parser.add_argument("--n", type=int, nargs="+", required=True, help="vertex counts")
    parser.add_argument("--trials", type=int, default=1)
    parser.add_argument("--seed", type=int, default=HARNESS_CONFIG["default_seed"])
    parser.add_argument("--mode", choices=["edge", "graph"], default=HARNESS_CONFIG["default_mode"])
    parser.add_argument("--preset", choices=["paper", "desk"], default=HARNESS_CONFIG["default_preset"])
    parser.add_argument("--sat-threshold", type=int, default=None)
    parser.add_argument("--out-size", type=int, default=None, help="OUT/IN size of saturated vertices")
    parser.add_argument("--step1-multiplier", type=float, default=None)
    parser.add_argument("--step2-multiplier", type=float, default=None)
    parser.add_argument("--out-dir", default=None)
    parser.add_argument("--format", choices=["csv", "jsonl"], default=HARNESS_CONFIG["default_format"])
    parser.add_argument("--oracle-max-n", type=int, default=HARNESS_CONFIG["oracle_max_n"])
    parser.add_argument("--jobs", type=int, default=None)
    parser.add_argument("--baseline", action="store_true", help="also run the random-orientation baseline")
    parser.add_argument("--dump-dir", default=None, help="write FIVEINOUT, factor and compression JSON per trial")
    parser.add_argument("--no-timing", action="store_true", help="leave wall-clock fields out of the outputs")
    parser.add_argument("--verbose-stage", action="store_true", help="debug logging for every stage")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging("DEBUG" if args.verbose_stage else None)
    if not validate_config():
        logger.error("presets are inconsistent, fix config.py")
        return 2

    try:
        if args.trials < 0:
            raise ConfigError("--trials must be >= 0")
        if any(n < 3 for n in args.n):
            raise ConfigError("every --n must be >= 3")
        base = PipelineConfig.build(
            args.n[0], args.seed, args.mode, args.preset, args.sat_threshold,
            args.step1_multiplier, args.step2_multiplier, args.out_size,
            args.oracle_max_n, not args.no_timing, args.dump_dir)
        out_dir = args.out_dir or get_default_out_dir()
        jobs = args.jobs or get_default_jobs()
        table = run_sweep(args.n, args.trials, base, out_dir, args.format, jobs, args.baseline)
    except ConfigError as e:
        logger.error(f"configuration error: {e}")
        return 2
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return 1

    if not table.empty:
        print(table.to_string(index=False))
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""
Random edge process, random graph process and the coupling between them.

The edge process draws ordered pairs uniformly with repetition from all n^2
pairs. The graph process draws distinct unordered pairs without repetition;
lifting it through the coupling produces a stream with the edge-process law
in which repeated pairs are colored blue.
"""

import math
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Any, Optional, List, Tuple, Iterator

import numpy as np

from config import ConfigError, get_preset, PIPELINE_CONFIG
from errors import ProcessExhaustedError
from utils import rng_stream, ln, lnln

logger = logging.getLogger("onlineham.process")

_BLOCK = 4096


class EventKind(str, Enum):
    FRESH = "fresh"
    REPEAT = "repeat"
    LOOP = "loop"


class Mode(str, Enum):
    EDGE = "edge"
    GRAPH = "graph"


@dataclass(frozen=True)
class EdgeEvent:
    """One step of the edge process."""
    t: int
    first: int
    second: int
    kind: EventKind = EventKind.FRESH
    blue: bool = False

    @property
    def is_loop(self) -> bool:
        return self.first == self.second

    @property
    def pair(self) -> Tuple[int, int]:
        """The unordered pair as (min, max)."""
        return (self.first, self.second) if self.first <= self.second else (self.second, self.first)

    def to_dict(self) -> Dict[str, Any]:
        return {"t": self.t, "u": self.first, "v": self.second, "kind": self.kind.value}

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "EdgeEvent":
        kind = EventKind(record.get("kind", "fresh"))
        return cls(int(record["t"]), int(record["u"]), int(record["v"]), kind, kind is EventKind.REPEAT)


@dataclass(frozen=True)
class ProcessConfig:
    """Parameters of one run of the edge (or lifted graph) process."""
    n: int
    mode: Mode
    seed: int
    preset: str
    step1_len: int
    sat_threshold: int
    step2_multiplier: Optional[float] = None

    @classmethod
    def from_preset(
        cls,
        n: int,
        mode: str = "edge",
        seed: int = 0,
        preset: str = "desk",
        sat_threshold: Optional[int] = None,
        step1_multiplier: Optional[float] = None,
        step2_multiplier: Optional[float] = None,
        out_size: Optional[int] = None,
    ) -> "ProcessConfig":
        """
        Build a configuration from a named preset, applying overrides.

        Args:
            n: Vertex count
            mode: "edge" or "graph"
            seed: Trial seed
            preset: "paper" or "desk"
            sat_threshold: Override of the saturation threshold
            step1_multiplier: Override of c1
            step2_multiplier: Override of c2 (desk horizon)
            out_size: FIVEINOUT size used to validate the threshold

        Returns:
            A validated ProcessConfig
        """
        if n < 1:
            raise ConfigError(f"n must be positive, got {n}")
        values = get_preset(preset)
        c1 = values["step1_multiplier"] if step1_multiplier is None else float(step1_multiplier)
        sat = values["sat_threshold"] if sat_threshold is None else int(sat_threshold)
        c2 = values["step2_multiplier"] if step2_multiplier is None else float(step2_multiplier)
        out_size = PIPELINE_CONFIG["out_size"] if out_size is None else out_size

        if preset == "paper":
            step1_len = math.ceil(c1 * n * max(lnln(n), values["step1_floor"]))
        else:
            step1_len = math.ceil(c1 * n * values["step1_floor"])
            if c1 < 2 * sat:
                raise ConfigError(f"desk preset needs c1 >= 2 * sat_threshold ({c1} < {2 * sat})")

        if sat < 2 * out_size:
            raise ConfigError(f"sat_threshold {sat} cannot supply {out_size} out and {out_size} in slots")
        if out_size == 5 and sat < PIPELINE_CONFIG["min_sat_threshold_full"]:
            raise ConfigError("5-in/5-out extraction needs sat_threshold >= 12")

        return cls(n=n, mode=Mode(mode), seed=int(seed), preset=preset,
                   step1_len=step1_len, sat_threshold=sat, step2_multiplier=c2)

    def horizon_floor(self) -> int:
        """Least event count the run must reach (0 means stop at m*)."""
        if not self.step2_multiplier:
            return 0
        return self.step1_len + math.ceil(self.step2_multiplier * self.n * ln(self.n))


class UniformBuffer:
    """Block-buffered uniform doubles from one generator."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self._block = np.empty(0)
        self._pos = 0

    def random(self) -> float:
        if self._pos >= len(self._block):
            self._block = self.rng.random(_BLOCK)
            self._pos = 0
        value = float(self._block[self._pos])
        self._pos += 1
        return value

    def below(self, k: int) -> int:
        """Uniform integer in [0, k)."""
        return min(int(self.random() * k), k - 1)


class DegreeTracker:
    """Degrees of the underlying multigraph and the count of vertices below degree 2."""

    def __init__(self, n: int):
        self.degree = [0] * n
        self.deficient = n

    def add(self, u: int, v: int) -> None:
        if u == v:
            return
        for x in (u, v):
            self.degree[x] += 1
            if self.degree[x] == 2:
                self.deficient -= 1

    @property
    def min_degree_ok(self) -> bool:
        return self.deficient == 0


class ProcessState:
    """Mutable state of one event stream: time, seen pairs and buffered draws."""

    def __init__(self, n: int, mode: Mode = Mode.EDGE):
        self.n = n
        self.mode = mode
        self.t = 0
        self.seen_pairs: List[Tuple[int, int]] = []
        self.seen_set = set()
        self.blue_count = 0
        self.loop_count = 0

    @property
    def a_t(self) -> int:
        """Number of distinct non-loop pairs emitted so far."""
        return len(self.seen_pairs)

    def record(self, event: EdgeEvent) -> None:
        if event.is_loop:
            self.loop_count += 1
            return
        if event.blue:
            self.blue_count += 1
        pair = event.pair
        if pair not in self.seen_set:
            self.seen_set.add(pair)
            self.seen_pairs.append(pair)


class GraphProcess:
    """
    Random graph process: distinct unordered pairs in uniformly random order.

    Sampling without replacement keeps a sparse Fisher-Yates swap map over the
    C(n, 2) pair indices, so memory grows with the number of drawn edges only.
    """

    def __init__(self, n: int, rng: np.random.Generator):
        self.n = n
        self.total = n * (n - 1) // 2
        self.drawn = 0
        self._swap: Dict[int, int] = {}
        self._draws = UniformBuffer(rng)

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        return self

    def __next__(self) -> Tuple[int, int]:
        if self.drawn >= self.total:
            raise StopIteration
        k = self.drawn
        r = k + self._draws.below(self.total - k)
        value = self._swap.get(r, r)
        self._swap[r] = self._swap.pop(k, k)
        self.drawn += 1
        return decode_pair(value, self.n)


def decode_pair(index: int, n: int) -> Tuple[int, int]:
    """Map an index in [0, C(n,2)) to the pair (u, v), u < v, in row-major order."""
    total = n * (n - 1) // 2
    m = total - 1 - index
    r = (math.isqrt(8 * m + 1) - 1) // 2
    p = m - r * (r + 1) // 2
    u = n - 2 - r
    return u, n - 1 - p


def next_edge_event(state: ProcessState, rng: UniformBuffer) -> EdgeEvent:
    """
    Draw the next event of the edge process.

    Args:
        state: Stream state (advanced in place)
        rng: Buffered uniform source

    Returns:
        An ordered pair uniform over all n^2 pairs
    """
    n = state.n
    first = rng.below(n)
    second = rng.below(n)
    state.t += 1
    kind = EventKind.LOOP if first == second else EventKind.FRESH
    event = EdgeEvent(state.t, first, second, kind, False)
    state.record(event)
    return event


def lift_graph_process(underlying: Iterator[Tuple[int, int]], state: ProcessState,
                       rng: UniformBuffer) -> EdgeEvent:
    """
    Produce the next event of the auxiliary process from a graph process.

    With probability (2 a_t + n) / n^2 the event is redundant: a uniformly
    chosen earlier pair (blue) with probability 2 a_t / (2 a_t + n), a
    uniform loop otherwise. Otherwise the next fresh pair of the graph
    process is consumed. The order of the two vertices is always a fair coin.

    Args:
        underlying: Graph process iterator of unordered pairs
        state: Stream state (advanced in place)
        rng: Buffered uniform source

    Returns:
        The next EdgeEvent

    Raises:
        ProcessExhaustedError: the graph process ran out of pairs
    """
    n = state.n
    a = state.a_t
    state.t += 1

    if rng.random() * (n * n) < 2 * a + n:
        if rng.random() * (2 * a + n) < 2 * a:
            u, v = state.seen_pairs[rng.below(a)]
            kind, blue = EventKind.REPEAT, True
        else:
            u = v = rng.below(n)
            kind, blue = EventKind.LOOP, False
    else:
        try:
            u, v = next(underlying)
        except StopIteration:
            raise ProcessExhaustedError(
                f"graph process exhausted after {state.a_t} edges at t={state.t}",
                {"t": state.t, "edges": state.a_t})
        kind, blue = EventKind.FRESH, False

    if rng.random() < 0.5:
        u, v = v, u
    event = EdgeEvent(state.t, u, v, kind, blue)
    state.record(event)
    return event


class EdgeStream:
    """Iterator of EdgeEvents for a ProcessConfig (edge process or lifted graph process)."""

    def __init__(self, config: ProcessConfig):
        self.config = config
        self.n = config.n
        self.mode = config.mode
        self.state = ProcessState(config.n, config.mode)
        self._draws = UniformBuffer(rng_stream(config.seed, "coupling" if config.mode is Mode.GRAPH else "process"))
        self._underlying = None
        if config.mode is Mode.GRAPH:
            self._underlying = GraphProcess(config.n, rng_stream(config.seed, "process"))

    def __iter__(self) -> "EdgeStream":
        return self

    def __next__(self) -> EdgeEvent:
        if self.mode is Mode.GRAPH:
            return lift_graph_process(self._underlying, self.state, self._draws)
        return next_edge_event(self.state, self._draws)


def counts_toward_degree(event: EdgeEvent, mode: Mode) -> bool:
    """Loops never count; in graph mode only fresh pairs of the underlying graph count."""
    if event.is_loop:
        return False
    return mode is Mode.EDGE or not event.blue


def run_until_min_degree_2(stream: EdgeStream, min_length: int = 0,
                           max_events: Optional[int] = None) -> Tuple[List[EdgeEvent], int]:
    """
    Consume the stream until the underlying graph has minimum degree 2.

    Args:
        stream: Event source exposing n and mode
        min_length: Keep consuming at least this many events (desk horizon)
        max_events: Safety cap; None means unbounded

    Returns:
        (events, m_star) where m_star is the least t with minimum degree >= 2
        and events is the prefix of length max(m_star, min_length)
    """
    n = stream.n
    if n < 3:
        raise ConfigError("the min-degree-2 stopping time needs n >= 3")

    tracker = DegreeTracker(n)
    events: List[EdgeEvent] = []
    m_star = 0

    for event in stream:
        events.append(event)
        if counts_toward_degree(event, stream.mode):
            tracker.add(event.first, event.second)
        if not m_star and tracker.min_degree_ok:
            m_star = event.t
            logger.debug(f"min degree 2 reached at t={m_star} (n={n})")
        if m_star and event.t >= min_length:
            break
        if max_events is not None and event.t >= max_events:
            logger.warning(f"stopping at the event cap {max_events} before min degree 2")
            break

    return events, m_star


def edge_process_hitting_time(n: int, seed: int, max_events: Optional[int] = None) -> int:
    """
    Stopping time m* of the edge process, computed block-wise with numpy.

    Reads the "process" stream exactly as EdgeStream does in edge mode (two
    uniforms per event, _BLOCK uniforms per draw), so it returns the same m*
    as run_until_min_degree_2 without materializing events.

    Args:
        n: Number of vertices
        seed: Trial seed
        max_events: Safety cap; None means unbounded

    Returns:
        The least t with minimum degree >= 2 (0 if the cap was hit first)

    Raises:
        ConfigError: n < 3
    """
    if n < 3:
        raise ConfigError("the min-degree-2 stopping time needs n >= 3")
    rng = rng_stream(seed, "process")
    per_block = _BLOCK // 2
    degree = np.zeros(n, dtype=np.int64)
    reached = np.zeros(n, dtype=np.int64)
    offset = 0

    while max_events is None or offset < max_events:
        draws = np.minimum((rng.random(_BLOCK) * n).astype(np.int64), n - 1)
        first, second = draws[0::2], draws[1::2]
        times = np.arange(offset + 1, offset + per_block + 1, dtype=np.int64)
        if max_events is not None:
            keep = times <= max_events
            first, second, times = first[keep], second[keep], times[keep]
        fresh = first != second
        ends = np.concatenate([first[fresh], second[fresh]])
        at = np.concatenate([times[fresh], times[fresh]])

        order = np.lexsort((at, ends))
        ends, at = ends[order], at[order]
        rank = np.arange(len(ends)) - np.searchsorted(ends, ends, side="left")
        need = 2 - degree[ends]
        hit = (need >= 1) & (rank == need - 1)
        reached[ends[hit]] = at[hit]
        degree += np.bincount(ends, minlength=n)

        offset += per_block
        if degree.min() >= 2:
            m_star = int(reached.max())
            logger.debug(f"min degree 2 reached at t={m_star} (n={n})")
            return m_star

    logger.warning(f"stopping at the event cap {max_events} before min degree 2")
    return 0

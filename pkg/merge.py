"""
Cycle merging: from a compressed 1-factor to one directed Hamilton cycle.

The pool is the set of Step II A-A oriented edges that FIVEINOUT did not
consume. Only clean (non-blue) pool arcs are ever added to the structure.
Merging runs in three phases:

    1. join_cycles: splice two cycles with a pair of pool arcs (v, w), (w-, v+)
    2. absorb_or_close: open the largest cycle into a path, extend it over the
       remaining cycles, then close it, rotating the path whenever the
       current endpoint has no useful arc
    3. eliminate_blue: cut each blue arc of the cycle and close the resulting
       Hamilton path again with clean arcs

Paths under rotation are kept as lists of intervals of a root path, since a
directed rotation only permutes segments and never reverses one.
"""

import copy
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Optional, List, Tuple, Set, Iterable

import numpy as np

from config import MERGE_CONFIG
from compress import CompressionMap
from errors import MergeFailedError
from factor import OneFactor, cycle_decomposition
from orient import OrientedEdge, Rule

logger = logging.getLogger("onlineham.merge")

Arc = Tuple[int, int]
Segments = Tuple[Tuple[int, int], ...]


@dataclass(frozen=True)
class PoolEdge:
    t: int
    tail: int
    head: int
    blue: bool


def build_pool(oriented: Iterable[OrientedEdge], A: Set[int], consumed: Set[int],
               step1_len: int, cmap: Optional[CompressionMap] = None,
               vertices: Optional[List[int]] = None) -> List[PoolEdge]:
    """
    Collect the unconsumed Step II A-A edges and translate them to compressed ids.

    A tail x maps to the compressed vertex whose segment ends at x, a head y
    to the one whose segment starts at y; arcs touching the interior of a
    segment, or becoming loops, are dropped.

    Args:
        oriented: Oriented stream
        A: Saturated vertices
        consumed: Event indices used by FIVEINOUT
        step1_len: Step I length
        cmap: Compression map (None means no compression happened)
        vertices: Compressed working set

    Returns:
        Pool edges in event order
    """
    exits = entries = None
    if cmap is not None and cmap.records:
        exits = cmap.exit_map(vertices)
        entries = cmap.entry_map(vertices)

    pool: List[PoolEdge] = []
    for e in oriented:
        if e.t <= step1_len or e.rule is not Rule.STEP2_RANDOM or e.t in consumed:
            continue
        if e.tail not in A or e.head not in A:
            continue
        tail, head = e.tail, e.head
        if exits is not None:
            tail, head = exits.get(tail), entries.get(head)
            if tail is None or head is None:
                continue
        if tail != head:
            pool.append(PoolEdge(e.t, tail, head, e.blue))
    return pool


@dataclass
class MergeStats:
    cycles_before: int = 0
    cycles_after_join: int = 0
    joins: int = 0
    rotations: int = 0
    restarts: int = 0
    endpoints: int = 0
    absorbed: int = 0
    blue_in_cycle: int = 0
    blue_eliminated: int = 0

    def to_dict(self) -> Dict[str, int]:
        return dict(self.__dict__)


class MergeState:
    """
    Current cover (successor and predecessor maps), clean pool index and budgets.

    Args:
        factor: Compressed 1-factor
        pool: Pool edges on the same vertex set
        rng: Generator of the "merge" stream (restart shuffles)
    """

    def __init__(self, factor: OneFactor, pool: Iterable[PoolEdge],
                 rng: Optional[np.random.Generator] = None):
        self.succ: Dict[int, int] = dict(factor.successor)
        self.pred: Dict[int, int] = {w: v for v, w in self.succ.items()}
        self.blue_arcs: Set[Arc] = {(v, self.succ[v]) for v in factor.blue}
        self.rng = rng
        self.stats = MergeStats()
        self.scan_shuffle = False

        clean: Set[Arc] = set()
        self.forbidden: Set[Arc] = set()
        self.pool_size = 0
        for e in pool:
            self.pool_size += 1
            if e.blue:
                self.forbidden.add((e.tail, e.head))
            else:
                clean.add((e.tail, e.head))
        self.forbidden -= clean
        self.clean = clean
        self.pool_out: Dict[int, List[int]] = {}
        self.pool_in: Dict[int, List[int]] = {}
        for u, v in sorted(clean):
            self.pool_out.setdefault(u, []).append(v)
            self.pool_in.setdefault(v, []).append(u)

        self.label: Dict[int, int] = {}
        self.relabel()
        self.cycle: Optional[List[int]] = None

    @property
    def size(self) -> int:
        return len(self.succ)

    def relabel(self) -> None:
        """Label every vertex with the least vertex of its cycle."""
        self.label = {}
        for cycle in cycle_decomposition(self.succ):
            for v in cycle:
                self.label[v] = cycle[0]

    def cycles(self) -> List[List[int]]:
        return cycle_decomposition(self.succ)

    def is_blue(self, arc: Arc) -> bool:
        return arc in self.blue_arcs and arc not in self.clean

    def out_arcs(self, v: int) -> List[int]:
        heads = self.pool_out.get(v, [])
        if self.scan_shuffle and self.rng is not None and len(heads) > 1:
            return [heads[i] for i in self.rng.permutation(len(heads))]
        return heads

    def reversed_view(self) -> "MergeState":
        """Shallow copy whose pool index runs against the arcs; stats and rng are shared."""
        view = copy.copy(self)
        view.pool_out, view.pool_in = self.pool_in, self.pool_out
        return view

    def snapshot(self) -> Tuple[Dict[int, int], Set[Arc]]:
        return dict(self.succ), set(self.blue_arcs)

    def restore(self, snap: Tuple[Dict[int, int], Set[Arc]]) -> None:
        self.succ = dict(snap[0])
        self.pred = {w: v for v, w in self.succ.items()}
        self.blue_arcs = set(snap[1])
        self.relabel()


def validate_cover(succ: Dict[int, int]) -> bool:
    """True iff succ is a permutation of its key set."""
    return sorted(succ.values()) == sorted(succ)


def validate_path_cover(path: List[int], cycles: List[List[int]], universe: Set[int]) -> bool:
    """True iff path and cycles are vertex-disjoint and together cover universe."""
    seen = list(path)
    for c in cycles:
        seen.extend(c)
    return len(seen) == len(set(seen)) and set(seen) == universe


def join_cycles(state: MergeState) -> MergeState:
    """
    Greedily splice cycles with pairs of clean pool arcs.

    For a pool arc (v, w) between two cycles and a pool arc (w-, v+), the
    cover arcs (v, v+) and (w-, w) are replaced by (v, w) and (w-, v+).
    Passes over the pool repeat while a pass made progress.

    Returns:
        The same state, with no more cycles than before
    """
    state.stats.cycles_before = len(set(state.label.values()))
    progress = True
    while progress and len(set(state.label.values())) > 1:
        progress = False
        for v, w in sorted(state.clean):
            if state.label[v] == state.label[w]:
                continue
            w_minus, v_plus = state.pred[w], state.succ[v]
            if (w_minus, v_plus) not in state.clean:
                continue
            state.blue_arcs.discard((v, v_plus))
            state.blue_arcs.discard((w_minus, w))
            state.succ[v], state.pred[w] = w, v
            state.succ[w_minus], state.pred[v_plus] = v_plus, w_minus
            x = w
            root = state.label[v]
            while state.label[x] != root:
                state.label[x] = root
                x = state.succ[x]
            state.stats.joins += 1
            progress = True
            if MERGE_CONFIG["validate_each_step"] and not validate_cover(state.succ):
                raise MergeFailedError("cover broken by a join", state.stats.to_dict())
            if len(set(state.label.values())) == 1:
                break
    state.relabel()
    state.stats.cycles_after_join = len(set(state.label.values()))
    logger.debug(f"join phase: {state.stats.cycles_before} -> {state.stats.cycles_after_join} cycles")
    return state


def rotate(path: List[int], back: Arc, chord: Arc) -> List[int]:
    """
    Rotate a path with a back arc from its endpoint and a forward chord.

    For path (v0 .. vl), back arc (vl, v_{i+1}) with i >= 1 and chord
    (v_i, v_j) with i + 1 < j <= l, the result is
    (v0 .. v_i, v_j .. vl, v_{i+1} .. v_{j-1}) with endpoint v_{j-1}.

    Raises:
        ValueError: the arcs do not form a rotation of this path
    """
    position = {v: k for k, v in enumerate(path)}
    last = len(path) - 1
    if back[0] != path[-1] or back[1] not in position:
        raise ValueError(f"{back} is not an arc from the endpoint into the path")
    i = position[back[1]] - 1
    if i < 1:
        raise ValueError("back arc must enter at position 2 or later")
    if chord[0] != path[i] or chord[1] not in position:
        raise ValueError(f"{chord} does not leave v_{i}")
    j = position[chord[1]]
    if not i + 1 < j <= last:
        raise ValueError(f"chord target position {j} not in ({i + 1}, {last}]")
    return path[:i + 1] + path[j:] + path[i + 1:j]


def _position(segs: Segments, r: int) -> int:
    acc = 0
    for a, b in segs:
        if a <= r <= b:
            return acc + r - a
        acc += b - a + 1
    return -1


def _vertex_at(segs: Segments, pos: int, root: List[int]) -> int:
    for a, b in segs:
        length = b - a + 1
        if pos < length:
            return root[a + pos]
        pos -= length
    raise IndexError(pos)


def _slice(segs: Segments, lo: int, hi: int) -> List[Tuple[int, int]]:
    """Intervals covering path positions lo..hi inclusive."""
    out = []
    acc = 0
    for a, b in segs:
        length = b - a + 1
        s, e = max(lo, acc), min(hi, acc + length - 1)
        if s <= e:
            out.append((a + s - acc, a + e - acc))
        acc += length
        if acc > hi:
            break
    return out


def rotate_segments(segs: Segments, i: int, j: int, length: int) -> Segments:
    """Segment form of rotate(): positions 0..i, then j..end, then i+1..j-1."""
    parts = _slice(segs, 0, i) + _slice(segs, j, length - 1) + _slice(segs, i + 1, j - 1)
    merged: List[Tuple[int, int]] = []
    for a, b in parts:
        if merged and merged[-1][1] + 1 == a:
            merged[-1] = (merged[-1][0], b)
        else:
            merged.append((a, b))
    return tuple(merged)


def materialize(segs: Segments, root: List[int]) -> List[int]:
    path: List[int] = []
    for a, b in segs:
        path.extend(root[a:b + 1])
    return path


def _rotation_search(state: MergeState, root: List[int], closers: Optional[Set[int]],
                     budget: List[int]) -> Optional[Tuple[List[int], Optional[int]]]:
    """
    Breadth-first search over the endpoints reachable by rotations.

    With closers given, the goal is an endpoint in closers (a clean arc back
    to the start); otherwise an endpoint with a clean arc leaving the path.
    Each endpoint is discovered at most once and a node never reuses a
    breaking point of its own rotation history.

    Args:
        state: Merge state (pool index, stats)
        root: Starting path
        closers: Vertices with a clean arc into root[0], or None for extension
        budget: One-element list with the rotations left (decremented)

    Returns:
        (path, extension vertex or None) or None when the search fails
    """
    length = len(root)
    rootpos = {v: k for k, v in enumerate(root)}

    def goal(end: int) -> Tuple[bool, Optional[int]]:
        if closers is not None:
            return end in closers, None
        for x in state.out_arcs(end):
            if x not in rootpos:
                return True, x
        return False, None

    start: Segments = ((0, length - 1),)
    seen = {root[-1]}
    queue = deque([(start, root[-1], frozenset())])
    while queue:
        segs, end, breaks = queue.popleft()
        hit, x = goal(end)
        if hit:
            state.stats.endpoints += len(seen)
            return materialize(segs, root), x
        for y in state.out_arcs(end):
            r = rootpos.get(y)
            if r is None:
                continue
            i = _position(segs, r) - 1
            if i < 1 or i + 1 >= length - 1:
                continue
            v_i = _vertex_at(segs, i, root)
            if v_i in breaks:
                continue
            for z in state.out_arcs(v_i):
                rz = rootpos.get(z)
                if rz is None:
                    continue
                j = _position(segs, rz)
                if j <= i + 1:
                    continue
                new_end = _vertex_at(segs, j - 1, root)
                if new_end in seen or new_end in breaks:
                    continue
                if budget[0] <= 0:
                    state.stats.endpoints += len(seen)
                    return None
                budget[0] -= 1
                state.stats.rotations += 1
                seen.add(new_end)
                queue.append((rotate_segments(segs, i, j, length), new_end, breaks | {v_i, new_end}))
    state.stats.endpoints += len(seen)
    return None


def _open_at(state: MergeState, v: int) -> List[int]:
    """The cycle through v as a path starting at v."""
    path = [v]
    x = state.succ[v]
    while x != v:
        path.append(x)
        x = state.succ[x]
    return path


def close_path(state: MergeState, path: List[int], budget: List[int]) -> Optional[List[int]]:
    """Rotate a spanning path until its endpoint has a clean arc to its start."""
    closers = set(state.pool_in.get(path[0], []))
    found = _rotation_search(state, path, closers, budget)
    return None if found is None else found[0]


def _absorb_attempt(state: MergeState, budget: List[int], attempt: int) -> Optional[List[int]]:
    cycles = state.cycles()
    giant = max(cycles, key=len)
    giant_set = set(giant)
    entries = [(p, x) for p in giant for x in state.out_arcs(p) if x not in giant_set]
    if attempt and state.rng is not None and len(entries) > 1:
        entries = [entries[k] for k in state.rng.permutation(len(entries))]

    if entries:
        p, x = entries[0]
        path = _open_at(state, state.succ[p]) + _open_at(state, x)
        state.stats.absorbed += 1
    else:
        pick = giant[int(state.rng.integers(len(giant)))] if attempt and state.rng is not None else giant[0]
        path = _open_at(state, state.succ[pick])

    universe = set(state.succ)
    while len(path) < len(universe):
        found = _rotation_search(state, path, None, budget)
        if found is None:
            return None
        path, x = found
        path = path + _open_at(state, x)
        state.stats.absorbed += 1
        if MERGE_CONFIG["validate_each_step"]:
            on_path = set(path)
            rest = [c for c in state.cycles() if not on_path.intersection(c)]
            if not validate_path_cover(path, rest, universe):
                raise MergeFailedError("path cover broken during absorption", state.stats.to_dict())

    return close_path(state, path, budget)


def absorb_or_close(state: MergeState) -> MergeState:
    """
    Turn the cover into one Hamilton cycle using clean pool arcs.

    The largest cycle is opened at a vertex p with a clean arc into another
    cycle; the path then swallows cycles one at a time through endpoint arcs
    (rotating when the endpoint has none), and finally rotates until it can
    close. Failed attempts restart from the same cover with a shuffled scan
    order, up to max_restarts times.

    Raises:
        MergeFailedError: every attempt ran out of endpoints or rotations
    """
    if len(state.cycles()) == 1:
        state.cycle = state.cycles()[0]
        return state

    per_attempt = MERGE_CONFIG["rotations_per_n"] * state.size
    snap = state.snapshot()
    for attempt in range(MERGE_CONFIG["max_restarts"] + 1):
        if attempt:
            state.restore(snap)
            state.stats.restarts += 1
            state.scan_shuffle = True
        budget = [per_attempt]
        cycle = _absorb_attempt(state, budget, attempt)
        if cycle is not None:
            state.cycle = cycle
            state.scan_shuffle = False
            logger.debug(f"closed after {state.stats.rotations} rotations, {state.stats.restarts} restarts")
            return state

    raise MergeFailedError(f"no closure within {MERGE_CONFIG['max_restarts']} restarts",
                           state.stats.to_dict())


def cycle_arcs(cycle: List[int]) -> List[Arc]:
    return [(cycle[k], cycle[(k + 1) % len(cycle)]) for k in range(len(cycle))]


def _cut_and_close(state: MergeState, cycle: List[int], arc: Arc) -> Optional[List[int]]:
    """
    Cut arc (y, z) out of the cycle and close the Hamilton path z .. y again.

    The path is first rotated at its end y; failing that it is rotated at
    its start z, which is the same search on the reversed path over reversed
    pool arcs.
    """
    y, z = arc
    k = cycle.index(z)
    path = cycle[k:] + cycle[:k]
    closed = close_path(state, path, [MERGE_CONFIG["rotations_per_n"] * len(cycle)])
    if closed is not None:
        return closed
    closed = close_path(state.reversed_view(), path[::-1], [MERGE_CONFIG["rotations_per_n"] * len(cycle)])
    return None if closed is None else closed[::-1]


def eliminate_blue(cycle: List[int], state: MergeState) -> List[int]:
    """
    Remove blue arcs from a Hamilton cycle.

    Each blue arc (y, z) is cut, leaving the Hamilton path z .. y, which is
    rotated from either end and closed with clean arcs only. When no blue
    arc of the cycle can be cut, the scan restarts with a shuffled arc order
    and shuffled pool scans, up to max_restarts times. Every successful cut
    removes at least one blue arc and adds none.

    Raises:
        MergeFailedError: no blue arc could be cut within the restarts
    """
    blue = [arc for arc in cycle_arcs(cycle) if state.is_blue(arc)]
    state.stats.blue_in_cycle = max(state.stats.blue_in_cycle, len(blue))
    restarts = 0
    while blue:
        closed = None
        for arc in blue:
            closed = _cut_and_close(state, cycle, arc)
            if closed is not None:
                break
        if closed is None:
            if state.rng is None or restarts >= MERGE_CONFIG["max_restarts"]:
                state.scan_shuffle = False
                raise MergeFailedError(f"none of the blue arcs {blue[:5]} could be cut",
                                       state.stats.to_dict())
            restarts += 1
            state.stats.restarts += 1
            state.scan_shuffle = True
            blue = [blue[i] for i in state.rng.permutation(len(blue))]
            continue
        remaining = [arc for arc in cycle_arcs(closed) if state.is_blue(arc)]
        state.stats.blue_eliminated += len(blue) - len(remaining)
        cycle, blue = closed, remaining
    state.scan_shuffle = False
    return cycle


@dataclass
class MergeResult:
    cycle: List[int]
    stats: MergeStats = field(default_factory=MergeStats)


def merge_factor(factor: OneFactor, pool: List[PoolEdge], rng: Optional[np.random.Generator] = None,
                 cmap: Optional[CompressionMap] = None, join: bool = True) -> MergeResult:
    """
    Run the join, absorb/close and blue-elimination phases.

    Args:
        factor: Compressed 1-factor
        pool: Pool edges on the compressed vertex set
        rng: Generator of the "merge" stream
        cmap: Compression map, to reject blue arcs hidden inside segments
        join: Run the join phase first

    Returns:
        MergeResult with the Hamilton cycle on the compressed vertex set

    Raises:
        MergeFailedError: no blue-free Hamilton cycle was found
    """
    state = MergeState(factor, pool, rng)
    if cmap is not None:
        hidden = [arc for v in state.succ for arc in cmap.hidden_blue_arcs(v)]
        if hidden:
            raise MergeFailedError(f"{len(hidden)} blue arcs hidden in compressed segments",
                                   {"hidden_blue": [list(a) for a in hidden]})
    if join:
        join_cycles(state)
    else:
        state.stats.cycles_before = state.stats.cycles_after_join = len(state.cycles())
    absorb_or_close(state)
    cycle = eliminate_blue(state.cycle, state)
    return MergeResult(cycle, state.stats)

"""
Perfect matchings of BIP and the 1-factors they encode.

The deterministic matcher is Hopcroft-Karp with a frozen scan order
(left vertices ascending, neighbors in adjacency order). The randomized
matcher relabels the right copies of A-hat by a uniform permutation,
runs the deterministic matcher and maps the answer back.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Any, Optional, List, Tuple, Set, Sequence

import numpy as np

from config import PIPELINE_CONFIG
from errors import MatchingError, FactorQualityError
from fiveinout import Bip, Arc
from utils import ln

logger = logging.getLogger("onlineham.factor")

_NIL = -1


class HopcroftKarp:
    """
    Maximum-cardinality matching of a bipartite graph given by left adjacency lists.

    Shortest augmenting paths are layered by a breadth-first search and then
    extended by an explicit-stack depth-first search, so deep layers do not
    hit the recursion limit.
    """

    def __init__(self, adjacency: Sequence[Sequence[int]], num_right: int):
        self.adjacency = adjacency
        self.num_left = len(adjacency)
        self.num_right = num_right
        self.match_left = [_NIL] * self.num_left
        self.match_right = [_NIL] * num_right
        self._inf = self.num_left + 1
        self.dist = [self._inf] * self.num_left
        self.dist_nil = self._inf

    def _layer(self) -> bool:
        """Breadth-first layering from the free left vertices."""
        queue = deque()
        for u in range(self.num_left):
            if self.match_left[u] == _NIL:
                self.dist[u] = 0
                queue.append(u)
            else:
                self.dist[u] = self._inf
        self.dist_nil = self._inf

        while queue:
            u = queue.popleft()
            if self.dist[u] >= self.dist_nil:
                continue
            for v in self.adjacency[u]:
                w = self.match_right[v]
                if w == _NIL:
                    if self.dist_nil == self._inf:
                        self.dist_nil = self.dist[u] + 1
                elif self.dist[w] == self._inf:
                    self.dist[w] = self.dist[u] + 1
                    queue.append(w)
        return self.dist_nil != self._inf

    def _augment(self, root: int) -> bool:
        """Find one layered augmenting path from root and flip it."""
        # frames: [left vertex, next neighbor position, right vertex taken]
        stack = [[root, 0, _NIL]]
        while stack:
            frame = stack[-1]
            u = frame[0]
            row = self.adjacency[u]
            pushed = False
            while frame[1] < len(row):
                v = row[frame[1]]
                frame[1] += 1
                w = self.match_right[v]
                if w == _NIL:
                    if self.dist_nil == self.dist[u] + 1:
                        frame[2] = v
                        for x, _, y in stack:
                            self.match_left[x] = y
                            self.match_right[y] = x
                        return True
                elif self.dist[w] == self.dist[u] + 1:
                    frame[2] = v
                    stack.append([w, 0, _NIL])
                    pushed = True
                    break
            if not pushed:
                self.dist[u] = self._inf
                stack.pop()
        return False

    def __call__(self) -> List[int]:
        """Run to a maximum matching and return match_left."""
        self.match_left = [_NIL] * self.num_left
        self.match_right = [_NIL] * self.num_right
        while self._layer():
            for u in range(self.num_left):
                if self.match_left[u] == _NIL:
                    self._augment(u)
        return self.match_left

    def deficient_set(self) -> Tuple[List[int], List[int]]:
        """
        Hall witness after a non-perfect maximum matching.

        Returns:
            (S, N(S)) with |N(S)| < |S|, both empty when every left vertex is matched
        """
        free = [u for u in range(self.num_left) if self.match_left[u] == _NIL]
        if not free:
            return [], []
        left = set(free)
        right: Set[int] = set()
        queue = deque(free)
        while queue:
            u = queue.popleft()
            for v in self.adjacency[u]:
                if v in right:
                    continue
                right.add(v)
                w = self.match_right[v]
                if w != _NIL and w not in left:
                    left.add(w)
                    queue.append(w)
        return sorted(left), sorted(right)


@dataclass
class MatchingResult:
    size: int
    match_left: List[int]
    perfect: bool
    witness_left: List[int] = field(default_factory=list)
    witness_right: List[int] = field(default_factory=list)


def max_bipartite_matching(bip: Bip) -> MatchingResult:
    """
    Maximum matching of BIP, with a deficient-set witness when it is not perfect.

    Args:
        bip: Bipartite graph (left u, right v*) with sorted adjacency

    Returns:
        MatchingResult
    """
    matcher = HopcroftKarp(bip.adjacency, bip.n)
    match_left = matcher()
    size = sum(1 for v in match_left if v != _NIL)
    perfect = size == bip.n
    witness_left, witness_right = ([], []) if perfect else matcher.deficient_set()
    return MatchingResult(size, list(match_left), perfect, witness_left, witness_right)


def cycle_decomposition(successor: Dict[int, int]) -> List[List[int]]:
    """Cycles of a permutation given as a successor map, each starting at its least vertex."""
    seen: Set[int] = set()
    cycles = []
    for start in sorted(successor):
        if start in seen:
            continue
        cycle = []
        v = start
        while v not in seen:
            seen.add(v)
            cycle.append(v)
            v = successor[v]
        cycles.append(cycle)
    return cycles


@dataclass
class OneFactor:
    """
    A spanning directed 1-factor given by its successor map.

    Args:
        successor: v -> the head of v's unique out-arc
        events: v -> event index of the arc (v, successor[v])
        blue: tails whose out-arc is blue
    """
    successor: Dict[int, int]
    events: Dict[int, int] = field(default_factory=dict)
    blue: Set[int] = field(default_factory=set)

    def __post_init__(self):
        if sorted(self.successor.values()) != sorted(self.successor):
            raise ValueError("successor map is not a permutation")

    @property
    def cycles(self) -> List[List[int]]:
        return cycle_decomposition(self.successor)

    @property
    def vertices(self) -> List[int]:
        return sorted(self.successor)

    def arcs(self) -> List[Arc]:
        return [(v, self.successor[v]) for v in sorted(self.successor)]

    def to_dict(self) -> Dict[str, Any]:
        """Permutation array over the sorted vertex ids, plus arc events and blue tails."""
        vertices = self.vertices
        return {"vertices": vertices,
                "successor": [self.successor[v] for v in vertices],
                "events": [self.events.get(v) for v in vertices],
                "blue": sorted(self.blue)}

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "OneFactor":
        successor = [int(w) for w in record["successor"]]
        vertices = [int(v) for v in record.get("vertices", range(len(successor)))]
        events = record.get("events") or [None] * len(vertices)
        return cls(dict(zip(vertices, successor)),
                   {v: int(t) for v, t in zip(vertices, events) if t is not None},
                   {int(v) for v in record.get("blue", [])})


def _factor_from_matching(match_left: List[int], bip: Bip, forbidden: Set[Arc]) -> OneFactor:
    successor = {u: v for u, v in enumerate(match_left)}
    events = {u: bip.arc_events[(u, v)] for u, v in successor.items()}
    blue = {u for u, v in successor.items() if (u, v) in forbidden}
    return OneFactor(successor, events, blue)


def randomized_perfect_matching(bip: Bip, rng: np.random.Generator,
                                forbidden: Optional[Set[Arc]] = None) -> OneFactor:
    """
    Perfect matching whose restriction to A-hat is invariant under relabeling.

    A uniform permutation tau of the right copies of A-hat relabels the
    graph, the deterministic matcher runs on the relabeled graph and the
    matching is pulled back through tau inverse.

    Args:
        bip: Bipartite graph with A_hat
        rng: Generator of the "matching" stream
        forbidden: Blue arcs, used to color the factor

    Returns:
        OneFactor over the vertices of bip

    Raises:
        MatchingError: BIP has no perfect matching
    """
    forbidden = forbidden or set()
    hat = sorted(bip.A_hat)
    tau = {}
    if hat:
        order = rng.permutation(len(hat))
        tau = {hat[i]: hat[int(j)] for i, j in enumerate(order)}
    tau_inv = {b: a for a, b in tau.items()}

    relabeled = [sorted(tau.get(v, v) for v in row) for row in bip.adjacency]
    matcher = HopcroftKarp(relabeled, bip.n)
    match_left = matcher()
    size = sum(1 for v in match_left if v != _NIL)
    if size < bip.n:
        left, right = matcher.deficient_set()
        raise MatchingError(f"maximum matching {size} < {bip.n}",
                            {"size": size, "witness_left": left,
                             "witness_right": [tau_inv.get(v, v) for v in right]})

    pulled = [tau_inv.get(v, v) for v in match_left]
    return _factor_from_matching(pulled, bip, forbidden)


@dataclass
class FactorQuality:
    cycle_count: int
    cycle_bound: float
    min_saturation_fraction: float
    worst_cycle: List[int]
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"cycle_count": self.cycle_count, "cycle_bound": self.cycle_bound,
                "min_saturation_fraction": self.min_saturation_fraction, "pass": self.passed}


def saturation_needed(length: int) -> int:
    """ceil(9/10 * length) in integer arithmetic."""
    num = PIPELINE_CONFIG["saturation_numerator"]
    den = PIPELINE_CONFIG["saturation_denominator"]
    return (num * length + den - 1) // den


def factor_quality(factor: OneFactor, A_hat: Set[int], n: Optional[int] = None) -> FactorQuality:
    """
    Check the cycle-count and A-hat proportion targets.

    Args:
        factor: 1-factor
        A_hat: Saturated vertices not targeted by a restricted vertex
        n: Vertex count for the 2 ln n bound (defaults to the factor size)

    Returns:
        FactorQuality; passed iff both targets hold
    """
    cycles = factor.cycles
    n = n or len(factor.successor)
    bound = PIPELINE_CONFIG["cycle_bound_factor"] * ln(n)

    min_fraction, worst, saturated_ok = 1.0, [], True
    for cycle in cycles:
        inside = sum(1 for v in cycle if v in A_hat)
        fraction = inside / len(cycle)
        if inside < saturation_needed(len(cycle)):
            saturated_ok = False
        if fraction < min_fraction or not worst:
            min_fraction, worst = fraction, cycle

    passed = len(cycles) <= bound and saturated_ok
    return FactorQuality(len(cycles), bound, min_fraction, worst, passed)


def require_quality(quality: FactorQuality, strict: Optional[bool] = None) -> None:
    """Raise FactorQualityError when strict mode is on and the factor misses a target."""
    strict = PIPELINE_CONFIG["strict_quality"] if strict is None else strict
    if strict and not quality.passed:
        raise FactorQualityError(
            f"factor has {quality.cycle_count} cycles (bound {quality.cycle_bound:.2f}), "
            f"min A-hat fraction {quality.min_saturation_fraction:.3f}",
            quality.to_dict() | {"witness_cycle": quality.worst_cycle})


def project_onto(successor: Dict[int, int], keep: Set[int]) -> Dict[int, int]:
    """
    Delete the vertices outside keep from every cycle.

    A cycle (x1 x2 y1 y2 x3) with x in keep and y outside becomes (x1 x2 x3).
    """
    projected: Dict[int, int] = {}
    for cycle in cycle_decomposition(successor):
        kept = [v for v in cycle if v in keep]
        for i, v in enumerate(kept):
            projected[v] = kept[(i + 1) % len(kept)]
    return projected

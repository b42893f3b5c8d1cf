"""
The on-line orientation algorithm.

Every non-loop event is directed the moment it arrives. Step I alternates
at the first vertex until it is saturated and at the second vertex after
that; Step II continues the alternation of B vertices on their A-B edges
and flips a fair coin for everything else.
"""

import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Any, Optional, List, Tuple, Iterable

from process import EdgeEvent, UniformBuffer
from utils import rng_stream

logger = logging.getLogger("onlineham.orient")


class Direction(str, Enum):
    OUT = "out"
    IN = "in"

    @property
    def flipped(self) -> "Direction":
        return Direction.IN if self is Direction.OUT else Direction.OUT


class Rule(str, Enum):
    STEP1_FIRST = "stepI-first"
    STEP1_SECOND = "stepI-second"
    AB_RULE1 = "stepII-AB-rule1"
    AB_RULE2 = "stepII-AB-rule2"
    AB_RULE3 = "stepII-AB-rule3"
    AB_RULE4 = "stepII-AB-rule4"
    STEP2_RANDOM = "stepII-random"
    LOOP_SKIPPED = "loop-skipped"


class Step(str, Enum):
    ONE = "I"
    TWO = "II"


@dataclass(frozen=True)
class Slot:
    """An edge seen from one endpoint: event index, other endpoint, direction at this endpoint."""
    t: int
    other: int
    direction: Direction


@dataclass(frozen=True)
class OrientedEdge:
    t: int
    tail: int
    head: int
    blue: bool
    rule: Rule

    def to_dict(self) -> Dict[str, Any]:
        return {"t": self.t, "tail": self.tail, "head": self.head, "blue": self.blue, "rule": self.rule.value}

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "OrientedEdge":
        return cls(int(record["t"]), int(record["tail"]), int(record["head"]),
                   bool(record["blue"]), Rule(record["rule"]))


def _edge_at(t: int, v: int, other: int, direction: Direction, blue: bool, rule: Rule) -> OrientedEdge:
    """Build the oriented edge whose direction is given as seen from v."""
    if direction is Direction.OUT:
        return OrientedEdge(t, v, other, blue, rule)
    return OrientedEdge(t, other, v, blue, rule)


class OrientState:
    """
    Per-vertex counters and alternation parities of the on-line algorithm.

    Besides the counters the state keeps, per vertex, the slots each counter
    consumed (first-vertex edges, second-vertex edges, A-B edges) and the
    neglected edges, so later stages never have to rescan the event log.
    """

    def __init__(self, n: int, step1_len: int, sat_threshold: int):
        self.n = n
        self.step1_len = step1_len
        self.sat_threshold = sat_threshold
        self.step = Step.ONE
        self.A: Optional[frozenset] = None
        self.in_A: List[bool] = [False] * n

        self.d1 = [0] * n
        self.d2 = [0] * n
        self.dAB = [0] * n
        self.parity_first = [Direction.OUT] * n
        self.parity_second = [Direction.IN] * n
        self.parity_step2: List[Optional[Direction]] = [None] * n
        self.step2_rule: List[Optional[Rule]] = [None] * n
        self.saturated = [False] * n

        self.first_slots: List[List[Slot]] = [[] for _ in range(n)]
        self.second_slots: List[List[Slot]] = [[] for _ in range(n)]
        self.ab_slots: List[List[Slot]] = [[] for _ in range(n)]
        # (t, direction at v, first vertex of the event)
        self.neglected: List[List[Tuple[int, Direction, int]]] = [[] for _ in range(n)]

        self.rule_counts: Counter = Counter()
        self.last_t = 0

    def freeze_a(self) -> frozenset:
        """Fix A as the saturated set and switch to Step II."""
        if self.A is None:
            self.A = frozenset(v for v in range(self.n) if self.saturated[v])
            for v in self.A:
                self.in_A[v] = True
            self.step = Step.TWO
            logger.debug(f"Step I closed at t={self.last_t}: |A|={len(self.A)} of {self.n}")
        return self.A


def orient_step1(state: OrientState, event: EdgeEvent) -> Optional[OrientedEdge]:
    """
    Orient a Step I event.

    Args:
        state: Orientation state (updated in place)
        event: Event with t <= step1_len

    Returns:
        The oriented edge, or None for a loop
    """
    state.last_t = event.t
    if event.is_loop:
        state.rule_counts[Rule.LOOP_SKIPPED] += 1
        return None

    v, w = event.first, event.second
    if not state.saturated[v]:
        direction = state.parity_first[v]
        state.parity_first[v] = direction.flipped
        state.d1[v] += 1
        state.first_slots[v].append(Slot(event.t, w, direction))
        state.neglected[w].append((event.t, direction.flipped, v))
        if state.d1[v] >= state.sat_threshold:
            state.saturated[v] = True
        state.rule_counts[Rule.STEP1_FIRST] += 1
        return _edge_at(event.t, v, w, direction, event.blue, Rule.STEP1_FIRST)

    direction = state.parity_second[w]
    state.parity_second[w] = direction.flipped
    state.d2[w] += 1
    state.second_slots[w].append(Slot(event.t, v, direction))
    state.rule_counts[Rule.STEP1_SECOND] += 1
    return _edge_at(event.t, w, v, direction, event.blue, Rule.STEP1_SECOND)


def _start_ab_parity(state: OrientState, v: int) -> Tuple[Direction, Rule]:
    if state.d1[v] >= 1:
        return state.parity_first[v], Rule.AB_RULE1
    if state.d2[v] >= 1:
        return state.parity_second[v], Rule.AB_RULE2
    if state.neglected[v]:
        return state.neglected[v][0][1].flipped, Rule.AB_RULE3
    return Direction.OUT, Rule.AB_RULE4


def orient_step2(state: OrientState, event: EdgeEvent, rng: UniformBuffer) -> Optional[OrientedEdge]:
    """
    Orient a Step II event.

    A-B edges continue the alternation at the B endpoint; the parity stream
    is picked by rules 1-4 on the first A-B edge and kept afterwards. A-A and
    B-B edges get a uniformly random direction.

    Args:
        state: Orientation state with A frozen
        event: Event with t > step1_len
        rng: Coin source for the random orientations

    Returns:
        The oriented edge, or None for a loop
    """
    state.last_t = event.t
    if event.is_loop:
        state.rule_counts[Rule.LOOP_SKIPPED] += 1
        return None
    if state.A is None:
        state.freeze_a()

    u, w = event.first, event.second
    if state.in_A[u] != state.in_A[w]:
        v, a = (w, u) if state.in_A[u] else (u, w)
        if state.parity_step2[v] is None:
            direction, rule = _start_ab_parity(state, v)
            state.step2_rule[v] = rule
        else:
            direction, rule = state.parity_step2[v], state.step2_rule[v]
        state.parity_step2[v] = direction.flipped
        state.dAB[v] += 1
        state.ab_slots[v].append(Slot(event.t, a, direction))
        state.rule_counts[rule] += 1
        return _edge_at(event.t, v, a, direction, event.blue, rule)

    state.rule_counts[Rule.STEP2_RANDOM] += 1
    if rng.random() < 0.5:
        return OrientedEdge(event.t, u, w, event.blue, Rule.STEP2_RANDOM)
    return OrientedEdge(event.t, w, u, event.blue, Rule.STEP2_RANDOM)


class OnlineOrienter:
    """Feeds events one at a time to the Step I / Step II rules and keeps the output."""

    def __init__(self, n: int, step1_len: int, sat_threshold: int, seed: int):
        self.state = OrientState(n, step1_len, sat_threshold)
        self._coins = UniformBuffer(rng_stream(seed, "orient"))
        self.oriented: List[OrientedEdge] = []

    def feed(self, event: EdgeEvent) -> Optional[OrientedEdge]:
        if event.t <= self.state.step1_len:
            edge = orient_step1(self.state, event)
        else:
            edge = orient_step2(self.state, event, self._coins)
        if edge is not None:
            self.oriented.append(edge)
        return edge

    def finish(self) -> OrientState:
        """Freeze A if the stream ended inside Step I and return the state."""
        self.state.freeze_a()
        return self.state


def orient_events(events: Iterable[EdgeEvent], n: int, step1_len: int,
                  sat_threshold: int, seed: int) -> Tuple[OrientState, List[OrientedEdge]]:
    """
    Orient a complete event prefix.

    Returns:
        (final state, oriented edges in event order)
    """
    orienter = OnlineOrienter(n, step1_len, sat_threshold, seed)
    for event in events:
        orienter.feed(event)
    state = orienter.finish()
    logger.debug(f"oriented {len(orienter.oriented)} edges: {dict(state.rule_counts)}")
    return state, orienter.oriented

"""
Post-hoc vertex classification and the typicality report.

Every vertex ends up saturated (A), blossomed (B1) or restricted (B2); a
restricted vertex is partially blossomed, a bud, or a violation when it is
neither (possible at finite n).
"""

import logging
from collections import deque
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Dict, Any, Optional, List, Tuple, Set

from orient import OrientState
from process import EdgeEvent
from utils import ln, lnln

logger = logging.getLogger("onlineham.classify")


class VertexClass(str, Enum):
    SATURATED = "saturated"
    BLOSSOM = "blossom"
    PARTIAL = "partial"
    BUD = "bud"
    VIOLATION = "violation"


class PartialCase(str, Enum):
    """Cases of a partially blossomed vertex, in priority order."""
    D1_TWO = "i"
    D2_TWO = "ii"
    AB_TWO = "iii"
    D1_D2 = "iv"
    D1_AB = "v"
    D2_AB = "vi"


@dataclass
class Classification:
    n: int
    classes: List[VertexClass]
    A: frozenset
    B1: frozenset
    B2: frozenset
    cases: Dict[int, PartialCase] = field(default_factory=dict)
    violations: Dict[int, str] = field(default_factory=dict)
    # bud -> first vertex of its first neglected edge
    bud_sources: Dict[int, int] = field(default_factory=dict)

    @property
    def restricted(self) -> List[int]:
        return sorted(self.B2)

    def counts(self) -> Dict[str, int]:
        return {"A": len(self.A), "B1": len(self.B1), "B2": len(self.B2),
                "partial": len(self.cases), "bud": len(self.bud_sources),
                "violation": len(self.violations)}


def partial_case(d1: int, d2: int, dab: int) -> Optional[PartialCase]:
    """First applicable partial case, or None when d1 + d2 + dAB < 2."""
    if d1 + d2 + dab < 2:
        return None
    if d1 >= 2:
        return PartialCase.D1_TWO
    if d2 >= 2:
        return PartialCase.D2_TWO
    if dab >= 2:
        return PartialCase.AB_TWO
    if d1 == 1 and d2 == 1:
        return PartialCase.D1_D2
    if d1 == 1 and dab == 1:
        return PartialCase.D1_AB
    return PartialCase.D2_AB


def _violation_reason(d1: int, d2: int, dab: int, neglected: int) -> str:
    if d1 + d2 + dab == 0:
        return "no-counted-edges"
    if dab == 1:
        return "ab-edge-without-neglected"
    return "single-step1-edge" if neglected else "single-step1-edge-no-neglected"


def classify_vertices(state: OrientState, m_star: Optional[int] = None) -> Classification:
    """
    Assign every vertex exactly one class.

    Args:
        state: Orientation state after the whole prefix was fed
        m_star: Stopping time, for logging

    Returns:
        Classification with violations enumerated
    """
    A = state.A if state.A is not None else state.freeze_a()
    n = state.n
    classes: List[VertexClass] = []
    B1: Set[int] = set()
    B2: Set[int] = set()
    cases: Dict[int, PartialCase] = {}
    violations: Dict[int, str] = {}
    bud_sources: Dict[int, int] = {}

    for v in range(n):
        if v in A:
            classes.append(VertexClass.SATURATED)
            continue
        if state.dAB[v] >= state.sat_threshold:
            classes.append(VertexClass.BLOSSOM)
            B1.add(v)
            continue

        B2.add(v)
        d1, d2, dab = state.d1[v], state.d2[v], state.dAB[v]
        case = partial_case(d1, d2, dab)
        if case is not None:
            classes.append(VertexClass.PARTIAL)
            cases[v] = case
        elif dab == 1 and state.neglected[v]:
            classes.append(VertexClass.BUD)
            bud_sources[v] = state.neglected[v][0][2]
        else:
            classes.append(VertexClass.VIOLATION)
            violations[v] = _violation_reason(d1, d2, dab, len(state.neglected[v]))

    result = Classification(n, classes, frozenset(A), frozenset(B1), frozenset(B2),
                            cases, violations, bud_sources)
    logger.debug(f"classified at m*={m_star}: {result.counts()}")
    if violations:
        logger.warning(f"{len(violations)} restricted vertices are neither partial nor bud")
    return result


@dataclass
class TypicalityReport:
    n: int
    A: int
    B1: int
    B2: int
    a_bound: float
    a_ok: bool
    b1_ok: bool
    b2_bound: float
    b2_ok: bool
    min_degree_without_bb: int
    degree_ok: bool
    violations: int
    restricted_ok: bool
    close_pair: Optional[Tuple[int, int]]
    distance_ok: bool
    unrevealed_aa: int
    unrevealed_bound: float
    unrevealed_ok: bool
    bud_sources_in_b2: List[int] = field(default_factory=list)

    @property
    def typical(self) -> bool:
        return (self.a_ok and self.b1_ok and self.b2_ok and self.degree_ok
                and self.restricted_ok and self.distance_ok and self.unrevealed_ok)

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["close_pair"] = list(self.close_pair) if self.close_pair else None
        payload["typical"] = self.typical
        return payload


def _close_restricted_pair(B2: frozenset, events: List[EdgeEvent]) -> Optional[Tuple[int, int]]:
    """
    Find two restricted vertices at distance <= 2, or None.

    Any such path only uses edges incident to B2, so the search is limited to them.
    """
    if len(B2) < 2:
        return None
    adjacency: Dict[int, Set[int]] = {}
    for e in events:
        if e.is_loop:
            continue
        if e.first in B2 or e.second in B2:
            adjacency.setdefault(e.first, set()).add(e.second)
            adjacency.setdefault(e.second, set()).add(e.first)

    for source in sorted(B2):
        seen = {source: 0}
        queue = deque([source])
        while queue:
            x = queue.popleft()
            if seen[x] == 2:
                continue
            for y in sorted(adjacency.get(x, ())):
                if y in seen:
                    continue
                seen[y] = seen[x] + 1
                if y in B2:
                    return (source, y)
                queue.append(y)
    return None


def typicality(classification: Classification, events: List[EdgeEvent], m_star: int,
               state: Optional[OrientState] = None, consumed: Optional[Set[int]] = None) -> TypicalityReport:
    """
    Measure the six typicality conditions on a finished trial.

    Degrees, distances and unrevealed edges are read off the m* prefix;
    degrees count distinct pairs.

    Args:
        classification: Result of classify_vertices
        events: Event stream (only the first m_star events are read)
        m_star: Stopping time
        state: Orientation state, used for the Step I length
        consumed: Event indices consumed by FIVEINOUT (empty if not built yet)

    Returns:
        TypicalityReport with raw counts and booleans
    """
    n = classification.n
    A, B1, B2 = classification.A, classification.B1, classification.B2
    B = B1 | B2
    consumed = consumed or set()
    step1_len = state.step1_len if state is not None else 0

    eps = (lnln(n) ** 12) / (ln(n) ** 2) if n > 1 else 1.0
    a_bound = n - eps * n
    b2_bound = ln(n) ** 13

    prefix = events[:m_star]
    pairs: Set[Tuple[int, int]] = set()
    unrevealed = 0
    for e in prefix:
        if e.is_loop:
            continue
        if not (e.first in B and e.second in B):
            pairs.add(e.pair)
        if e.t > step1_len and e.first in A and e.second in A and e.t not in consumed:
            unrevealed += 1
    degree = [0] * n
    for u, v in pairs:
        degree[u] += 1
        degree[v] += 1
    min_deg = min(degree) if degree else 0

    close_pair = _close_restricted_pair(B2, prefix)
    bud_sources_in_b2 = sorted(v for v, src in classification.bud_sources.items() if src in B2)

    report = TypicalityReport(
        n=n, A=len(A), B1=len(B1), B2=len(B2),
        a_bound=a_bound, a_ok=len(A) >= a_bound, b1_ok=len(B1) <= eps * n,
        b2_bound=b2_bound, b2_ok=len(B2) <= b2_bound,
        min_degree_without_bb=min_deg, degree_ok=min_deg >= 2,
        violations=len(classification.violations), restricted_ok=not classification.violations,
        close_pair=close_pair, distance_ok=close_pair is None,
        unrevealed_aa=unrevealed, unrevealed_bound=n * ln(n) / 3,
        unrevealed_ok=unrevealed >= n * ln(n) / 3,
        bud_sources_in_b2=bud_sources_in_b2,
    )
    if not report.typical:
        logger.debug(f"atypical configuration at m*={m_star}: {report.to_dict()}")
    return report

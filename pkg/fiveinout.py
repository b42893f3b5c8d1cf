"""
The almost-5-in-5-out subgraph and its bipartite double cover.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Any, Optional, List, Tuple, Set, Iterable

from classify import Classification, PartialCase, VertexClass
from errors import ConstructionDeficitError
from orient import OrientState, OrientedEdge, Slot, Direction
from process import EdgeEvent
from config import PIPELINE_CONFIG

logger = logging.getLogger("onlineham.fiveinout")

Arc = Tuple[int, int]


@dataclass
class FiveInOut:
    """
    Per-vertex OUT and IN neighbor lists.

    Entries are (neighbor, event index) in the order they were selected.
    """
    n: int
    out: List[List[Tuple[int, int]]]
    inn: List[List[Tuple[int, int]]]
    consumed: Set[int] = field(default_factory=set)

    def arcs(self) -> Dict[Arc, int]:
        """Directed arc -> earliest event index realizing it inside FIVEINOUT."""
        result: Dict[Arc, int] = {}
        for v in range(self.n):
            for w, t in self.out[v]:
                arc = (v, w)
                result[arc] = min(t, result.get(arc, t))
            for w, t in self.inn[v]:
                arc = (w, v)
                result[arc] = min(t, result.get(arc, t))
        return result

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "out": [[list(e) for e in row] for row in self.out],
            "in": [[list(e) for e in row] for row in self.inn],
            "consumed": sorted(self.consumed),
        }

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "FiveInOut":
        out = [[(int(w), int(t)) for w, t in row] for row in record["out"]]
        inn = [[(int(w), int(t)) for w, t in row] for row in record["in"]]
        consumed = record.get("consumed")
        if consumed is None:
            consumed = [t for row in out + inn for _, t in row]
        return cls(int(record["n"]), out, inn, set(consumed))


@dataclass
class Bip:
    """
    Bipartite double cover of FIVEINOUT: left vertex u, right vertex v* per arc u -> v.
    """
    n: int
    adjacency: List[List[int]]
    arc_events: Dict[Arc, int]
    A_hat: frozenset

    @property
    def edge_count(self) -> int:
        return sum(len(row) for row in self.adjacency)

    def left_degree(self, u: int) -> int:
        return len(self.adjacency[u])

    def right_degrees(self) -> List[int]:
        degree = [0] * self.n
        for row in self.adjacency:
            for v in row:
                degree[v] += 1
        return degree


def forbidden_arcs(oriented: Iterable[OrientedEdge]) -> Set[Arc]:
    """Arcs whose every realization in the oriented stream is blue."""
    blue: Set[Arc] = set()
    clean: Set[Arc] = set()
    for e in oriented:
        (blue if e.blue else clean).add((e.tail, e.head))
    return blue - clean


def _split(slots: List[Slot], out_size: int) -> Tuple[List[Tuple[int, int]], List[Tuple[int, int]]]:
    out = [(s.other, s.t) for s in slots if s.direction is Direction.OUT][:out_size]
    inn = [(s.other, s.t) for s in slots if s.direction is Direction.IN][:out_size]
    return out, inn


def _partial_slots(state: OrientState, v: int, case: PartialCase) -> List[Slot]:
    first, second, ab = state.first_slots[v], state.second_slots[v], state.ab_slots[v]
    if case is PartialCase.D1_TWO:
        return first[:2]
    if case is PartialCase.D2_TWO:
        return second[:2]
    if case is PartialCase.AB_TWO:
        return ab[:2]
    if case is PartialCase.D1_D2:
        return [first[0], second[0]]
    if case is PartialCase.D1_AB:
        return [first[0], ab[0]]
    return [second[0], ab[0]]


def build_five_in_out(state: OrientState, classification: Classification,
                      out_size: Optional[int] = None) -> FiveInOut:
    """
    Select OUT(v) and IN(v) for every vertex.

    Saturated vertices use their first sat_threshold first-vertex edges that
    do not end in B2; blossoms use their first 2 * out_size A-B edges;
    restricted vertices use the two edges their case designates (a bud uses
    its A-B edge and its first neglected edge).

    Args:
        state: Orientation state holding the per-vertex slots
        classification: Vertex classes
        out_size: Size of OUT/IN for saturated and blossomed vertices

    Returns:
        FiveInOut

    Raises:
        ConstructionDeficitError: some vertex cannot fill its OUT or IN
    """
    out_size = out_size or PIPELINE_CONFIG["out_size"]
    n = state.n
    if classification.violations:
        raise ConstructionDeficitError("classification has violation vertices",
                                       list(classification.violations),
                                       {"reasons": dict(classification.violations)})

    B2 = classification.B2
    out: List[List[Tuple[int, int]]] = [[] for _ in range(n)]
    inn: List[List[Tuple[int, int]]] = [[] for _ in range(n)]
    deficit: Dict[int, str] = {}

    for v in range(n):
        cls = classification.classes[v]
        if cls is VertexClass.SATURATED:
            usable = [s for s in state.first_slots[v][:state.sat_threshold] if s.other not in B2]
            out[v], inn[v] = _split(usable, out_size)
            if len(out[v]) < out_size or len(inn[v]) < out_size:
                deficit[v] = f"saturated: {len(usable)} usable slots, {len(out[v])} out / {len(inn[v])} in"
        elif cls is VertexClass.BLOSSOM:
            out[v], inn[v] = _split(state.ab_slots[v][:2 * out_size], out_size)
            if len(out[v]) < out_size or len(inn[v]) < out_size:
                deficit[v] = f"blossom: {len(out[v])} out / {len(inn[v])} in"
        elif cls is VertexClass.PARTIAL:
            out[v], inn[v] = _split(_partial_slots(state, v, classification.cases[v]), 1)
            if not out[v] or not inn[v]:
                deficit[v] = f"partial case {classification.cases[v].value}: both edges point the same way"
        elif cls is VertexClass.BUD:
            t, direction, first = state.neglected[v][0]
            slots = [state.ab_slots[v][0], Slot(t, first, direction)]
            out[v], inn[v] = _split(slots, 1)
            if not out[v] or not inn[v]:
                deficit[v] = "bud: A-B edge and neglected edge point the same way"

    if deficit:
        logger.debug(f"construction deficit at {len(deficit)} vertices")
        raise ConstructionDeficitError(f"{len(deficit)} vertices cannot fill OUT/IN",
                                       list(deficit), {"reasons": {str(k): r for k, r in deficit.items()}})

    consumed = {t for v in range(n) for _, t in out[v] + inn[v]}
    five = FiveInOut(n, out, inn, consumed)
    logger.debug(f"FIVEINOUT: {len(five.arcs())} arcs from {len(consumed)} events")
    return five


def build_bip(five: FiveInOut, classification: Classification) -> Bip:
    """
    Build BIP and the set A-hat.

    Args:
        five: FIVEINOUT
        classification: Vertex classes (for A and B2)

    Returns:
        Bip with sorted adjacency lists
    """
    arc_events = five.arcs()
    adjacency: List[List[int]] = [[] for _ in range(five.n)]
    for (u, v) in arc_events:
        adjacency[u].append(v)
    for row in adjacency:
        row.sort()

    targets = {w for v in classification.B2 for w, _ in five.out[v]}
    A_hat = frozenset(classification.A - targets)
    return Bip(five.n, adjacency, arc_events, A_hat)


def blue_diagnostics(five: FiveInOut, classification: Classification,
                     events: List[EdgeEvent], m_star: int) -> Dict[str, int]:
    """
    Blue-edge counts of a trial.

    Args:
        five: FIVEINOUT
        classification: Vertex classes (for B)
        events: Event stream indexed by t - 1
        m_star: Stopping time; the multiplicity count runs over the m* prefix

    Returns:
        Dict with the blue events FIVEINOUT consumed, those touching B, and
        the vertices incident to more than one distinct blue pair of the process
    """
    B = classification.B1 | classification.B2
    used = [events[t - 1] for t in sorted(five.consumed) if events[t - 1].blue]

    pairs_at: Dict[int, Set[Tuple[int, int]]] = {}
    for e in events[:m_star]:
        if e.blue and not e.is_loop:
            pairs_at.setdefault(e.first, set()).add(e.pair)
            pairs_at.setdefault(e.second, set()).add(e.pair)
    return {
        "blue_fiveinout": len(used),
        "blue_fiveinout_at_B": sum(1 for e in used if e.first in B or e.second in B),
        "blue_multi_vertices": sum(1 for pairs in pairs_at.values() if len(pairs) > 1),
    }

"""
Compression of red (non A-hat) vertices.

A red vertex v with neighbors v- -> v -> v+ on its factor cycle is replaced,
together with both neighbors, by a new vertex v' whose in-arc is the in-arc
of v- and whose out-arc is the out-arc of v+. v' is red iff v- or v+ was.
Every step drops two vertices and keeps the number of cycles.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Any, List, Tuple, Set, Optional

from errors import CompressionStuckError
from factor import OneFactor

logger = logging.getLogger("onlineham.compress")


@dataclass(frozen=True)
class CompressionRecord:
    v_minus: int
    v: int
    v_plus: int
    v_prime: int
    # blue flags of the hidden arcs v- -> v and v -> v+
    hidden_blue: Tuple[bool, bool] = (False, False)

    @property
    def segment(self) -> Tuple[int, int, int]:
        return (self.v_minus, self.v, self.v_plus)


@dataclass
class CompressionMap:
    """Ordered compression records plus lookup tables for expanding compressed ids."""
    origin_n: int
    red: Set[int]
    records: List[CompressionRecord] = field(default_factory=list)
    _by_id: Dict[int, CompressionRecord] = field(default_factory=dict, repr=False)

    def add(self, record: CompressionRecord) -> None:
        self.records.append(record)
        self._by_id[record.v_prime] = record

    def expand(self, v: int) -> List[int]:
        """Original vertices abbreviated by v, in path order."""
        out: List[int] = []
        stack = [v]
        while stack:
            x = stack.pop()
            record = self._by_id.get(x)
            if record is None:
                out.append(x)
            else:
                stack.extend(reversed(record.segment))
        return out

    def hidden_blue_arcs(self, v: int) -> List[Tuple[int, int]]:
        """Blue original arcs hidden inside the segment of v."""
        arcs = []
        stack = [v]
        while stack:
            record = self._by_id.get(stack.pop())
            if record is None:
                continue
            if record.hidden_blue[0]:
                arcs.append((self.expand(record.v_minus)[-1], self.expand(record.v)[0]))
            if record.hidden_blue[1]:
                arcs.append((self.expand(record.v)[-1], self.expand(record.v_plus)[0]))
            stack.extend(record.segment)
        return arcs

    def entry_map(self, vertices: List[int]) -> Dict[int, int]:
        """Original vertex -> compressed vertex whose segment starts there."""
        return {self.expand(v)[0]: v for v in vertices}

    def exit_map(self, vertices: List[int]) -> Dict[int, int]:
        """Original vertex -> compressed vertex whose segment ends there."""
        return {self.expand(v)[-1]: v for v in vertices}

    def to_dict(self) -> Dict[str, Any]:
        return {"origin_n": self.origin_n, "red": sorted(self.red),
                "records": [[r.v_minus, r.v, r.v_plus, r.v_prime, list(r.hidden_blue)] for r in self.records]}

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "CompressionMap":
        cmap = cls(int(record["origin_n"]), {int(v) for v in record["red"]})
        for row in record["records"]:
            hidden = tuple(bool(b) for b in row[4]) if len(row) > 4 else (False, False)
            cmap.add(CompressionRecord(int(row[0]), int(row[1]), int(row[2]), int(row[3]), hidden))
        return cmap


def compress_factor(factor: OneFactor, A_hat: Set[int],
                    first_id: Optional[int] = None) -> Tuple[OneFactor, CompressionMap]:
    """
    Compress every vertex outside A-hat.

    Red vertices are processed in ascending id order, recomputed after
    each compression, until none is left.

    Args:
        factor: 1-factor over the working set
        A_hat: Vertices that stay uncolored
        first_id: First id for new vertices (default: one past the largest vertex)

    Returns:
        (compressed factor, CompressionMap)

    Raises:
        CompressionStuckError: a red vertex sits on a cycle of length 1 or 2
    """
    succ = dict(factor.successor)
    pred = {w: v for v, w in succ.items()}
    blue = set(factor.blue)
    events = dict(factor.events)
    red = {v for v in succ if v not in A_hat}
    cmap = CompressionMap(origin_n=len(succ), red=set(red))
    next_id = first_id if first_id is not None else (max(succ) + 1 if succ else 0)

    while red:
        v = min(red)
        v_minus, v_plus = pred[v], succ[v]
        if v_minus == v or v_minus == v_plus:
            raise CompressionStuckError(
                f"red vertex {v} lies on a cycle of length {1 if v_minus == v else 2}",
                {"vertex": v, "compressions": len(cmap.records)})

        x = next_id
        next_id += 1
        record = CompressionRecord(
            v_minus, v, v_plus, x,
            (v_minus in blue, v in blue),
        )
        cmap.add(record)

        before, after = pred[v_minus], succ[v_plus]
        for y in (v_minus, v, v_plus):
            del succ[y]
            del pred[y]
            red.discard(y)
        if before == v_plus:
            succ[x] = pred[x] = x
        else:
            succ[x], pred[x] = after, before
            succ[before] = x
            pred[after] = x
        if v_plus in blue:
            blue.add(x)
        if v_plus in events:
            events[x] = events[v_plus]
        for y in (v_minus, v, v_plus):
            blue.discard(y)
            events.pop(y, None)
        if v_minus in cmap.red or v_plus in cmap.red:
            red.add(x)
            cmap.red.add(x)

    if cmap.records:
        logger.debug(f"compressed {len(cmap.records)} times: {cmap.origin_n} -> {len(succ)} vertices")
    return OneFactor(succ, events, blue), cmap


def decompress_cycle(cycle: List[int], cmap: CompressionMap) -> List[int]:
    """
    Expand every compressed vertex of a cycle into the segment it abbreviates.

    Args:
        cycle: Cycle over the compressed vertex set
        cmap: Map produced by compress_factor

    Returns:
        Cycle over the original vertex set
    """
    out: List[int] = []
    for v in cycle:
        out.extend(cmap.expand(v))
    return out

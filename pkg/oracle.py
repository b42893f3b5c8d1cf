"""
Exact small-instance checks: Held-Karp Hamiltonicity, cycle verification
and brute-force references used by the tests.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional, List, Tuple, Set, Iterable, Sequence

from config import HARNESS_CONFIG
from errors import OracleRefusedError
from orient import OrientedEdge

logger = logging.getLogger("onlineham.oracle")

Arc = Tuple[int, int]


@dataclass
class Digraph:
    """
    Directed multigraph without loops.

    Args:
        n: Vertex count
        multiplicity: arc -> [clean count, blue count]
    """
    n: int
    multiplicity: Dict[Arc, List[int]] = field(default_factory=dict)

    def add_arc(self, tail: int, head: int, blue: bool = False) -> None:
        if tail == head:
            return
        counts = self.multiplicity.setdefault((tail, head), [0, 0])
        counts[1 if blue else 0] += 1

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable[Arc]) -> "Digraph":
        graph = cls(n)
        for u, v in arcs:
            graph.add_arc(u, v)
        return graph

    @classmethod
    def from_oriented(cls, n: int, oriented: Iterable[OrientedEdge]) -> "Digraph":
        graph = cls(n)
        for e in oriented:
            graph.add_arc(e.tail, e.head, e.blue)
        return graph

    @property
    def adjacency(self) -> List[List[int]]:
        """Sorted out-neighbor lists."""
        rows: List[List[int]] = [[] for _ in range(self.n)]
        for u, v in sorted(self.multiplicity):
            rows[u].append(v)
        return rows

    def has_arc(self, tail: int, head: int) -> bool:
        return (tail, head) in self.multiplicity

    def blue_only(self) -> Set[Arc]:
        """Arcs with no clean realization."""
        return {arc for arc, (clean, _) in self.multiplicity.items() if clean == 0}

    def min_in_out_degree(self) -> Tuple[int, int]:
        indeg, outdeg = [0] * self.n, [0] * self.n
        for u, v in self.multiplicity:
            outdeg[u] += 1
            indeg[v] += 1
        return (min(indeg) if indeg else 0), (min(outdeg) if outdeg else 0)


def held_karp(digraph: Digraph, forbidden: Optional[Set[Arc]] = None,
              limit: Optional[int] = None) -> Optional[List[int]]:
    """
    Exact directed Hamilton cycle search by dynamic programming over subsets.

    reach[mask] is the bitset of vertices v such that a path from 0 visits
    exactly mask and ends at v. Memory is 2^n integers.

    Args:
        digraph: Graph to search
        forbidden: Arcs the cycle may not use
        limit: Largest n accepted (default oracle_hard_limit)

    Returns:
        The cycle as a vertex list starting at 0, or None

    Raises:
        OracleRefusedError: n above the limit
    """
    limit = limit or HARNESS_CONFIG["oracle_hard_limit"]
    n = digraph.n
    if n > limit:
        raise OracleRefusedError(f"held_karp refuses n={n} > {limit}")
    if n < 2:
        return None
    forbidden = forbidden or set()

    out_mask = [0] * n
    for (u, v) in digraph.multiplicity:
        if (u, v) not in forbidden:
            out_mask[u] |= 1 << v

    full = (1 << n) - 1
    reach = [0] * (1 << n)
    reach[1] = 1
    for mask in range(1, full + 1, 2):
        ends = reach[mask]
        while ends:
            low = ends & -ends
            v = low.bit_length() - 1
            ends ^= low
            step = out_mask[v] & ~mask
            while step:
                bit = step & -step
                step ^= bit
                reach[mask | bit] |= bit

    closing = [v for v in range(1, n) if reach[full] >> v & 1 and out_mask[v] & 1]
    if not closing:
        return None

    cur, mask = closing[0], full
    path = [cur]
    while mask != 1:
        prev_mask = mask ^ (1 << cur)
        cur = next(u for u in range(n) if reach[prev_mask] >> u & 1 and out_mask[u] >> cur & 1)
        mask = prev_mask
        path.append(cur)
    path.reverse()
    return path


def verify_cycle(digraph: Digraph, cycle: Sequence[int],
                 forbidden: Optional[Set[Arc]] = None) -> Tuple[bool, str]:
    """
    Check that cycle is a directed Hamilton cycle of digraph avoiding forbidden.

    Returns:
        (ok, reason) with reason one of ok, unknown-vertex, duplicate,
        wrong-length, missing-arc, forbidden-arc
    """
    forbidden = forbidden or set()
    if any(not 0 <= v < digraph.n for v in cycle):
        return False, "unknown-vertex"
    if len(set(cycle)) != len(cycle):
        return False, "duplicate"
    if len(cycle) != digraph.n or digraph.n < 2:
        return False, "wrong-length"
    for k, u in enumerate(cycle):
        v = cycle[(k + 1) % len(cycle)]
        if not digraph.has_arc(u, v):
            return False, "missing-arc"
        if (u, v) in forbidden:
            return False, "forbidden-arc"
    return True, "ok"


def exhaustive_hamilton(digraph: Digraph, forbidden: Optional[Set[Arc]] = None) -> Optional[List[int]]:
    """Hamilton cycle by trying every ordering of 1..n-1 (tiny n only)."""
    forbidden = forbidden or set()
    if digraph.n < 2:
        return None
    for rest in itertools.permutations(range(1, digraph.n)):
        cycle = [0, *rest]
        if verify_cycle(digraph, cycle, forbidden)[0]:
            return cycle
    return None


def exhaustive_matching_size(adjacency: Sequence[Sequence[int]]) -> int:
    """Maximum bipartite matching by search over used right-vertex sets."""
    rows = [tuple(row) for row in adjacency]

    @lru_cache(maxsize=None)
    def best(i: int, used: int) -> int:
        if i == len(rows):
            return 0
        result = best(i + 1, used)
        for v in rows[i]:
            if not used >> v & 1:
                result = max(result, 1 + best(i + 1, used | 1 << v))
        return result

    return best(0, 0)

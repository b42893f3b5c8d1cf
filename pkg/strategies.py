"""
Hypothesis strategies shared by the property tests.
"""

from typing import Dict, List, Tuple

from hypothesis import strategies as st


@st.composite
def successor_maps(draw, min_size: int = 1, max_size: int = 12) -> Dict[int, int]:
    """A uniformly drawn permutation of range(n) as a successor map."""
    n = draw(st.integers(min_size, max_size))
    image = draw(st.permutations(list(range(n))))
    return {v: image[v] for v in range(n)}


@st.composite
def bipartite_graphs(draw, max_side: int = 7) -> Tuple[List[List[int]], int]:
    """Left adjacency lists (sorted) and the right side size."""
    left = draw(st.integers(1, max_side))
    right = draw(st.integers(1, max_side))
    rows = [sorted(draw(st.sets(st.integers(0, right - 1), max_size=right))) for _ in range(left)]
    return rows, right


@st.composite
def digraph_arcs(draw, min_n: int = 2, max_n: int = 6) -> Tuple[int, List[Tuple[int, int]]]:
    """A vertex count and a set of loop-free arcs."""
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    arcs = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return n, sorted(arcs)


@st.composite
def tournaments(draw, n: int = 6) -> List[Tuple[int, int]]:
    """Arcs of a tournament: every unordered pair directed one way."""
    arcs = []
    for u in range(n):
        for v in range(u + 1, n):
            arcs.append((u, v) if draw(st.booleans()) else (v, u))
    return arcs

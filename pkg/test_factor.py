import itertools
import json
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from errors import FactorQualityError, MatchingError
from factor import (HopcroftKarp, OneFactor, cycle_decomposition, factor_quality,
                    max_bipartite_matching, project_onto, randomized_perfect_matching,
                    require_quality, saturation_needed)
from fiveinout import Bip
from oracle import exhaustive_matching_size
from strategies import bipartite_graphs, successor_maps
from utils import rng_stream


def _bip(rows, A_hat=()):
    arc_events = {(u, v): 10 * u + v for u, row in enumerate(rows) for v in row}
    return Bip(len(rows), [sorted(r) for r in rows], arc_events, frozenset(A_hat))


def test_single_cycle_has_one_matching():
    assert HopcroftKarp([[1], [2], [0]], 3)() == [1, 2, 0]


def test_two_regular_bipartite_graph_is_perfect():
    result = max_bipartite_matching(_bip([[1, 2], [0, 2], [0, 1]]))
    assert result.perfect
    assert sorted(result.match_left) == [0, 1, 2]
    assert all(v != u for u, v in enumerate(result.match_left))


def test_hall_violation_returns_a_witness():
    result = max_bipartite_matching(_bip([[0], [0], [0]]))
    assert result.size == 1 and not result.perfect
    assert result.witness_left == [0, 1, 2]
    assert result.witness_right == [0]


@given(bipartite_graphs())
@settings(max_examples=300, deadline=None)
def test_matching_size_agrees_with_exhaustive_search(graph):
    rows, num_right = graph
    matcher = HopcroftKarp(rows, num_right)
    match_left = matcher()
    matched = [(u, v) for u, v in enumerate(match_left) if v != -1]

    assert len(matched) == exhaustive_matching_size(rows)
    assert all(v in rows[u] for u, v in matched)
    assert len({v for _, v in matched}) == len(matched)

    left, right = matcher.deficient_set()
    if len(matched) < len(rows):
        assert len(right) < len(left)
        assert all(v in right for u in left for v in rows[u])
    else:
        assert left == [] and right == []


def test_matcher_is_a_pure_function_of_the_graph():
    rows = [[0, 1, 3], [1, 2], [0, 2, 3], [3, 1]]
    assert HopcroftKarp(rows, 4)() == HopcroftKarp([list(r) for r in rows], 4)()


@given(successor_maps())
def test_factor_cycles_follow_the_permutation(successor):
    factor = OneFactor(successor)
    cycles = factor.cycles
    assert sorted(v for c in cycles for v in c) == factor.vertices
    for cycle in cycles:
        assert cycle[0] == min(cycle)
        for k, v in enumerate(cycle):
            assert successor[v] == cycle[(k + 1) % len(cycle)]


def test_non_permutation_is_rejected():
    with pytest.raises(ValueError):
        OneFactor({0: 1, 1: 1})


def test_factor_dump_keeps_sparse_ids():
    factor = OneFactor({10: 12, 12: 30, 30: 10}, events={10: 5, 12: 7}, blue={12})
    payload = factor.to_dict()
    assert payload == {"vertices": [10, 12, 30], "successor": [12, 30, 10], "events": [5, 7, None],
                       "blue": [12]}
    assert OneFactor.from_dict(json.loads(json.dumps(payload))) == factor


def test_bare_permutation_array_loads():
    factor = OneFactor.from_dict({"successor": [2, 0, 1]})
    assert factor.successor == {0: 2, 1: 0, 2: 1}
    assert factor.events == {} and factor.blue == set()


def test_empty_a_hat_reduces_to_the_deterministic_matcher():
    bip = _bip([[1, 2], [0, 2], [0, 1], [3]])
    factor = randomized_perfect_matching(bip, rng_stream(0, "matching"))
    expected = max_bipartite_matching(bip).match_left
    assert [factor.successor[v] for v in range(4)] == expected


def test_single_vertex_a_hat_draws_the_identity():
    bip = _bip([[1, 2], [0, 2], [0, 1]], A_hat=[2])
    factor = randomized_perfect_matching(bip, rng_stream(3, "matching"), forbidden={(0, 1)})
    expected = max_bipartite_matching(bip).match_left
    assert [factor.successor[v] for v in range(3)] == expected
    assert factor.events == {u: bip.arc_events[(u, v)] for u, v in factor.successor.items()}
    assert factor.blue == ({0} if factor.successor[0] == 1 else set())


def test_missing_perfect_matching_raises_with_witness():
    with pytest.raises(MatchingError) as info:
        randomized_perfect_matching(_bip([[0], [0], [0]], A_hat=[0, 1, 2]), rng_stream(1, "matching"))
    assert info.value.details["witness_left"] == [0, 1, 2]
    assert info.value.details["size"] == 1


def _uniformity_pvalue(k, samples, seed):
    rows = [list(range(k)) for _ in range(k)]
    bip = _bip(rows, A_hat=range(k))
    rng = rng_stream(seed, "matching")
    counts = Counter()
    for _ in range(samples):
        factor = randomized_perfect_matching(bip, rng)
        counts[tuple(factor.successor[v] for v in range(k))] += 1
    observed = [counts[p] for p in itertools.permutations(range(k))]
    assert sum(observed) == samples
    return chisquare(observed).pvalue


def test_randomized_matching_is_uniform_on_a_complete_graph():
    assert _uniformity_pvalue(3, 6000, seed=12) > 1e-3


@pytest.mark.slow
def test_randomized_matching_is_uniform_at_acceptance_scale():
    assert _uniformity_pvalue(4, 100_000, seed=13) > 0.01


@pytest.mark.parametrize("length, needed", [(1, 1), (2, 2), (9, 9), (10, 9), (11, 10), (20, 18)])
def test_saturation_needed_is_the_ceiling(length, needed):
    assert saturation_needed(length) == needed


def test_hamilton_cycle_inside_a_hat_passes():
    factor = OneFactor({0: 1, 1: 2, 2: 3, 3: 4, 4: 0})
    quality = factor_quality(factor, {0, 1, 2, 3, 4})
    assert quality.passed and quality.cycle_count == 1
    require_quality(quality, strict=True)


def test_two_cycle_with_a_red_vertex_fails():
    factor = OneFactor({0: 1, 1: 0, 2: 3, 3: 4, 4: 2})
    quality = factor_quality(factor, {0, 2, 3, 4}, n=100)
    assert not quality.passed
    assert quality.worst_cycle == [0, 1]
    assert quality.min_saturation_fraction == 0.5
    with pytest.raises(FactorQualityError) as info:
        require_quality(quality, strict=True)
    assert info.value.details["witness_cycle"] == [0, 1]
    require_quality(quality, strict=False)


def test_too_many_cycles_fail():
    factor = OneFactor({v: v for v in range(5)})
    quality = factor_quality(factor, set(range(5)))
    assert quality.cycle_count == 5 > quality.cycle_bound
    assert not quality.passed


def test_projection_deletes_outside_vertices():
    x1, x2, y1, y2, x3, y3, x4 = 0, 1, 10, 11, 2, 12, 3
    cycle = [x1, x2, y1, y2, x3, y3, x4]
    successor = {v: cycle[(k + 1) % len(cycle)] for k, v in enumerate(cycle)}
    assert project_onto(successor, {x1, x2, x3, x4}) == {x1: x2, x2: x3, x3: x4, x4: x1}


@given(st.permutations(list(range(6))), st.permutations(list(range(4))))
def test_projection_commutes_with_relabeling_inside_a_hat(phi, sigma):
    keep = {0, 1, 2, 3}
    relabel = {v: (sigma[v] if v in keep else v) for v in range(6)}

    def conjugate(succ):
        return {relabel[v]: relabel[w] for v, w in succ.items()}

    successor = dict(enumerate(phi))
    assert project_onto(conjugate(successor), keep) == conjugate(project_onto(successor, keep))


def test_cycle_decomposition_starts_each_cycle_at_its_least_vertex():
    assert cycle_decomposition({3: 5, 5: 3, 0: 0, 1: 4, 4: 1}) == [[0], [1, 4], [3, 5]]

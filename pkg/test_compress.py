import json

import pytest
from hypothesis import given, settings, strategies as st

from compress import CompressionMap, compress_factor, decompress_cycle
from errors import CompressionStuckError
from factor import OneFactor, saturation_needed
from strategies import successor_maps


def _cycle_factor(order, blue=()):
    successor = {v: order[(k + 1) % len(order)] for k, v in enumerate(order)}
    return OneFactor(successor, {v: 100 + v for v in order}, set(blue))


def _is_rotation(cycle, reference):
    if len(cycle) != len(reference) or cycle[0] not in reference:
        return False
    k = reference.index(cycle[0])
    return reference[k:] + reference[:k] == cycle


def test_no_red_vertices_is_the_identity():
    factor = _cycle_factor([0, 1, 2, 3])
    compressed, cmap = compress_factor(factor, {0, 1, 2, 3})
    assert compressed.successor == factor.successor
    assert cmap.records == []
    assert decompress_cycle([2, 3, 0, 1], cmap) == [2, 3, 0, 1]


def test_single_red_vertex_is_folded_with_its_neighbours():
    a, r, b, c, d, e, f, g, h = range(9)
    factor = _cycle_factor([a, r, b, c, d, e, f, g, h])
    compressed, cmap = compress_factor(factor, {a, b, c, d, e, f, g, h}, first_id=9)

    assert compressed.cycles == [[c, d, e, f, g, h, 9]]
    assert len(compressed.successor) == 7
    assert [rec.segment for rec in cmap.records] == [(a, r, b)]
    assert cmap.expand(9) == [a, r, b]
    # the new vertex keeps b's out-arc and a's in-arc
    assert compressed.events[9] == 100 + b
    assert compressed.events[h] == 100 + h


def test_decompress_substitutes_the_segment():
    a, r, b, c, d = range(5)
    factor = _cycle_factor([a, r, b, c, d])
    _, cmap = compress_factor(factor, {a, b, c, d}, first_id=5)
    assert decompress_cycle([5, c, d], cmap) == [a, r, b, c, d]


def test_nested_records_expand_to_the_original_order():
    factor = _cycle_factor(list(range(10)))
    compressed, cmap = compress_factor(factor, set(range(10)) - {1, 2}, first_id=10)
    assert [rec.segment for rec in cmap.records] == [(0, 1, 2), (9, 10, 3)]
    assert 10 in cmap.red and 11 not in cmap.red
    assert compressed.cycles == [[4, 5, 6, 7, 8, 11]]
    assert decompress_cycle([11, 4, 5, 6, 7, 8], cmap) == [9, 0, 1, 2, 3, 4, 5, 6, 7, 8]


def test_three_cycle_collapses_to_a_loop():
    compressed, cmap = compress_factor(_cycle_factor([0, 1, 2]), {0, 2}, first_id=3)
    assert compressed.successor == {3: 3}
    assert decompress_cycle([3], cmap) == [0, 1, 2]


@pytest.mark.parametrize("order, A_hat", [([0, 1], {0}), ([0], set())])
def test_red_vertex_on_a_short_cycle_is_stuck(order, A_hat):
    with pytest.raises(CompressionStuckError):
        compress_factor(_cycle_factor(order), A_hat)


def test_blue_flags_stay_with_hidden_arcs():
    factor = _cycle_factor(list(range(10)), blue=[0, 5])
    compressed, cmap = compress_factor(factor, set(range(10)) - {1}, first_id=10)
    assert cmap.records[0].hidden_blue == (True, False)
    assert cmap.hidden_blue_arcs(10) == [(0, 1)]
    assert compressed.blue == {5}


def test_compression_dump_round_trips():
    factor = _cycle_factor(list(range(10)), blue=[0, 5])
    _, cmap = compress_factor(factor, set(range(10)) - {1, 2}, first_id=10)
    payload = cmap.to_dict()
    assert payload == {"origin_n": 10, "red": [1, 2, 10],
                       "records": [[0, 1, 2, 10, [True, False]], [9, 10, 3, 11, [False, False]]]}

    loaded = CompressionMap.from_dict(json.loads(json.dumps(payload)))
    assert loaded == cmap
    assert loaded.expand(11) == [9, 0, 1, 2, 3]
    assert loaded.hidden_blue_arcs(11) == [(0, 1)]


@given(successor_maps(max_size=12), st.data())
@settings(max_examples=300, deadline=None)
def test_compression_keeps_cycles_and_round_trips(successor, data):
    red = data.draw(st.sets(st.sampled_from(sorted(successor))))
    factor = OneFactor(successor)
    try:
        compressed, cmap = compress_factor(factor, set(successor) - red)
    except CompressionStuckError:
        return

    assert len(compressed.cycles) == len(factor.cycles)
    assert len(compressed.successor) == len(successor) - 2 * len(cmap.records)
    assert not cmap.red.intersection(compressed.successor)

    covered = []
    for cycle in compressed.cycles:
        lifted = decompress_cycle(cycle, cmap)
        original = next(c for c in factor.cycles if lifted[0] in c)
        assert _is_rotation(lifted, original)
        covered.extend(lifted)
    assert sorted(covered) == sorted(successor)


@st.composite
def saturated_factors(draw):
    """Factors whose every cycle keeps ceil(9/10 |C|) vertices outside the red set."""
    successor = draw(successor_maps(min_size=10, max_size=30))
    red = set()
    for cycle in OneFactor(successor).cycles:
        allowed = len(cycle) - saturation_needed(len(cycle))
        k = draw(st.integers(0, allowed))
        red.update(draw(st.permutations(cycle))[:k])
    return successor, red


@given(saturated_factors())
@settings(max_examples=200, deadline=None)
def test_saturated_cycles_never_get_stuck(instance):
    successor, red = instance
    compressed, cmap = compress_factor(OneFactor(successor), set(successor) - red)
    assert len(compressed.cycles) == len(OneFactor(successor).cycles)
    assert len(cmap.records) <= len(red)

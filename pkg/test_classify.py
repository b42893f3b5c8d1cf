import pytest

from classify import (Classification, PartialCase, VertexClass, classify_vertices, partial_case,
                      typicality)
from orient import Direction, OrientState
from process import EdgeEvent


def _state(n, saturated=(), sat=12):
    state = OrientState(n, step1_len=10, sat_threshold=sat)
    for v in saturated:
        state.d1[v] = sat + 1
        state.saturated[v] = True
    state.freeze_a()
    return state


@pytest.mark.parametrize("counts, case", [
    ((2, 3, 4), PartialCase.D1_TWO),
    ((1, 2, 0), PartialCase.D2_TWO),
    ((0, 1, 2), PartialCase.AB_TWO),
    ((1, 1, 0), PartialCase.D1_D2),
    ((1, 0, 1), PartialCase.D1_AB),
    ((0, 1, 1), PartialCase.D2_AB),
    ((1, 0, 0), None),
    ((0, 0, 1), None),
])
def test_partial_case_priority(counts, case):
    assert partial_case(*counts) is case


def test_every_class_is_assigned():
    state = _state(6, saturated=[0])
    state.d1[1], state.d2[1] = 1, 1                   # partial (iv)
    state.dAB[2] = 1                                   # bud
    state.neglected[2].append((4, Direction.IN, 0))
    state.dAB[3] = 12                                  # blossom
    state.dAB[4] = 1                                   # A-B edge but nothing neglected

    result = classify_vertices(state)
    assert result.classes == [VertexClass.SATURATED, VertexClass.PARTIAL, VertexClass.BUD,
                              VertexClass.BLOSSOM, VertexClass.VIOLATION, VertexClass.VIOLATION]
    assert result.A == frozenset({0})
    assert result.B1 == frozenset({3})
    assert result.B2 == frozenset({1, 2, 4, 5})
    assert result.cases == {1: PartialCase.D1_D2}
    assert result.bud_sources == {2: 0}
    assert result.violations == {4: "ab-edge-without-neglected", 5: "no-counted-edges"}


def test_classes_partition_the_vertices():
    state = _state(5, saturated=[0, 1])
    state.d1[2] = 2
    state.dAB[3] = 15
    result = classify_vertices(state)
    counts = result.counts()
    assert counts["A"] + counts["B1"] + counts["B2"] == 5
    assert counts["partial"] + counts["bud"] + counts["violation"] == counts["B2"]
    assert result.restricted == [2, 4]
    assert classify_vertices(state, m_star=7) == result


def _classification(n, A, B2, cases=None, bud_sources=None):
    classes = [VertexClass.SATURATED if v in A else VertexClass.PARTIAL for v in range(n)]
    return Classification(n, classes, frozenset(A), frozenset(), frozenset(B2),
                          cases or {v: PartialCase.D1_TWO for v in B2}, {}, bud_sources or {})


def test_empty_restricted_set_is_vacuously_fine():
    classification = _classification(3, A={0, 1, 2}, B2=set())
    events = [EdgeEvent(1, 0, 1), EdgeEvent(2, 1, 2), EdgeEvent(3, 2, 0)]
    report = typicality(classification, events, m_star=3)
    assert report.b2_ok and report.restricted_ok and report.distance_ok
    assert report.close_pair is None
    assert report.min_degree_without_bb == 2


def test_adjacent_restricted_vertices_give_a_witness():
    classification = _classification(4, A={0, 1}, B2={2, 3})
    report = typicality(classification, [EdgeEvent(1, 2, 3)], m_star=1)
    assert not report.distance_ok
    assert report.close_pair == (2, 3)
    assert report.to_dict()["close_pair"] == [2, 3]
    assert not report.typical


def test_restricted_vertices_two_apart_are_too_close():
    classification = _classification(4, A={0, 1}, B2={2, 3})
    report = typicality(classification, [EdgeEvent(1, 2, 0), EdgeEvent(2, 0, 3)], m_star=2)
    assert report.close_pair == (2, 3)


def test_restricted_vertices_three_apart_are_fine():
    classification = _classification(4, A={0, 1}, B2={2, 3})
    events = [EdgeEvent(1, 2, 0), EdgeEvent(2, 0, 1), EdgeEvent(3, 1, 3)]
    assert typicality(classification, events, m_star=3).distance_ok


def test_degree_ignores_edges_inside_b():
    classification = _classification(4, A={0, 1}, B2={2, 3})
    events = [EdgeEvent(1, 0, 1), EdgeEvent(2, 2, 3), EdgeEvent(3, 2, 3), EdgeEvent(4, 0, 2)]
    report = typicality(classification, events, m_star=4)
    assert report.min_degree_without_bb == 0
    assert not report.degree_ok


def test_unrevealed_edges_exclude_step1_and_consumed_events():
    classification = _classification(3, A={0, 1, 2}, B2=set())
    state = OrientState(3, step1_len=2, sat_threshold=12)
    events = [EdgeEvent(t, 0, 1) for t in range(1, 7)] + [EdgeEvent(7, 1, 1)]
    report = typicality(classification, events, 7, state=state, consumed={3})
    # t = 4, 5, 6 remain
    assert report.unrevealed_aa == 3


def test_bud_with_restricted_source_is_reported():
    classification = _classification(4, A={0, 1}, B2={2, 3}, cases={3: PartialCase.D1_TWO},
                                     bud_sources={2: 3})
    report = typicality(classification, [], m_star=0)
    assert report.bud_sources_in_b2 == [2]


def test_violations_break_typicality():
    classification = _classification(3, A={0, 1}, B2={2})
    classification.violations[2] = "no-counted-edges"
    report = typicality(classification, [EdgeEvent(1, 0, 2), EdgeEvent(2, 1, 2)], m_star=2)
    assert not report.restricted_ok
    assert report.violations == 1


def test_degree_counts_distinct_pairs_of_the_m_star_prefix():
    classification = _classification(3, A={0, 1, 2}, B2=set())
    events = [EdgeEvent(1, 0, 1), EdgeEvent(2, 0, 1), EdgeEvent(3, 1, 2), EdgeEvent(4, 2, 0)]
    report = typicality(classification, events, m_star=3)
    assert report.min_degree_without_bb == 1
    assert not report.degree_ok
    assert typicality(classification, events, m_star=4).degree_ok


def test_events_after_m_star_are_not_read():
    classification = _classification(4, A={0, 1}, B2={2, 3})
    events = [EdgeEvent(1, 2, 0), EdgeEvent(2, 0, 1), EdgeEvent(3, 0, 3)]
    assert typicality(classification, events, m_star=2).distance_ok
    assert typicality(classification, events, m_star=3).close_pair == (2, 3)

    classification = _classification(3, A={0, 1, 2}, B2=set())
    state = OrientState(3, step1_len=2, sat_threshold=12)
    events = [EdgeEvent(t, 0, 1) for t in range(1, 7)]
    assert typicality(classification, events, 5, state=state, consumed={3}).unrevealed_aa == 2

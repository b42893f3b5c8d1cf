import math
import time

import numpy as np
import pytest
from scipy.stats import chisquare

from config import ConfigError
from process import (EdgeEvent, EventKind, Mode, ProcessConfig, ProcessState, UniformBuffer,
                     DegreeTracker, GraphProcess, EdgeStream, decode_pair, next_edge_event,
                     counts_toward_degree, edge_process_hitting_time, run_until_min_degree_2)
from utils import rng_stream, read_jsonl, write_jsonl, hitting_time_center, hitting_time_mean


class ListStream:
    """A fixed event list behind the EdgeStream interface."""

    def __init__(self, n, events, mode=Mode.EDGE):
        self.n = n
        self.mode = mode
        self._events = iter(events)

    def __iter__(self):
        return self

    def __next__(self):
        return next(self._events)


def _take(stream, count):
    return [next(stream) for _ in range(count)]


def test_single_vertex_only_produces_loops():
    stream = EdgeStream(ProcessConfig.from_preset(1, mode="edge", seed=5))
    events = _take(stream, 50)
    assert all((e.first, e.second) == (0, 0) for e in events)
    assert all(e.kind is EventKind.LOOP and not e.blue for e in events)


def test_two_vertex_pairs_are_uniform():
    state = ProcessState(2)
    draws = UniformBuffer(rng_stream(99, "process"))
    counts = np.zeros(4)
    samples = 100_000
    for _ in range(samples):
        e = next_edge_event(state, draws)
        counts[2 * e.first + e.second] += 1

    assert np.all(np.abs(counts / samples - 0.25) < 0.01)
    assert chisquare(counts).pvalue > 1e-3
    assert state.t == samples


@pytest.mark.parametrize("mode", ["edge", "graph"])
def test_same_seed_same_stream(mode):
    first = _take(EdgeStream(ProcessConfig.from_preset(40, mode=mode, seed=1234)), 500)
    second = _take(EdgeStream(ProcessConfig.from_preset(40, mode=mode, seed=1234)), 500)
    other = _take(EdgeStream(ProcessConfig.from_preset(40, mode=mode, seed=1235)), 500)
    assert first == second
    assert first != other


def test_first_lifted_event_is_never_a_repeat():
    loops = 0
    n = 5
    for seed in range(2000):
        event = next(EdgeStream(ProcessConfig.from_preset(n, mode="graph", seed=seed)))
        assert event.t == 1
        assert event.kind is not EventKind.REPEAT
        loops += event.kind is EventKind.LOOP
    # redundant probability at t = 1 is n / n^2
    assert 300 <= loops <= 500


def test_blue_events_repeat_an_earlier_pair():
    stream = EdgeStream(ProcessConfig.from_preset(20, mode="graph", seed=8))
    seen = set()
    blue = 0
    for e in _take(stream, 3000):
        assert e.blue == (e.kind is EventKind.REPEAT)
        if e.blue:
            assert e.pair in seen
            blue += 1
        elif e.kind is EventKind.FRESH:
            assert e.pair not in seen
        if not e.is_loop:
            seen.add(e.pair)
    assert blue > 0
    assert len(seen) == stream.state.a_t


def test_edge_mode_never_marks_blue():
    events = _take(EdgeStream(ProcessConfig.from_preset(6, mode="edge", seed=2)), 400)
    assert not any(e.blue for e in events)
    assert all(e.kind in (EventKind.FRESH, EventKind.LOOP) for e in events)


def test_lifted_pairs_follow_edge_process_law():
    stream = EdgeStream(ProcessConfig.from_preset(3, mode="graph", seed=17))
    counts = np.zeros(81)
    for _ in range(20_000):
        a, b = next(stream), next(stream)
        counts[((a.first * 3 + a.second) * 3 + b.first) * 3 + b.second] += 1
    assert chisquare(counts).pvalue > 1e-3


@pytest.mark.slow
def test_lifted_pairs_total_variation_against_edge_process():
    samples = 1_000_000
    lifted = np.zeros(81)
    direct = np.zeros(81)
    stream = EdgeStream(ProcessConfig.from_preset(3, mode="graph", seed=21))
    state, draws = ProcessState(3), UniformBuffer(rng_stream(21, "baseline"))
    for _ in range(samples):
        a, b = next(stream), next(stream)
        lifted[((a.first * 3 + a.second) * 3 + b.first) * 3 + b.second] += 1
        c, d = next_edge_event(state, draws), next_edge_event(state, draws)
        direct[((c.first * 3 + c.second) * 3 + d.first) * 3 + d.second] += 1
    assert 0.5 * np.abs(lifted / samples - direct / samples).sum() < 0.01


def test_triangle_reaches_min_degree_two_at_third_edge():
    events = [EdgeEvent(1, 0, 1), EdgeEvent(2, 1, 2), EdgeEvent(3, 2, 0), EdgeEvent(4, 0, 2)]
    prefix, m_star = run_until_min_degree_2(ListStream(3, events))
    assert m_star == 3
    assert [e.t for e in prefix] == [1, 2, 3]


def test_loops_never_count_toward_degree():
    tracker = DegreeTracker(3)
    tracker.add(1, 1)
    assert tracker.deficient == 3
    assert tracker.degree == [0, 0, 0]
    assert not counts_toward_degree(EdgeEvent(1, 2, 2, EventKind.LOOP), Mode.EDGE)


def test_repeats_count_in_edge_mode_only():
    repeat = EdgeEvent(5, 0, 1, EventKind.REPEAT, True)
    assert counts_toward_degree(repeat, Mode.EDGE)
    assert not counts_toward_degree(repeat, Mode.GRAPH)


def test_graph_mode_stopping_time_is_the_fresh_edge_hitting_time():
    stream = EdgeStream(ProcessConfig.from_preset(30, mode="graph", seed=77))
    events, m_star = run_until_min_degree_2(stream)
    assert events[-1].t == m_star

    degree = [0] * 30
    for e in events[:-1]:
        if e.kind is EventKind.FRESH:
            degree[e.first] += 1
            degree[e.second] += 1
    assert min(degree) < 2
    last = events[-1]
    assert last.kind is EventKind.FRESH
    degree[last.first] += 1
    degree[last.second] += 1
    assert min(degree) >= 2


def test_desk_horizon_runs_past_the_stopping_time():
    config = ProcessConfig.from_preset(50, mode="graph", seed=3)
    events, m_star = run_until_min_degree_2(EdgeStream(config), min_length=config.horizon_floor())
    assert len(events) == max(m_star, config.horizon_floor())
    assert m_star <= len(events)


def test_stopping_rule_needs_three_vertices():
    with pytest.raises(ConfigError):
        run_until_min_degree_2(EdgeStream(ProcessConfig.from_preset(2, mode="edge", seed=0)))


def test_decode_pair_is_a_bijection_onto_unordered_pairs():
    n = 7
    decoded = [decode_pair(i, n) for i in range(n * (n - 1) // 2)]
    assert decoded[0] == (0, 1)
    assert decoded[-1] == (5, 6)
    assert sorted(decoded) == [(u, v) for u in range(n) for v in range(u + 1, n)]


def test_graph_process_draws_every_pair_once():
    pairs = list(GraphProcess(9, rng_stream(4, "process")))
    assert len(pairs) == 36
    assert len(set(pairs)) == 36
    assert all(u < v for u, v in pairs)


def test_preset_step1_lengths():
    paper = ProcessConfig.from_preset(100, preset="paper")
    assert paper.step1_len == math.ceil(2 * 100 * math.log(math.log(100)))
    assert paper.horizon_floor() == 0

    desk = ProcessConfig.from_preset(100, preset="desk")
    assert desk.step1_len == 2400
    assert desk.horizon_floor() == 2400 + math.ceil(0.5 * 100 * math.log(100))


def test_tiny_n_clamps_the_paper_step1_length():
    assert ProcessConfig.from_preset(2, preset="paper").step1_len == 0
    assert ProcessConfig.from_preset(3, preset="paper").step1_len == 1


@pytest.mark.parametrize("overrides", [
    {"sat_threshold": 20},                      # c1 = 24 < 2 * 20
    {"sat_threshold": 8},                       # cannot supply 5 out + 5 in
    {"sat_threshold": 10},                      # 5-in/5-out needs 12
    {"step1_multiplier": 10.0},
    {"mode": "lattice"},
    {"preset": "huge"},
])
def test_invalid_configurations_are_rejected(overrides):
    with pytest.raises(ConfigError if "mode" not in overrides else ValueError):
        ProcessConfig.from_preset(50, **overrides)


def test_scaled_down_configuration_is_accepted():
    config = ProcessConfig.from_preset(8, sat_threshold=2, out_size=1)
    assert config.sat_threshold == 2
    assert config.step1_len == 8 * 24


def test_event_log_round_trips_through_jsonl(tmp_path):
    events = _take(EdgeStream(ProcessConfig.from_preset(12, mode="graph", seed=5)), 200)
    path = tmp_path / "events.jsonl"
    assert write_jsonl(str(path), (e.to_dict() for e in events)) == 200
    assert [EdgeEvent.from_dict(r) for r in read_jsonl(str(path))] == events


@pytest.mark.parametrize("n", [5, 17, 60])
def test_block_hitting_time_matches_the_event_stream(n):
    for seed in range(4):
        config = ProcessConfig.from_preset(n, mode="edge", seed=seed, preset="paper")
        _, m_star = run_until_min_degree_2(EdgeStream(config))
        assert edge_process_hitting_time(n, seed) == m_star


def test_block_hitting_time_respects_the_cap():
    assert edge_process_hitting_time(50, 1, max_events=10) == 0
    with pytest.raises(ConfigError):
        edge_process_hitting_time(2, 1)


@pytest.mark.slow
def test_hitting_time_concentrates_at_the_center():
    n = 100_000
    started = time.perf_counter()
    m_stars = [edge_process_hitting_time(n, seed) for seed in range(20)]
    assert time.perf_counter() - started < 60.0

    assert 0.95 <= float(np.mean([m / hitting_time_mean(n) for m in m_stars])) <= 1.05
    # the bare center sits below the finite-n mean
    assert 1.0 <= float(np.mean([m / hitting_time_center(n) for m in m_stars])) <= 1.12

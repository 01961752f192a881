import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evoim.diffusion import (MAX_EXACT_EDGES, EdgeTruth, WorldTable, drift_variance,
                             exact_influence, run_cascade, step_truth_weights)
from evoim.graph import GraphError
from helpers import directed, random_graph, star


def _path(n):
    return directed(n, [(i, i + 1) for i in range(n - 1)]).snapshot(0)


def test_cascade_all_live_path():
    fb = run_cascade(_path(4), [0], np.ones(3), np.random.default_rng(0))
    assert fb.influenced.tolist() == [0, 1, 2, 3]
    assert fb.edge_outcomes == {0: 1, 1: 1, 2: 1}


def test_cascade_all_dead_path():
    fb = run_cascade(_path(4), [0], np.zeros(3), np.random.default_rng(0))
    assert fb.influenced.tolist() == [0]
    assert fb.edge_outcomes == {0: 0}
    # the seed's neighbour is observed even though it was not influenced
    assert fb.observed_nodes.tolist() == [0, 1]
    assert fb.observed_degrees.tolist() == [1, 2]


def test_single_edge_frequency():
    snap = _path(2)
    rng = np.random.default_rng(3)
    hits = [run_cascade(snap, [0], np.array([0.3]), rng).influenced_count - 1
            for _ in range(10_000)]
    assert abs(np.mean(hits) - 0.3) < 0.015


def test_exact_path_value():
    est = exact_influence(_path(3), [0], np.array([0.5, 0.5]))
    assert est.exact and est.value == pytest.approx(1.75)


def test_exact_all_seeds():
    g = random_graph(np.random.default_rng(1), 7, 8, bidirectional=False)
    snap = g.snapshot(0)
    w = np.random.default_rng(2).random(snap.edge_count)
    assert exact_influence(snap, range(7), w).value == pytest.approx(7.0)


def test_exact_star():
    snap = star(6).snapshot(0)
    w = np.array([0.1, 0.2, 0.3, 0.05, 0.9, 0.0])
    assert exact_influence(snap, [0], w).value == pytest.approx(1 + w.sum())


def test_exact_weighted_isolated_seed():
    g = directed(4, [(0, 1)])
    snap = g.snapshot(0)
    nw = np.array([1.0, 2.0, 3.0, 4.0])
    assert exact_influence(snap, [0, 3], np.array([0.5]), nw).value == pytest.approx(1 + 1 + 4)


def test_exact_matches_dag_monte_carlo(oracles):
    fx = oracles["dag"]
    snap = directed(7, fx["edges"]).snapshot(0)
    est = exact_influence(snap, fx["seeds"], np.asarray(fx["probs"]))
    assert abs(est.value - fx["mean"]) < 3 * fx["se"]


def test_exact_refuses_large_graph_without_samples():
    snap = _path(MAX_EXACT_EDGES + 2)
    w = np.full(snap.edge_count, 0.5)
    with pytest.raises(ValueError):
        exact_influence(snap, [0], w)
    est = exact_influence(snap, [0], w, mc_samples=4000, rng=np.random.default_rng(0))
    truth = sum(0.5 ** i for i in range(snap.node_count))
    assert not est.exact and abs(est.value - truth) < max(est.half_width, 1e-9) * 1.5


def test_world_table_agrees_with_brute_monte_carlo():
    rng = np.random.default_rng(8)
    g = random_graph(rng, 8, 6)
    snap = g.snapshot(0)
    w = rng.uniform(0.1, 0.8, snap.edge_count)
    table = WorldTable(snap, w)
    vals = [run_cascade(snap, [0, 5], w, rng).influenced_count for _ in range(20_000)]
    se = np.std(vals) / math.sqrt(len(vals))
    assert abs(table.value([0, 5]) - np.mean(vals)) < 4 * se


def test_seed_outside_snapshot():
    with pytest.raises(GraphError):
        run_cascade(_path(3), [5], np.ones(2), np.random.default_rng(0))


def test_initial_weights_clamped_mean(oracles):
    t = step_truth_weights(EdgeTruth(), 0, 2.0, 0.008, np.random.default_rng(0),
                           new_births=np.zeros(100_000, dtype=np.int64))
    assert t.w.min() >= 0 and t.w.max() <= 1
    assert abs(t.w.mean() - oracles["clamped_mean"]) < 0.003


def test_drift_variance_values():
    assert drift_variance(5, 3, 2.0, 0.008) == pytest.approx(0.002)
    assert drift_variance(3, 3, 2.0, 0.008) == 0
    assert drift_variance(10, 0, math.inf, 0.008) == 0


def test_frozen_walk_stays_constant():
    rng = np.random.default_rng(4)
    t = step_truth_weights(EdgeTruth(), 0, math.inf, 0.008, rng, new_births=np.zeros(50, dtype=np.int64))
    start = t.w.copy()
    for r in range(1, 30):
        t = step_truth_weights(t, r, math.inf, 0.008, rng)
    assert np.array_equal(t.w, start)


def test_walk_stays_in_unit_interval():
    rng = np.random.default_rng(5)
    t = step_truth_weights(EdgeTruth(), 0, 0.0, 0.5, rng, new_births=np.zeros(20, dtype=np.int64))
    for r in range(1, 10_001):
        t = step_truth_weights(t, r, 0.0, 0.5, rng)
        assert t.w.min() >= 0.0 and t.w.max() <= 1.0


def test_new_edges_do_not_drift_in_birth_trial():
    rng = np.random.default_rng(6)
    t = step_truth_weights(EdgeTruth(), 0, 2.0, 0.008, rng, new_births=np.zeros(3, dtype=np.int64))
    t2 = step_truth_weights(t, 4, 2.0, 0.008, rng, new_births=np.array([4, 4]))
    t3 = step_truth_weights(t2, 4, 2.0, 0.008, rng)
    assert np.array_equal(t3.w[3:], t2.w[3:])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 25), st.data())
def test_coupled_cascades_are_monotone(seed, n, data):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, min(2 * n, n * (n - 1) // 2), bidirectional=bool(seed % 2))
    snap = g.snapshot(0)
    w = rng.random(snap.edge_count)
    u = rng.random(snap.edge_count)
    small = data.draw(st.sets(st.integers(0, n - 1), max_size=3))
    big = small | data.draw(st.sets(st.integers(0, n - 1), max_size=3))
    a = run_cascade(snap, small, w, uniforms=u)
    b = run_cascade(snap, big, w, uniforms=u)
    assert set(a.influenced.tolist()) <= set(b.influenced.tolist())
    # every out-edge of an influenced node is triggered exactly once
    outs = sorted(int(e) for v in b.influenced for e in snap.out_edges(int(v))[1])
    assert b.triggered.tolist() == outs
    assert set(big) <= set(b.influenced.tolist())

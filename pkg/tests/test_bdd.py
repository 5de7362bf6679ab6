import pytest
from hypothesis import given, strategies as st

from helpers import grid
from pmk.bdd import build_bdd, default_leaf_threshold, dumps_bdd, validate_bdd
from pmk.corpus import random_graph
from pmk.planar import bfs_tree, generate, sssp_tree


def test_small_graph_is_one_leaf():
    g = grid(3)
    bdd = build_bdd(g, leaf_threshold=20)
    assert len(bdd.bags) == 1 and bdd.root.is_leaf
    rep = validate_bdd(bdd)
    assert rep.ok, rep.lines()


def test_grid8_passes_everything():
    g = grid(8)
    bdd = build_bdd(g, bfs_tree(g, 0), leaf_threshold=8)
    rep = validate_bdd(bdd)
    assert rep.ok, rep.failures()
    assert rep.results["8'_edge_multiplicity"][1]["owned"] == 2
    assert bdd.depth() >= 2


def test_children_shrink_and_marks_grow():
    g = generate("random-triangulation", {"n": 150}, seed=5)
    bdd = build_bdd(g, leaf_threshold=10)
    for bag in bdd.bags:
        for c in bag.children:
            child = bdd.bags[c]
            assert 6 * len(set(child.vertices) - child.marked) <= 5 * len(set(bag.vertices) - bag.marked)
            inside = set(child.vertices)
            assert (bag.marked | set(bag.separator)) & inside == child.marked


def test_dump_is_deterministic():
    g = generate("random-triangulation", {"n": 80}, seed=2)
    a = dumps_bdd(build_bdd(g, leaf_threshold=8))
    b = dumps_bdd(build_bdd(g, leaf_threshold=8))
    assert a == b


def test_darts_owned_once_per_level():
    g = grid(10)
    bdd = build_bdd(g, leaf_threshold=8)
    for depth, bags in bdd.by_depth().items():
        seen = set()
        for b in bags:
            assert seen.isdisjoint(b.darts)
            seen |= b.darts


@given(st.integers(0, 10_000), st.sampled_from(["bfs", "sssp"]))
def test_validator_on_random_graphs(seed, mode):
    import random
    rng = random.Random(seed)
    g = random_graph(rng, 90)
    if mode == "sssp":
        from pmk.corpus import reweight
        g = reweight(g, rng, 12)
    t = bfs_tree(g, 0) if mode == "bfs" else sssp_tree(g, 0)
    # half the default threshold, so most graphs split a few times
    thr = max(4, default_leaf_threshold(g, t, mode) // 2)
    bdd = build_bdd(g, t, mode=mode, leaf_threshold=thr)
    rep = validate_bdd(bdd)
    assert rep.ok, rep.failures()


def test_forced_leaf_over_bound_is_reported():
    g = grid(6)
    bdd = build_bdd(g, leaf_threshold=1)
    rep = validate_bdd(bdd)
    measured = rep.results["4_leaf_size"][1]
    assert measured["forced"] >= 1
    assert rep.ok == (measured["max"] <= rep.results["4_leaf_size"][2])

import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from helpers import bfs_all, cycle, dijkstra_all, grid, oracle_diameter, path, triangle
from pmk import distributed as dist
from pmk.bdd import build_bdd, default_leaf_threshold, validate_bdd
from pmk.congest import SimNetwork
from pmk.corpus import random_graph, reweight
from pmk.errors import DisconnectedPart, HashCollisionDetected
from pmk.planar import bfs_tree, generate, sssp_tree, validate_embedding


def small_bdd(g, frac=4):
    t = bfs_tree(g, 0)
    return build_bdd(g, t, leaf_threshold=max(4, default_leaf_threshold(g, t) // frac))


def all_pairs_ok(labels, ref):
    n = len(labels)
    return all(dist.decode(labels[u], labels[v]) == ref[u][v] for u in range(n) for v in range(n))


def test_leaf_labels_are_full_rows():
    g = grid(3)
    net = SimNetwork(g)
    labels = dist.unweighted_labels(net, build_bdd(g, leaf_threshold=50))
    assert all(lab.leaf is not None and len(lab.leaf) == 9 for lab in labels)
    assert all_pairs_ok(labels, bfs_all(g))


def test_grid8_labels_decode():
    g = grid(8)
    net = SimNetwork(g)
    bdd = build_bdd(g, leaf_threshold=8)
    assert bdd.depth() >= 2
    assert all_pairs_ok(dist.unweighted_labels(net, bdd), bfs_all(g))


def test_label_words_roundtrip():
    g = grid(6)
    labels = dist.unweighted_labels(SimNetwork(g), build_bdd(g, leaf_threshold=6))
    for lab in labels:
        assert dist.DistanceLabel.from_words(lab.words()) == lab


@pytest.mark.parametrize("g,want", [(path(4), 3), (cycle(6), 3), (grid(5), 8)])
def test_small_diameters(g, want):
    net = SimNetwork(g)
    bdd = small_bdd(g)
    run = dist.unweighted_diameter(net, bdd, dist.unweighted_labels(net, bdd))
    assert run.value == want


@given(st.integers(0, 10_000))
def test_unweighted_diameter_random(seed):
    g = random_graph(random.Random(seed), 80)
    net = SimNetwork(g)
    bdd = small_bdd(g)
    run = dist.unweighted_diameter(net, bdd, dist.unweighted_labels(net, bdd), seed=seed)
    assert run.value == oracle_diameter(g)
    assert run.ledger.total > 0


def test_tiny_prime_always_collides():
    g = grid(8)
    net = SimNetwork(g)
    bdd = build_bdd(g, leaf_threshold=8)
    labels = dist.unweighted_labels(net, bdd)
    with pytest.raises(HashCollisionDetected):
        dist.unweighted_diameter(net, bdd, labels, hash_prime=7, max_attempts=2)


def test_weighted_triangle():
    g = triangle(1, 1, 3)
    net = SimNetwork(g)
    labels = dist.weighted_labels(net, build_bdd(g))
    assert dist.decode(labels[0], labels[2]) == 2
    res = dist.sssp(net, labels, 0)
    assert res.parent[2] == 1 and res.dist == [0, 1, 2]


def test_sssp_path_parents():
    g = path(4)
    net = SimNetwork(g)
    res = dist.sssp(net, dist.unweighted_labels(net, build_bdd(g)), 0)
    assert res.parent == [-1, 0, 1, 2]


def test_weighted_grid6_labels():
    g = grid(6, wmax=16, seed=4)
    net = SimNetwork(g)
    stats = {}
    labels = dist.weighted_labels(net, build_bdd(g, leaf_threshold=6), stats)
    assert all_pairs_ok(labels, dijkstra_all(g))
    assert stats["max_child_labels"] <= 3


def test_weighted_triangulation_sssp():
    g = generate("random-triangulation", {"n": 100, "wmax": 20}, seed=6)
    net = SimNetwork(g)
    labels = dist.weighted_labels(net, small_bdd(g))
    res = dist.sssp(net, labels, 17)
    ref = dijkstra_all(g)[17]
    assert res.dist == ref
    for v, p in enumerate(res.parent):
        if p >= 0:
            assert ref[v] == ref[p] + net.weight(p, v)


@given(st.integers(0, 10_000))
def test_weighted_labels_random(seed):
    rng = random.Random(seed)
    g = reweight(random_graph(rng, 60), rng, 12)
    net = SimNetwork(g)
    stats = {}
    labels = dist.weighted_labels(net, small_bdd(g), stats)
    assert all_pairs_ok(labels, dijkstra_all(g))
    assert stats["max_child_labels"] <= 3


def test_c8_approx():
    g = cycle(8)
    net = SimNetwork(g)
    run = dist.approx_weighted_diameter(net, 1)
    assert 4 <= run.estimate <= 8


@given(st.integers(0, 10_000), st.sampled_from([Fraction(1), Fraction(1, 2), Fraction(1, 4)]))
def test_approx_sandwich_small(seed, eps):
    rng = random.Random(seed)
    g = reweight(random_graph(rng, 50), rng, 9)
    run = dist.approx_weighted_diameter(SimNetwork(g), eps, seed=seed)
    true = oracle_diameter(g)
    assert true <= run.estimate <= 2 * true
    assert run.stats["D_tilde"] >= true


def test_portal_spacing():
    g = generate("random-triangulation", {"n": 120, "wmax": 10}, seed=2)
    t = sssp_tree(g, 0)
    d = [0] * g.n
    from pmk.planar import distances
    d = distances(g, 0)
    sep = [v for v in range(g.n) if v % 3 == 0]
    for spacing in (Fraction(1), Fraction(5, 2), Fraction(40)):
        ps = dist.portal_set(g, t, d, sep, spacing)
        assert set(ps.portals) <= set(sep)
        for x in sep:
            q = ps.snap[x]
            assert q in ps.portals
            assert 0 <= d[x] - d[q] < spacing or x == q
        for seg, (length, count) in zip(ps.segments, ps.per_segment):
            leaves = sum(1 for x in seg if not any(t.parent[y] == x for y in seg))
            assert count <= length // spacing + 1 + leaves


def test_shortcut_whole_graph():
    g = grid(7)
    net = SimNetwork(g)
    sc = dist.shortcut_oracle(net, [list(range(g.n))])
    assert sc.dilation <= 2 * net.hop_radius
    assert sc.charged == net.ledger.charged


def test_shortcut_levels_on_grid():
    g = grid(8)
    net = SimNetwork(g)
    bdd = build_bdd(g, leaf_threshold=8)
    for depth, bags in bdd.by_depth().items():
        sc = dist.shortcut_oracle(net, [b.vertices for b in bags])
        assert sc.congestion <= len(bags)


def test_shortcut_rejects_disconnected_part():
    net = SimNetwork(path(5))
    with pytest.raises(DisconnectedPart):
        dist.shortcut_oracle(net, [[0, 4]])


@pytest.mark.parametrize("seed,mode", [(1, "bfs"), (27, "bfs"), (5, "sssp")])
def test_split_graph(seed, mode):
    rng = random.Random(seed)
    g = random_graph(rng, 150)
    if mode == "sssp":
        g = reweight(g, rng, 9)
    t = bfs_tree(g, 0) if mode == "bfs" else sssp_tree(g, 0)
    bdd = build_bdd(g, t, mode=mode, leaf_threshold=max(4, default_leaf_threshold(g, t, mode) // 4))
    D = max(bfs_tree(g, 0).depth())
    for depth, bags in bdd.by_depth().items():
        sp = dist.split_graph(g, bags)
        h = sp.graph
        assert validate_embedding(h).valid and sp.contiguous
        hats = []
        for b in bags:
            hat = {sp.copy.get((v, b.id), v) for v in b.vertices}
            assert {sp.origin[x] for x in hat} == set(b.vertices)
            for e in b.edges():
                x, y, _ = h.edges[sp.instances[(e, b.id)]]
                assert x in hat and y in hat
            hats.append(hat)
        # bag parts are vertex-disjoint in the split graph
        assert sum(map(len, hats)) == len(set().union(*hats))
        hops = bfs_all(h)
        assert max(max(r) for r in hops) <= 3 * D + 4


def test_split_frame_load():
    g = grid(8)
    bdd = build_bdd(g, leaf_threshold=8)
    bags = bdd.by_depth()[2]
    sp = dist.split_graph(g, bags)
    net = SimNetwork(sp.graph, keep_transcript=True)
    from pmk.congest import BfsProgram, run_program
    run_program(net, BfsProgram(0))
    # one round on the split graph maps to at most two frames per original link
    assert dist.split_frame_load(sp, net.transcript) <= 2

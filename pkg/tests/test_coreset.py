from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from helpers import dijkstra_all, path
from pmk import coreset as CS
from pmk.corpus import random_instance
from pmk.errors import NonpositiveParam, SourceGapExceeded
from pmk.planar import FaceVertexSequence, PlanarGraph, face_sources, generate


def weighted_path(ws):
    n = len(ws) + 1
    edges = [(i, i + 1, w) for i, w in enumerate(ws)]
    rot = [[] for _ in range(n)]
    for e in range(len(edges)):
        rot[e].append(e)
        rot[e + 1].insert(0, e)
    return PlanarGraph(n, edges, rot, weighted=True)


def test_grid_values():
    vals = CS.grid(2, 1, Fraction(1, 2)).values()
    assert len(vals) == 9 and vals[0] == -1 and vals[-1] == 1 and vals[1] == Fraction(-3, 4)
    assert CS.grid(1, 1, 1).values() == [-1, 0, 1]


def test_single_vertex_coreset():
    g = PlanarGraph(1, [], [[]])
    cs = CS.additive_coreset(g, FaceVertexSequence(0, (0,), True), 3)
    assert cs.members == [0]


def test_p4_big_delta_one_member():
    g = path(4)
    cs = CS.additive_coreset(g, face_sources(g, 0, 2), 10)
    assert len(cs.members) == 1
    assert CS.max_witness_error(cs.extra["tuples"], cs) <= 10


def test_bad_params():
    g = path(4)
    with pytest.raises(NonpositiveParam):
        CS.additive_coreset(g, face_sources(g, 0, 2), 0)
    g = weighted_path([5, 5, 5])
    with pytest.raises(SourceGapExceeded):
        CS.additive_coreset(g, face_sources(g, 0, 2), 1, d=2)


def test_identical_tuples_share_a_member():
    tuples = [(1, 2), (1, 2), (3, 2), (1, 2)]
    cs = CS.bucket_coreset(tuples, Fraction(1, 2), 1)
    assert cs.witness[0] == cs.witness[1] == cs.witness[3]
    assert CS.max_witness_error(tuples, cs) == 0


@given(st.integers(0, 10_000), st.sampled_from([Fraction(1, 2), 1, 2, 5]))
def test_witness_closeness_weighted(seed, delta):
    g, S = random_instance(seed, nmax=60, smax=6, weighted=True, wmax=8)
    cs = CS.additive_coreset(g, S, delta)
    assert CS.max_witness_error(cs.extra["tuples"], cs) <= delta
    assert all(cs.witness[m] == m for m in cs.members)
    # k runs over d(v, s_1) / delta', so d has to cover the eccentricity of s_1
    d = max(cs.extra["gap"], cs.extra["ecc"])
    assert len(cs.members) <= cs.extra["buckets"] <= 3 * CS.size_bound(len(S.vertices), d, delta)


@given(st.integers(0, 10_000))
def test_pruning_keeps_closeness(seed):
    g, S = random_instance(seed, nmax=50, smax=5, weighted=True, wmax=6)
    raw = CS.additive_coreset(g, S, 2, prune=False)
    cs = CS.additive_coreset(g, S, 2)
    assert set(cs.members) <= set(raw.members)
    assert CS.max_witness_error(cs.extra["tuples"], cs) <= 2


def test_ldd_single_vertex():
    g = PlanarGraph(1, [], [[]])
    for seed in range(5):
        assert len(CS.ldd(g, 0.5, seed).components) == 1


def test_ldd_tiny_beta_rarely_splits():
    g = path(3)
    splits = sum(len(CS.ldd(g, 1e-6, seed).components) > 1 for seed in range(2000))
    # each of the two edges is cut with probability at most about beta
    assert splits <= 2


@given(st.integers(0, 10_000), st.sampled_from([0.05, 0.3, 1.0]))
def test_ldd_clusters_connected(seed, beta):
    g = generate("random-triangulation", {"n": 40, "wmax": 5}, seed=seed)
    part = CS.ldd(g, beta, seed)
    for ci, comp in enumerate(part.components):
        local, _ = g.induced(comp, keep_virtual=False)
        assert local.is_connected()
        assert all(part.comp_of[v] == ci for v in comp)


def _check_mc(g, S, eps, seeds):
    ref = dijkstra_all(g)
    bad = total = 0
    for seed in seeds:
        mc = CS.multiplicative_compress(g, S, eps, seed)
        for i, s in enumerate(S.vertices):
            for t in range(g.n):
                est = CS.multiplicative_decode(mc, i, t)
                total += 1
                assert est >= ref[s][t]
                bad += est > (1 + Fraction(eps)) * ref[s][t]
    return bad, total


def test_mcompress_same_vertex_is_zero():
    g, S = random_instance(4, nmax=40, smax=4, weighted=True)
    mc = CS.multiplicative_compress(g, S, 1, 0)
    assert all(CS.multiplicative_decode(mc, i, s) == 0 for i, s in enumerate(S.vertices))


def test_mcompress_weighted_p3():
    g = weighted_path([3, 7])
    S = face_sources(g, 0, 2)
    bad, _ = _check_mc(g, S, Fraction(1, 2), range(32))
    assert bad == 0


def test_mcompress_two_scales():
    g = weighted_path([1, 1, 1, 1000, 1000, 1, 1])
    S = face_sources(g, 0, 3)
    bad, total = _check_mc(g, S, Fraction(1, 4), range(8))
    assert bad <= total // 100

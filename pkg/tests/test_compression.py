import random

import pytest
from hypothesis import given, strategies as st

from helpers import bfs_all, cycle, path
from pmk import compression as C
from pmk.corpus import random_instance
from pmk.errors import InconsistentMembership, InvalidParams, SourcesNotOnFace
from pmk.planar import FaceVertexSequence, PlanarGraph, face_sources, generate
from test_separator import star


def test_tuples_small():
    g = path(3)
    S = face_sources(g, 0, 2)
    assert S.vertices == (0, 1)
    assert C.compute_tuples(g, S)[2] == (2, 1)
    c4 = cycle(4)
    assert C.compute_tuples(c4, face_sources(c4, 0, 2))[3] == (1, 2)
    one = PlanarGraph(1, [], [[]])
    assert C.compute_tuples(one, FaceVertexSequence(0, (0,), True)) == [(0,)]


def test_membership_family_p3():
    g = path(3)
    per, fam = C.membership_family(g, face_sources(g, 0, 2))
    assert per[0] == {(1, -1), (1, 0)}
    assert per[1] == set() and per[2] == set()
    assert len(fam) == 2


def test_single_source_family():
    g = generate("random-triangulation", {"n": 20}, seed=2)
    S = face_sources(g, 0, 1)
    assert C.universe(1) == []
    assert len(C.membership_family(g, S)[1]) == 1


def test_reconstruct_examples():
    assert C.reconstruct_tuple(1, 2, set(), 2) == (2, 1)
    assert C.reconstruct_tuple(1, 0, {(1, -1), (1, 0)}, 2) == (0, 1)
    assert C.reconstruct_tuple(1, 5, set(), 1) == (5,)


def test_reconstruct_rejects_garbage():
    with pytest.raises(InconsistentMembership):
        C.reconstruct_tuple(1, 0, {(4, 0)}, 2)
    with pytest.raises(InvalidParams):
        C.reconstruct_tuple(1, 0, set(), 2, deltas=(-1, 0, 1))


def test_encode_p3():
    g = path(3)
    tab = C.encode(g, face_sources(g, 0, 2))
    assert tab.rows == 3
    assert C.decode(tab, 0, 2) == 2


def test_star_leaves_share_tuples():
    g = star(6)
    S = FaceVertexSequence(0, (1, 2), False)
    tab = C.encode(g, S, T=list(range(1, 7)))
    assert tab.rows <= 3
    assert [C.decode(tab, 0, t) for t in range(1, 7)] == [0, 2, 2, 2, 2, 2]


def test_sources_off_face():
    g = path(4)
    with pytest.raises(SourcesNotOnFace):
        C.encode(g, FaceVertexSequence(0, (0, 2), True))


def test_vc_examples():
    fam = [frozenset(), frozenset("a"), frozenset("b"), frozenset("ab")]
    assert C.vc_dimension(fam, ["a", "b"]) == 2
    g = path(3)
    per, fam = C.membership_family(g, face_sources(g, 0, 2))
    assert C.vc_dimension(fam, C.universe(2)) == 1


def test_bytes_roundtrip():
    g, S = random_instance(11, nmax=80, smax=8)
    tab = C.encode(g, S)
    back = C.TupleTable.from_bytes(tab.to_bytes())
    assert back.table == tab.table and back.index_of == tab.index_of
    assert back.to_bytes() == tab.to_bytes()


@given(st.integers(0, 10_000))
def test_decode_exact_and_surjection(seed):
    g, S = random_instance(seed, nmax=60, smax=8)
    tab = C.encode(g, S)
    ref = bfs_all(g)
    for i, s in enumerate(S.vertices):
        for t in range(g.n):
            assert C.decode(tab, i, t) == ref[s][t]
    tuples = C.compute_tuples(g, S)
    per, _ = C.membership_family(g, S, tuples=tuples)
    ell = len(S.vertices)
    for v in range(g.n):
        for r in range(1, ell + 1):
            assert C.reconstruct_tuple(r, tuples[v][r - 1], per[v], ell) == tuples[v]


@given(st.integers(0, 10_000))
def test_no_four_shattered(seed):
    g, S = random_instance(seed, nmax=50, smax=8)
    _, fam = C.membership_family(g, S)
    assert C.vc_dimension(fam, C.universe(len(S.vertices))) <= 3

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from helpers import bfs_all, cycle, dijkstra_all, grid, oracle_diameter, path
from pmk.corpus import random_graph, reweight
from pmk.diameter import approx_diameter, exact_diameter
from pmk.errors import Disconnected, InvalidParams
from pmk.planar import PlanarGraph, generate


def weighted_cycle(n, w):
    g = cycle(n)
    return PlanarGraph(n, [(u, v, w) for u, v, _ in g.edges], g.rotation, weighted=True)


def test_small_exact():
    assert exact_diameter(path(5)).value == 4
    assert exact_diameter(grid(4)).value == 6


def test_single_edge_weight_seven():
    g = PlanarGraph(2, [(0, 1, 7)], [[0], [0]], weighted=True)
    for eps in (1, Fraction(1, 2), Fraction(1, 8)):
        assert approx_diameter(g, eps).value == 7


@pytest.mark.parametrize("eps", [1, Fraction(1, 4)])
def test_weighted_cycle(eps):
    est = approx_diameter(weighted_cycle(6, 2), eps).value
    assert 6 <= est <= 6 * (1 + Fraction(eps))


def test_rejects_bad_input():
    with pytest.raises(InvalidParams):
        approx_diameter(path(3), 0)
    g = PlanarGraph(3, [(0, 1, 1)], [[0], [0], []])
    with pytest.raises(Disconnected):
        exact_diameter(g)


def test_triangulations_match_oracle():
    rng = random.Random(11)
    for i in range(100):
        g = generate("random-triangulation", {"n": rng.randint(4, 500)}, seed=i)
        res = exact_diameter(g)
        assert res.value == oracle_diameter(g)
        # balanced separators keep the recursion logarithmic
        assert res.max_depth() <= math.ceil(math.log(g.n, 1.5))


@given(st.integers(0, 10_000))
def test_exact_random_graphs(seed):
    g = random_graph(random.Random(seed), 160)
    assert exact_diameter(g).value == oracle_diameter(g)


@given(st.integers(0, 10_000), st.sampled_from([1, Fraction(1, 4)]))
def test_approx_sandwich(seed, eps):
    rng = random.Random(seed)
    g = reweight(random_graph(rng, 160), rng, 16)
    res = approx_diameter(g, eps, seed=seed)
    true = oracle_diameter(g)
    assert true <= res.value <= (1 + Fraction(eps)) * true


@pytest.mark.parametrize("k,eps", [(16, 1), (16, Fraction(1, 4)), (12, Fraction(1, 2))])
def test_approx_weighted_grids(k, eps):
    g = grid(k, wmax=16, seed=k)
    true = oracle_diameter(g)
    est = approx_diameter(g, eps).value
    assert true <= est <= (1 + eps) * true


@given(st.integers(0, 10_000))
def test_frames_are_sound(seed):
    """Every pair split by a frame's separator is realized through its boundary."""
    g = random_graph(random.Random(seed), 128)
    rows = bfs_all(g)
    res = exact_diameter(g)
    for f in res.frames:
        if f.brute or not f.separator:
            continue
        B = f.boundary
        groups = [[c] for c in f.separator] + f.parts
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                for x in groups[i][:6]:
                    for y in groups[j][:6]:
                        assert rows[x][y] == min(rows[x][b] + rows[b][y] for b in B)
        # the frame's cross value is a real distance, never above the diameter
        assert f.cross is None or f.cross <= res.value

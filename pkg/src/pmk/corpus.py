"""Seeded instance families shared by tests, the acceptance run and the CLI."""

from __future__ import annotations

import random

from .planar import PlanarGraph, bfs_tree, face_sources, generate


def sparse_planar(n, seed, keep=0.3):
    """Random connected planar graph: a spanning tree of a random
    triangulation plus each remaining edge with probability ``keep``."""
    rng = random.Random(seed)
    g = generate("random-triangulation", {"n": max(3, n)}, seed=seed)
    t = bfs_tree(g, rng.randrange(g.n))
    kept = sorted(set(t.edge_set) | {e for e in range(g.m) if rng.random() < keep})
    idx = {e: i for i, e in enumerate(kept)}
    rot = [[idx[e] for e in g.rotation[v] if e in idx] for v in range(g.n)]
    return PlanarGraph(g.n, [g.edges[e] for e in kept], rot)


def reweight(g, rng, wmax):
    return PlanarGraph(g.n, [(u, v, rng.randint(1, wmax)) for u, v, _ in g.edges],
                       g.rotation, True, g.virtual)


def largest_face(g):
    faces = g.faces()
    return max(range(len(faces)), key=lambda f: (len(set(g.tail(d) for d in faces[f])), -f))


def random_graph(rng, nmax, kinds=("grid", "triangulation", "sparse")):
    kind = rng.choice(kinds)
    if kind == "grid":
        side = max(2, int(nmax ** 0.5))
        rows = rng.randint(2, side)
        cols = rng.randint(2, max(2, min(side, nmax // rows)))
        return generate("grid", {"rows": rows, "cols": cols})
    n = rng.randint(4, nmax)
    if kind == "triangulation":
        return generate("random-triangulation", {"n": n}, seed=rng.randrange(2**31))
    return sparse_planar(n, rng.randrange(2**31), keep=rng.random() * 0.6)


def random_instance(seed, nmax=256, smax=16, weighted=False, wmax=16, kinds=None):
    """A graph with face-consecutive sources taken from its largest face."""
    rng = random.Random(seed)
    g = random_graph(rng, nmax, kinds or ("grid", "triangulation", "sparse"))
    if weighted:
        g = reweight(g, rng, wmax)
    f = largest_face(g)
    walk_len = len(g.faces()[f])
    S = face_sources(g, f, rng.randint(1, smax), start=rng.randrange(walk_len))
    return g, S


def grid_family(ks, weighted=False, seed=0, wmax=16):
    rng = random.Random(seed)
    for k in ks:
        g = generate("grid", {"rows": k, "cols": k})
        yield k, (reweight(g, rng, wmax) if weighted else g)

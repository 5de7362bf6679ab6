"""Centralized divide-and-conquer diameter.

A frame is a connected vertex set K.  A balanced cycle separator C of G[K]
splits K - C into components; every shortest path between two of them, or
from a cycle vertex, passes through C or leaves K through its outside
neighbourhood N(K), which consists of ancestor separator vertices.  Cross
pairs are therefore evaluated from G-distance tuples to B = C + N(K) by a
min-plus over B, on one representative per tuple class (exact mode) or per
grid cell over portal tuples (approximate mode).  Components recurse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .distributed import portal_set
from .errors import Disconnected, InvalidParams, PmkError
from .planar import INF, bfs_tree, components, distances, sssp_tree
from .separator import biconnect_augment, cycle_separator, is_biconnected

LEAF_SIZE = 8


@dataclass
class RecursionFrame:
    depth: int
    vertices: list
    separator: list
    boundary: list  # vertices the cross tuples are taken to
    parts: list  # components of the frame minus its separator
    reps: list  # representatives per part (core-set)
    cross: object  # farthest cross pair value found here
    brute: bool = False


@dataclass
class DiameterResult:
    value: object
    frames: list
    stats: dict = field(default_factory=dict)

    def max_depth(self):
        return max((f.depth for f in self.frames), default=0)


class _Rows:
    """Memoized G-distance rows."""

    def __init__(self, g):
        self.g = g
        self.rows = {}

    def __call__(self, s):
        r = self.rows.get(s)
        if r is None:
            r = self.rows[s] = distances(self.g, s)
        return r


def _separate(g, K, weighted):
    """Balanced cycle of G[K] as a vertex list in G's ids (or None)."""
    local, old = g.induced(K, keep_virtual=False)
    t = sssp_tree(local, 0) if weighted else bfs_tree(local, 0)
    aug = local if is_biconnected(local) else biconnect_augment(local).graph
    try:
        sep = cycle_separator(aug, t)
    except PmkError:
        return None, local, old, t
    return [old[x] for x in sep.cycle], local, old, t


def _outside_nbrs(g, K):
    ks = set(K)
    return sorted({y for x in K for y, _ in g.adj[x] if y not in ks})


def _brute(K, rows):
    best = 0
    for i, u in enumerate(K):
        r = rows(u)
        for v in K[i + 1:]:
            best = max(best, r[v])
    return best


def _recurse(g, rows, frame_fn, leaf_size):
    """Drive frames breadth-first; frame_fn(depth, K) -> (frame, parts)."""
    frames = []
    best = 0
    queue = [(0, sorted(range(g.n)))]
    while queue:
        nxt = []
        for depth, K in queue:
            if len(K) <= leaf_size:
                val = _brute(K, rows)
                frames.append(RecursionFrame(depth, K, [], [], [K], [K], val, True))
                best = max(best, val)
                continue
            frame, parts = frame_fn(depth, K)
            frames.append(frame)
            if frame.cross is not None:
                best = max(best, frame.cross)
            nxt += [(depth + 1, p) for p in parts]
        queue = nxt
    return best, frames


def _parts(g, K, C):
    cs = set(C)
    rest = [v for v in K if v not in cs]
    if not rest:
        return []
    local, old = g.induced(rest, keep_virtual=False)
    return [[old[x] for x in comp] for comp in components(local)]


def _cross_pairs(groups, value):
    """max of value(x, y) over representatives in different groups."""
    best = None
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            for x in groups[i]:
                for y in groups[j]:
                    v = value(x, y)
                    if v < INF and (best is None or v > best):
                        best = v
    return best


def exact_diameter(g, leaf_size=LEAF_SIZE):
    """Exact diameter of a connected unweighted graph."""
    if g.n == 0:
        raise InvalidParams("empty graph")
    if not g.is_connected():
        raise Disconnected("graph is not connected")
    rows = _rows_checked(g)

    def frame(depth, K):
        C, *_ = _separate(g, K, False)
        if C is None:
            val = _brute(K, rows)
            return RecursionFrame(depth, K, [], [], [K], [K], val, True), []
        parts = _parts(g, K, C)
        B = sorted(set(C) | set(_outside_nbrs(g, K)))
        brows = [rows(b) for b in B]
        tup = lambda v: tuple(r[v] for r in brows)
        groups = [[c] for c in C] + parts
        reps = []
        for grp in groups:
            seen = {}
            for v in grp:
                seen.setdefault(tup(v), v)
            reps.append(sorted(seen.values()))
        tcache = {v: tup(v) for grp in reps for v in grp}
        val = _cross_pairs(reps, lambda x, y: min(a + b for a, b in zip(tcache[x], tcache[y])))
        return RecursionFrame(depth, K, C, B, parts, reps, val), parts

    best, frames = _recurse(g, rows, frame, leaf_size)
    return DiameterResult(best, frames, {"depth": max(f.depth for f in frames),
                                         "max_classes": max(len(r) for f in frames for r in f.reps)})


def _rows_checked(g):
    rows = _Rows(g)
    if any(d == INF for d in rows(0)):
        raise Disconnected("graph is not connected")
    return rows


def approx_diameter(g, eps, seed=0, leaf_size=LEAF_SIZE):
    """(1+eps) estimate, never below the diameter.

    D~ = 2 ecc(0) bounds the diameter from above; cross tuples are G-distances
    to the portals of the frame cycle (spacing eps' D~ along the two
    shortest-path halves, eps' = eps / (8 log^2 n)) and to the portals the
    outside neighbours snapped to in their own frames.  Tuples are bucketed
    in an l_inf grid of side delta/2 with delta = eps D~ / 3; one
    representative per (cell, part) is kept and the cross value gets 2 cells
    of slack, so it bounds every cross pair from above.  The grid is fixed,
    which makes the construction deterministic; ``seed`` is accepted for a
    uniform interface.
    """
    eps = Fraction(eps)
    if not 0 < eps <= 1:
        raise InvalidParams("eps must lie in (0, 1]")
    if g.n == 0:
        raise InvalidParams("empty graph")
    rows = _rows_checked(g)
    ecc = max(rows(0))
    Dt = 2 * ecc
    L = max(1.0, math.log2(max(g.n, 2)))
    eps_p = eps / Fraction(8 * L * L).limit_denominator(10**6)
    spacing = eps_p * Dt
    delta = eps * Dt / 3
    cell = delta / 2
    snap = {}
    stats = {"D_tilde": Dt, "delta": delta, "spacing": spacing, "portals": [], "cores": []}

    def frame(depth, K):
        C, local, old, t = _separate(g, K, True)
        if C is None:
            val = _brute(K, rows)
            return RecursionFrame(depth, K, [], [], [K], [K], val, True), []
        new = {v: i for i, v in enumerate(old)}
        ldist = distances(local, 0)
        ps = portal_set(local, t, ldist, [new[c] for c in C], spacing)
        for x, q in ps.snap.items():
            snap.setdefault(old[x], old[q])
        stats["portals"].append(len(ps))
        Q = sorted({old[q] for q in ps.portals} | {snap.get(y, y) for y in _outside_nbrs(g, K)})
        qrows = [rows(q) for q in Q]
        parts = _parts(g, K, C)
        groups = [[c] for c in C] + parts
        reps = []
        tcache = {}
        for grp in groups:
            cells = {}
            for v in grp:
                tv = tuple(r[v] for r in qrows)
                key = tuple(math.floor(x / cell) for x in tv)
                if key not in cells:
                    cells[key] = v
                    tcache[v] = tv
            reps.append(sorted(cells.values()))
        stats["cores"].append(sum(len(r) for r in reps))
        val = _cross_pairs(reps, lambda x, y: min(a + b for a, b in zip(tcache[x], tcache[y])))
        if val is not None:
            val = val + 2 * cell
        return RecursionFrame(depth, K, C, Q, parts, reps, val), parts

    raw, frames = _recurse(g, rows, frame, leaf_size)
    est = min(max(Fraction(raw), Fraction(ecc)), Fraction(Dt))
    stats["raw"] = raw
    stats["depth"] = max(f.depth for f in frames)
    return DiameterResult(est, frames, stats)

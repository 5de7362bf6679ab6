"""Additive core-sets for weighted face sources, LDDs, and the multiplicative
reduction built on top of them."""

from __future__ import annotations

import heapq
import math
import random
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import NonpositiveParam, PairNeverCoClustered, SourceGapExceeded
from .planar import INF, check_sources, distances


@dataclass
class GridSpec:
    ell: int
    d: Fraction
    delta_p: Fraction
    M: list | None  # None when only K and the step are needed

    @property
    def K(self):
        return math.ceil(self.ell * self.d / self.delta_p)

    @property
    def step(self):
        return self.delta_p / self.ell

    def values(self):
        return self.M if self.M is not None else [j * self.step for j in range(-self.K, self.K + 1)]


def grid(ell, d, delta_p):
    """Multiples of delta_p/ell from -ceil(ell*d/delta_p) to +ceil(...) steps."""
    if ell <= 0 or d <= 0 or delta_p <= 0:
        raise NonpositiveParam("grid parameters must be positive")
    d, delta_p = Fraction(d), Fraction(delta_p)
    step = delta_p / ell
    K = math.ceil(ell * d / delta_p)
    return GridSpec(ell, d, delta_p, [j * step for j in range(-K, K + 1)])


def grid_signature(tup, M):
    """Canonical form of the membership set {(i, D) : t_i <= t_{i+1} + D, D in M}.

    Membership is a threshold in D, so the set is fixed by the first grid
    index whose value reaches t_i - t_{i+1}.
    """
    return tuple(bisect_left(M, tup[i] - tup[i + 1]) for i in range(len(tup) - 1))


def _fast_signature(tup, K, step):
    # same value as grid_signature without materializing M
    out = []
    for i in range(len(tup) - 1):
        j = K + math.ceil(Fraction(tup[i] - tup[i + 1]) / step)
        out.append(min(max(j, 0), 2 * K + 1))
    return tuple(out)


def signature_to_set(sig, M):
    return frozenset((i + 1, M[j]) for i, first in enumerate(sig) for j in range(first, len(M)))


@dataclass
class CoreSet:
    members: list
    witness: list  # vertex -> member
    delta: Fraction
    bucket_of: dict  # member -> (family index, k)
    family_size: int = 0
    d: Fraction = Fraction(0)
    grid: GridSpec | None = None
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.members)


def source_gap(g, S, rows=None):
    """Largest distance between cyclically consecutive sources."""
    rows = rows or [distances(g, s) for s in S.vertices]
    ell = len(S.vertices)
    if ell == 1:
        return 0
    pairs = [(i, (i + 1) % ell) for i in range(ell)] if ell > 2 else [(0, 1)]
    return max(rows[i][S.vertices[j]] for i, j in pairs)


def bucket_coreset(tuples, delta, d, ell=None):
    """Bucket construction on precomputed tuples (no face check).

    Buckets are keyed by the grid signature and k = floor(d(v, s_1) / delta').
    """
    n = len(tuples)
    ell = len(tuples[0]) if ell is None else ell
    delta = Fraction(delta)
    dp = delta / 2
    use_grid = ell > 1 and d > 0
    if use_grid:
        if dp <= 0:
            raise NonpositiveParam("delta must be positive")
        K = math.ceil(ell * Fraction(d) / dp)
        step = dp / ell
    buckets = {}
    fam = {}
    witness = [None] * n
    for v in range(n):
        t = tuples[v]
        sig = _fast_signature(t, K, step) if use_grid else ()
        fi = fam.setdefault(sig, len(fam))
        k = math.floor(Fraction(t[0]) / dp) if dp > 0 else t[0]
        rep = buckets.setdefault((fi, k), v)
        witness[v] = rep
    members = sorted(set(buckets.values()))
    bucket_of = {rep: key for key, rep in buckets.items()}
    spec = GridSpec(ell, Fraction(d), dp, None) if use_grid else None
    return CoreSet(members, witness, delta, bucket_of, len(fam), Fraction(d), spec)


def prune_coreset(tuples, cs):
    """Fold a bucket into an earlier member when every vertex of the bucket is
    within delta of that member.  Only shrinks; closeness is checked exactly."""
    groups = {}
    for v, m in enumerate(cs.witness):
        groups.setdefault(m, []).append(v)
    kept = []
    for m in cs.members:
        grp = groups[m]
        home = next((k for k in kept
                     if all(max(abs(a - b) for a, b in zip(tuples[v], tuples[k])) <= cs.delta
                            for v in grp)), None)
        if home is None:
            kept.append(m)
            continue
        for v in grp:
            cs.witness[v] = home
        cs.bucket_of.pop(m, None)
    cs.extra["buckets"] = len(cs.members)
    cs.members = sorted(kept)
    return cs


def additive_coreset(g, S, delta, d=None, prune=True):
    """delta-additive core-set w.r.t. S (the bucket construction, delta' = delta/2),
    optionally shrunk by ``prune_coreset``.  extra["ecc"] is the largest
    d(v, s_1), the range the bucket index k has to cover."""
    if delta <= 0:
        raise NonpositiveParam("delta must be positive")
    check_sources(g, S)
    rows = [distances(g, s) for s in S.vertices]
    gap = source_gap(g, S, rows)
    if d is None:
        d = gap
    elif gap > d:
        raise SourceGapExceeded(f"consecutive sources are {gap} apart, above d={d}")
    tuples = [tuple(r[v] for r in rows) for v in range(g.n)]
    cs = bucket_coreset(tuples, delta, d if d > 0 else Fraction(delta), len(S.vertices))
    cs.extra["tuples"] = tuples
    cs.extra["gap"] = gap
    cs.extra["ecc"] = max(t[0] for t in tuples)
    if prune:
        prune_coreset(tuples, cs)
    return cs


def max_witness_error(tuples, cs):
    return max((max(abs(a - b) for a, b in zip(tuples[v], tuples[cs.witness[v]]))
                for v in range(len(tuples))), default=0)


def size_bound(ell, d, delta):
    """ell^6 (d/delta)^4 with d/delta clamped below at 1."""
    ratio = max(Fraction(1), Fraction(d) / Fraction(delta))
    return ell ** 6 * ratio ** 4


# --- low-diameter decomposition ------------------------------------------


@dataclass
class LddPartition:
    components: list
    comp_of: list
    beta: float
    seed: int
    centers: list


def ldd(g, beta, seed, active=None):
    """Exponentially shifted clustering.

    Every vertex draws a shift Exp(beta); v joins the center u minimizing
    d(u, v) - shift(u), ties to the smaller center.  Owners propagate along
    shortest paths, so each cluster induces a connected subgraph.
    """
    if beta <= 0:
        raise NonpositiveParam("beta must be positive")
    rng = random.Random(seed)
    shifts = [rng.expovariate(beta) for _ in range(g.n)]
    top = max(shifts, default=0.0)
    best = [(INF, -1)] * g.n
    heap = []
    for u in range(g.n):
        key = (top - shifts[u], u)
        best[u] = key
        heap.append((key[0], u, u))
    heapq.heapify(heap)
    done = [False] * g.n
    owner = [-1] * g.n
    while heap:
        val, c, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        owner[x] = c
        for y, e in g.adj[x]:
            if done[y]:
                continue
            cand = (val + float(g.edges[e][2]), c)
            if cand < best[y]:
                best[y] = cand
                heapq.heappush(heap, (cand[0], c, y))
    groups = {}
    for v in range(g.n):
        groups.setdefault(owner[v], []).append(v)
    centers = sorted(groups)
    components = [groups[c] for c in centers]
    comp_of = [0] * g.n
    for i, comp in enumerate(components):
        for v in comp:
            comp_of[v] = i
    return LddPartition(components, comp_of, beta, seed, centers)


# --- multiplicative compression ------------------------------------------


@dataclass
class _Piece:
    local_sources: dict  # source index -> local source position
    rows: dict  # member vertex -> tuple over local sources
    witness: dict  # vertex -> member
    delta: Fraction


@dataclass
class MultiCompression:
    ell: int
    sources: tuple
    eps: Fraction
    eps_p: Fraction
    ldds: list  # (comp_of, pieces)
    stats: dict = field(default_factory=dict)


def _dijkstra_local(g, s, allowed):
    dist = {s: 0}
    heap = [(0, s)]
    done = set()
    while heap:
        dx, x = heapq.heappop(heap)
        if x in done:
            continue
        done.add(x)
        for y, e in g.adj[x]:
            if y not in allowed:
                continue
            nd = dx + g.edges[e][2]
            if nd < dist.get(y, INF):
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


@dataclass
class LddLayers:
    """LDDs at every scale with per-component local tuples; independent of eps."""

    sources: tuple
    scales: list
    reps: int
    layers: list  # (comp_of, [None | (local, order, tuples, bound)])


def ldd_layers(g, S, seed, reps=None):
    """Sample the LDDs for every doubling scale x (powers of two up to 4W, in
    units of the lightest edge) with beta = 1/x, and tabulate local tuples."""
    n = g.n
    logn = max(1.0, math.log2(max(n, 2)))
    reps = math.ceil(3 * logn) if reps is None else reps
    unit = min((w for _, _, w in g.edges), default=1)
    far = max((max(x for x in distances(g, s) if x != INF) for s in S.vertices), default=0)
    W = max(1, Fraction(far) / Fraction(unit))
    scales = []
    x = 1
    while x <= 4 * W:
        scales.append(x)
        x *= 2
    rng = random.Random(seed)
    layers = []
    for x in scales:
        beta = 1.0 / (x * float(unit))
        for _ in range(reps):
            part = ldd(g, beta, rng.randrange(2**63))
            pieces = []
            for ci, comp in enumerate(part.components):
                allowed = set(comp)
                local = [s for s in S.vertices if s in allowed]
                if not local:
                    pieces.append(None)
                    continue
                radius = max(_dijkstra_local(g, part.centers[ci], allowed).values())
                rows = [_dijkstra_local(g, s, allowed) for s in local]
                order = sorted(comp)
                tuples = [tuple(r[v] for r in rows) for v in order]
                pieces.append((local, order, tuples, 2 * radius))
            layers.append((part.comp_of, pieces))
    return LddLayers(tuple(S.vertices), scales, reps, layers)


def multiplicative_compress(g, S, eps, seed, reps=None, layers=None):
    """Overestimating (1+eps) compression via LDDs at doubling scales.

    Each LDD component gets an additive core-set with error eps' times an
    upper bound on its diameter, eps' = eps / (4 log2 n).  Pass ``layers``
    from ``ldd_layers`` to reuse the sampled LDDs across several eps.
    """
    if eps <= 0:
        raise NonpositiveParam("eps must be positive")
    eps = Fraction(eps)
    logn = max(1.0, math.log2(max(g.n, 2)))
    eps_p = eps / Fraction(4 * logn).limit_denominator(10**6)
    if layers is None:
        layers = ldd_layers(g, S, seed, reps)
    src_index = {s: i for i, s in enumerate(S.vertices)}
    ldds = []
    sizes = []
    for comp_of, raw in layers.layers:
        pieces = []
        for item in raw:
            if item is None:
                pieces.append(None)
                continue
            local, order, tuples, bound = item
            delta = eps_p * Fraction(bound) if bound else Fraction(0)
            if delta > 0:
                cs = bucket_coreset(tuples, delta, bound, len(local))
                wit = {order[i]: order[cs.witness[i]] for i in range(len(order))}
                mem = [order[i] for i in cs.members]
            else:
                wit = {v: v for v in order}
                mem = order
            pos = {v: i for i, v in enumerate(order)}
            stored = {m: tuples[pos[m]] for m in mem}
            sizes.append(len(mem))
            pieces.append(_Piece({src_index[s]: j for j, s in enumerate(local)}, stored, wit, delta))
        ldds.append((comp_of, pieces))
    mc = MultiCompression(len(S.vertices), tuple(S.vertices), eps, eps_p, ldds)
    mc.stats = {"scales": len(layers.scales), "reps": layers.reps, "ldds": len(ldds),
                "stored_rows": sum(sizes), "max_piece": max(sizes, default=0)}
    return mc


def multiplicative_decode(mc, s_index, t, strict=False):
    """Smallest inflated estimate over LDDs that co-cluster s and t."""
    s = mc.sources[s_index]
    if s == t:
        return 0
    best = INF
    for comp_of, pieces in mc.ldds:
        if comp_of[s] != comp_of[t]:
            continue
        piece = pieces[comp_of[t]]
        w = piece.witness[t]
        est = piece.rows[w][piece.local_sources[s_index]]
        if w != t:
            est += piece.delta
        if est < best:
            best = est
    if best == INF and strict:
        raise PairNeverCoClustered(f"source {s} and {t} never share a component")
    return best

"""Distributed programs on top of the simulator: distance labels from a
bounded diameter decomposition, exact unweighted diameter, weighted labels
and SSSP, and the (1+eps) weighted diameter with portals.

Structural objects (the decomposition, shortcuts, portal marks) are computed
centrally and charged to the ledger; every transfer of labels, tuples, hashes
and aggregates runs through the simulator.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .bdd import build_bdd
from .congest import broadcast, build_trees, converge, exchange, multi_bfs
from .errors import (DisconnectedPart, HashCollisionDetected, InvalidParams,
                     RetriesExhausted)
from .fasttuples import hash_params, tuple_hash
from .planar import INF, PlanarGraph, bfs_tree, tree_from_parents

# --- labels ------------------------------------------------------------------


@dataclass
class DistanceLabel:
    """Sub-labels along the decomposition path of one vertex.

    Each sub-label is ``(next bag id, {separator vertex: distance})``, with
    next = -1 where the vertex is itself a separator vertex.  A walk that
    reaches a leaf bag ends with the full in-bag distance list ``leaf``.
    """

    vertex: int
    sublabels: list = field(default_factory=list)
    leaf: dict | None = None

    def words(self):
        out = [self.vertex, len(self.sublabels)]
        for nxt, ds in self.sublabels:
            out += [nxt, len(ds)]
            for s in sorted(ds):
                out += [s, ds[s]]
        if self.leaf is None:
            out.append(-1)
        else:
            out.append(len(self.leaf))
            for u in sorted(self.leaf):
                out += [u, self.leaf[u]]
        return out

    @classmethod
    def from_words(cls, w):
        it = iter(w)
        v = next(it)
        subs = []
        for _ in range(next(it)):
            nxt, k = next(it), next(it)
            ds = {}
            for _ in range(k):
                s = next(it)
                ds[s] = next(it)
            subs.append((nxt, ds))
        k = next(it)
        leaf = None
        if k >= 0:
            leaf = {}
            for _ in range(k):
                u = next(it)
                leaf[u] = next(it)
        return cls(v, subs, leaf)

    def bits(self, codec):
        return codec.bits(self.words())

    def entries(self):
        return sum(len(ds) for _, ds in self.sublabels) + len(self.leaf or ())


def decode(a, b):
    """Distance from two labels: minimum over shared separators on the
    common prefix, then the leaf list if both walks end in one leaf."""
    if a.vertex == b.vertex:
        return 0
    best = INF
    for (na, da), (nb, db) in zip(a.sublabels, b.sublabels):
        if len(db) < len(da):
            da, db = db, da
        for s, d in da.items():
            e = db.get(s)
            if e is not None and d + e < best:
                best = d + e
        if na != nb or na < 0:
            return best
    if len(a.sublabels) == len(b.sublabels) and a.leaf is not None and b.leaf is not None:
        x = a.leaf.get(b.vertex)
        if x is not None and x < best:
            best = x
    return best


# --- helpers -------------------------------------------------------------------


def _log2n(n):
    return max(1.0, math.log2(max(n, 2)))


def _bag_links(g, bags, extra=None):
    """v -> [(u, bag id)] over the owned edges of each bag (plus extra edges)."""
    links = {}
    for bag in bags:
        seen = set()
        eids = list(bag.edges()) + list((extra or {}).get(bag.id, ()))
        for e in eids:
            u, v, _ = g.edges[e]
            key = (min(u, v), max(u, v))
            if u == v or key in seen:
                continue
            seen.add(key)
            links.setdefault(u, []).append((v, bag.id))
            links.setdefault(v, []).append((u, bag.id))
    return {v: sorted(lst) for v, lst in links.items()} | {v: [] for v in range(g.n) if v not in links}


def _leaders(bags):
    return {b.id: min(b.vertices) for b in bags}


def _child_index(bdd, bag):
    """vertex -> child bag ids containing it."""
    out = {}
    for c in bag.children:
        for v in bdd.bags[c].vertices:
            out.setdefault(v, []).append(c)
    return out


def _charge_bdd(net, bdd, tag):
    D = max(1, net.hop_radius)
    L = _log2n(net.n)
    levels = bdd.depth() + 1
    if bdd.mode == "bfs":
        per = math.ceil(D * L)
        cite = "cycle separator and part identification per decomposition level, O~(D) rounds"
        formula = "ceil(D*log2 n) per level"
    else:
        per = math.ceil(D * D * L)
        cite = "decomposition of a shortest-path tree, separators over shortcuts, O~(D^2) rounds per level"
        formula = "ceil(D^2*log2 n) per level"
    net.ledger.charge(f"{tag}:bdd", per * levels, cite, formula)


def _keep(key, old, new):
    return old


def _max_merge(key, old, new):
    return old if _frac(old) >= _frac(new) else new


def _frac(v):
    return Fraction(v[0], v[1]) if len(v) == 2 else Fraction(v[0])


def _fpair(x):
    x = Fraction(x)
    return (x.numerator, x.denominator)


def _dijkstra(adj, s):
    dist = {s: 0}
    heap = [(0, s)]
    while heap:
        d, x = heapq.heappop(heap)
        if d > dist[x]:
            continue
        for y, w in adj.get(x, ()):
            nd = d + w
            if nd < dist.get(y, INF):
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


# --- unweighted labels ---------------------------------------------------------


def unweighted_labels(net, bdd):
    """Labels from hop-BFS trees inside each bag, one decomposition level at a
    time.  Active (not yet separator) vertices of a bag get a sub-label with
    their distances to the bag separator; leaf bags run BFS from every
    vertex."""
    if bdd.mode != "bfs":
        raise InvalidParams("unweighted labels need a decomposition over a BFS tree")
    g = net.g
    _charge_bdd(net, bdd, "labels")
    labels = [DistanceLabel(v) for v in range(g.n)]
    for depth, bags in sorted(bdd.by_depth().items()):
        links = _bag_links(g, bags)
        sources = {b.id: (sorted(b.vertices) if b.is_leaf else sorted(b.separator)) for b in bags}
        dist = multi_bfs(net, links, sources, name=f"labels:bfs:{depth}")
        for b in bags:
            active = sorted(set(b.vertices) - b.marked)
            if b.is_leaf:
                for v in active:
                    labels[v].leaf = dict(dist.get((b.id, v), {}))
                continue
            kids = _child_index(bdd, b)
            sep = set(b.separator)
            for v in active:
                nxt = -1 if v in sep else kids.get(v, [-1])[0]
                labels[v].sublabels.append((nxt, dict(dist.get((b.id, v), {}))))
    return labels


def label_bound_constant(labels, net, weighted=False):
    """max bits / (D log^3 n) for unweighted labels, / (D log n log W) otherwise."""
    D = max(1, net.hop_radius)
    L = _log2n(net.n)
    if weighted:
        W = max((w for _, _, w in net.g.edges), default=1)
        denom = D * L * max(1.0, math.log2(W + 1))
    else:
        denom = D * L ** 3
    return max(lab.bits(net.codec) for lab in labels) / denom


# --- unweighted diameter -------------------------------------------------------


@dataclass
class DiameterRun:
    value: object
    ledger: object
    stats: dict


def _comp_ids(bdd, bag):
    """Component id per active vertex: child index, or a private id for
    separator vertices.  Returns (ids, number of bits)."""
    kids = _child_index(bdd, bag)
    pos = {c: i for i, c in enumerate(bag.children)}
    sep = sorted(bag.separator)
    sep_rank = {s: i for i, s in enumerate(sep)}
    k = len(bag.children)
    ids = {}
    for v in set(bag.vertices) - bag.marked:
        ids[v] = k + sep_rank[v] if v in sep_rank else pos[kids[v][0]]
    total = k + len(sep)
    return ids, max(1, (total - 1).bit_length())


def _family_mask(cid, B):
    m = 0
    for b in range(B):
        m |= 1 << (2 * b + ((cid >> b) & 1))
    return m


def _cross_max(reps, masks, B, pair_value):
    """max over families b of pairs (x in bit-b zero side, y in one side)."""
    best = None
    cache = {}
    for b in range(B):
        zero = [h for h in reps if masks[h] >> (2 * b) & 1]
        one = [h for h in reps if masks[h] >> (2 * b + 1) & 1]
        for x in zero:
            for y in one:
                key = (x, y) if x <= y else (y, x)
                val = cache.get(key)
                if val is None:
                    val = cache[key] = pair_value(reps[x], reps[y])
                if best is None or val > best:
                    best = val
    return best


def _min_plus(a, b):
    return min(x + y for x, y in zip(a, b))


def unweighted_diameter(net, bdd, labels, seed=0, max_attempts=8, hash_prime=None):
    """Exact diameter bottom-up over the decomposition.

    A bag keeps d(X), the largest G-distance between two of its active
    vertices.  Pairs split by the bag separator go through the boundary set
    (separator plus the bag's inactive vertices); their G-distance tuples to
    that set are hashed, the distinct (hash, family) pairs are gathered with
    duplicate suppression, and the leader evaluates one tuple per hash.
    """
    g = net.g
    stats = {"levels": [], "distinct": {}, "restarts": 0}
    if g.n == 1:
        return DiameterRun(0, net.ledger, stats)
    known = {}  # (bag id, v) -> d(bag)
    levels = bdd.by_depth()
    for depth in sorted(levels, reverse=True):
        bags = levels[depth]
        trees = build_trees(net, _bag_links(g, bags), _leaders(bags), name=f"diam:trees:{depth}")
        items = {}
        for b in bags:
            active = set(b.vertices) - b.marked
            if b.is_leaf:
                for v in active:
                    items[(b.id, v)] = {(1, v): tuple(labels[v].words())}
                continue
            for v in b.vertices:
                kv = [known[(c, v)] for c in b.children if (c, v) in known]
                d = {}
                if kv:
                    d[(0, 0)] = (max(kv),)
                items[(b.id, v)] = d
            for x in sorted(set(b.separator) | b.marked):
                items[(b.id, x)][(1, x)] = tuple(labels[x].words())
        got = converge(net, trees, items, _max_merge, 2, name=f"diam:collect:{depth}")
        result = {}
        inner = []
        for b in bags:
            acc = got[b.id]
            if b.is_leaf:
                labs = [DistanceLabel.from_words(w) for (k, _), w in sorted(acc.items()) if k == 1]
                best = 0
                for i in range(len(labs)):
                    for j in range(i + 1, len(labs)):
                        best = max(best, decode(labs[i], labs[j]))
                result[b.id] = best
            else:
                inner.append(b)
                result[b.id] = acc.get((0, 0), (0,))[0]
        if inner:
            cross = _unweighted_cross(net, bdd, labels, inner, trees, got, seed, depth,
                                      max_attempts, hash_prime, stats)
            for bid, val in cross.items():
                result[bid] = max(result[bid], val)
        out = broadcast(net, trees, {bid: [(val,)] for bid, val in result.items()},
                        name=f"diam:announce:{depth}")
        for (bid, v), recs in out.items():
            known[(bid, v)] = recs[0][0]
        stats["levels"].append({"depth": depth, "bags": len(bags)})
    return DiameterRun(known[(0, min(bdd.root.vertices))], net.ledger, stats)


def _unweighted_cross(net, bdd, labels, bags, trees, got, seed, depth, max_attempts,
                      hash_prime, stats):
    g = net.g
    sub = {b.id: trees[b.id] for b in bags}
    boundary = {b.id: sorted(set(b.separator) | b.marked) for b in bags}
    # every node of the bag learns the boundary labels
    payload = {b.id: [(x,) for x in boundary[b.id]] for b in bags}
    for b in bags:
        payload[b.id] += [got[b.id][(1, x)] for x in boundary[b.id]]
    recv = broadcast(net, sub, payload, name=f"diam:boundary:{depth}")
    tuples = {}
    comp = {}
    for b in bags:
        ids, B = _comp_ids(bdd, b)
        comp[b.id] = (ids, B)
        nb = len(boundary[b.id])
        for v in ids:
            recs = recv[(b.id, v)]
            blabs = [DistanceLabel.from_words(w) for w in recs[nb:]]
            tuples[(b.id, v)] = tuple(decode(labels[v], bl) for bl in blabs)
    result = {}
    pending = list(bags)
    attempt = 0
    while pending:
        if attempt >= max_attempts:
            raise HashCollisionDetected(f"hash collisions persisted after {attempt} attempts")
        hps = {b.id: hash_params(g.n, max(1, len(boundary[b.id])),
                                 seed=hash((seed, b.id, attempt)) & 0x7FFFFFFF, p=hash_prime)
               for b in pending}
        items = {}
        for b in pending:
            ids, B = comp[b.id]
            hp = hps[b.id]
            for v in ids:
                h = tuple_hash(tuples[(b.id, v)], hp)
                items[(b.id, v)] = {(h,): (_family_mask(ids[v], B), v, v)}
        merge = lambda k, a, c: (a[0] | c[0], min(a[1], c[1]), max(a[2], c[2]))
        sub_p = {b.id: sub[b.id] for b in pending}
        groups = converge(net, sub_p, items, merge, 1, name=f"diam:gather:{depth}:{attempt}")
        asks = {b.id: sorted({x for (_, lo, hi) in groups[b.id].values() for x in (lo, hi)})
                for b in pending}
        recv = broadcast(net, sub_p, {bid: [(x,) for x in ask] for bid, ask in asks.items()},
                         name=f"diam:request:{depth}:{attempt}")
        items = {}
        for b in pending:
            for v in comp[b.id][0]:
                if (v,) in set(recv[(b.id, v)]):
                    items[(b.id, v)] = {(v,): tuples[(b.id, v)]}
        full = converge(net, sub_p, items, _keep, 1, name=f"diam:tuples:{depth}:{attempt}")
        retry = []
        for b in pending:
            grp = groups[b.id]
            tup = {k[0]: t for k, t in full[b.id].items()}
            if any(tup[lo] != tup[hi] for (_, lo, hi) in grp.values()):
                net.ledger.restart(f"diam:{depth}:bag{b.id}", "tuple hash collision")
                stats["restarts"] += 1
                retry.append(b)
                continue
            reps = {h[0]: tup[lo] for h, (_, lo, _) in grp.items()}
            masks = {h[0]: m for h, (m, _, _) in grp.items()}
            val = _cross_max(reps, masks, comp[b.id][1], _min_plus)
            result[b.id] = 0 if val is None else val
            stats["distinct"][b.id] = len(grp)
        pending = retry
        attempt += 1
    return result


# --- weighted labels and SSSP ----------------------------------------------------


def _check_int_weights(g):
    for _, _, w in g.edges:
        if not isinstance(w, int) or w <= 0:
            raise InvalidParams("the simulator needs positive integer weights")


def weighted_labels(net, bdd, stats=None):
    """Bottom-up labels: leaf bags gather their edges and run Dijkstra at
    every node; an inner bag gathers the child labels of its separator
    vertices, and each node runs Dijkstra on the clique over itself and the
    separator with child-label distances as weights."""
    g = net.g
    _check_int_weights(g)
    _charge_bdd(net, bdd, "wlabels")
    stats = {} if stats is None else stats
    stats.setdefault("max_child_labels", 0)
    lab = {}  # (bag id, v) -> label inside that bag
    levels = bdd.by_depth()
    for depth in sorted(levels, reverse=True):
        bags = levels[depth]
        trees = build_trees(net, _bag_links(g, bags), _leaders(bags), name=f"wlabels:trees:{depth}")
        items = {}
        kids = {}
        for b in bags:
            if b.is_leaf:
                for e in b.edges():
                    u, v, w = g.edges[e]
                    items.setdefault((b.id, u), {})[(e, 0)] = (u, v, w)
                continue
            kids[b.id] = _child_index(bdd, b)
            for s in b.separator:
                cs = kids[b.id][s]
                stats["max_child_labels"] = max(stats["max_child_labels"], len(cs))
                for c in cs:
                    items.setdefault((b.id, s), {})[(c, s)] = tuple(lab[(c, s)].words())
        got = converge(net, trees, items, _keep, 2, name=f"wlabels:gather:{depth}")
        payload = {b.id: [k + v for k, v in sorted(got[b.id].items())] for b in bags}
        recv = broadcast(net, trees, payload, name=f"wlabels:spread:{depth}")
        for b in bags:
            # every bag node holds the same records; evaluate them once per bag
            recs = recv[(b.id, min(b.vertices))]
            if b.is_leaf:
                adj = {}
                for rec in recs:
                    u, v, w = rec[2:]
                    adj.setdefault(u, []).append((v, w))
                    adj.setdefault(v, []).append((u, w))
                for v in b.vertices:
                    lab[(b.id, v)] = DistanceLabel(v, [], _dijkstra(adj, v))
                continue
            sl = {(rec[0], rec[1]): DistanceLabel.from_words(rec[2:]) for rec in recs}
            kid = kids[b.id]
            sep = sorted(b.separator)
            base = {}
            for i, x in enumerate(sep):
                for y in sep[i + 1:]:
                    w = min((decode(sl[(c, x)], sl[(c, y)]) for c in kid[x] if (c, y) in sl), default=INF)
                    if w < INF:
                        base.setdefault(x, []).append((y, w))
                        base.setdefault(y, []).append((x, w))
            sset = set(sep)
            for v in b.vertices:
                adj = dict(base)
                if v not in sset:
                    row = []
                    for c in kid[v]:
                        for s in sep:
                            if (c, s) in sl:
                                row.append((s, decode(lab[(c, v)], sl[(c, s)])))
                    adj[v] = row
                    for s, w in row:
                        adj[s] = adj.get(s, []) + [(v, w)]
                dist = _dijkstra(adj, v)
                dists = {s: dist[s] for s in sep if s in dist}
                if v in sset:
                    lab[(b.id, v)] = DistanceLabel(v, [(-1, dists)])
                else:
                    c = kid[v][0]
                    inner = lab[(c, v)]
                    lab[(b.id, v)] = DistanceLabel(v, [(c, dists)] + inner.sublabels, inner.leaf)
        for b in bags:
            for c in b.children:
                for v in bdd.bags[c].vertices:
                    lab.pop((c, v), None)
    return [lab[(0, v)] for v in range(g.n)]


@dataclass
class SsspResult:
    parent: list
    dist: list
    rounds: dict


def sssp(net, labels, source):
    """The source label travels down a BFS tree; each node decodes its
    distance, swaps it with its neighbours and picks the neighbour
    minimizing d(x) + w(x, v) as parent (ties to the smaller id)."""
    g = net.g
    before = len(net.ledger.phases)
    links = {v: [(u, 0) for u in net.nbrs[v]] for v in range(g.n)}
    trees = build_trees(net, links, {0: source}, name="sssp:tree")
    got = broadcast(net, trees, {0: [tuple(labels[source].words())]}, name="sssp:label")
    src = {v: DistanceLabel.from_words(got[(0, v)][0]) for v in range(g.n) if (0, v) in got}
    dist = [decode(labels[v], src[v]) if v in src else INF for v in range(g.n)]
    nb = exchange(net, [(d if d < INF else -1,) for d in dist], name="sssp:exchange")
    parent = [-1] * g.n
    for v in range(g.n):
        if v == source or dist[v] == INF:
            continue
        cands = [(nb[v][u][0] + net.weight(u, v), u) for u in nb[v] if nb[v][u][0] >= 0]
        d, u = min(cands)
        parent[v] = u
    rounds = {p["name"]: p["rounds"] for p in net.ledger.phases[before:]}
    return SsspResult(parent, dist, rounds)


# --- shortcuts and the split graph ------------------------------------------------


@dataclass
class Shortcuts:
    parts: list
    edges: list  # per part, edge ids of the shortcut subgraph
    dilation: int
    congestion: int
    charged: int
    tree: object = None


def _part_connected(g, part):
    ps = set(part)
    start = part[0]
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y, _ in g.adj[x]:
            if y in ps and y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(ps)


def _steiner(t, part, ch_count=None):
    """Edge ids of the smallest subtree of t spanning part."""
    inside = set()
    for v in part:
        x = v
        while x >= 0 and x not in inside:
            inside.add(x)
            x = t.parent[x]
    kids = {}
    for x in inside:
        p = t.parent[x]
        if p >= 0 and p in inside:
            kids.setdefault(p, []).append(x)
    top = t.root
    ps = set(part)
    while top not in ps and len(kids.get(top, ())) == 1:
        inside.discard(top)
        top = kids[top][0]
    return sorted(t.parent_edge[x] for x in inside if x != top)


def _hop_diameter(n, edges):
    adj = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    best = 0
    for s in adj:
        dist = {s: 0}
        frontier = [s]
        while frontier:
            nxt = []
            for x in frontier:
                for y in adj[x]:
                    if y not in dist:
                        dist[y] = dist[x] + 1
                        nxt.append(y)
            frontier = nxt
        best = max(best, max(dist.values()))
    return best


def shortcut_oracle(net, parts, root=0, measure=True):
    """Shortcut subgraphs for connected parts, taken as Steiner subtrees of
    one global BFS tree.  Construction is charged as a black box; dilation
    (hop diameter of part plus shortcut) and congestion are measured."""
    g = net.g
    parts = [sorted(p) for p in parts]
    for i, p in enumerate(parts):
        if not p or not _part_connected(g, p):
            raise DisconnectedPart(f"part {i} does not induce a connected subgraph")
    t = bfs_tree(g, root)
    D = max(1, max(t.depth(), default=0))
    edges = [_steiner(t, p) for p in parts]
    load = {}
    for es in edges:
        for e in es:
            load[e] = load.get(e, 0) + 1
    dil = 0
    if measure:
        for p, es in zip(parts, edges):
            ps = set(p)
            pe = [(u, v) for u, v, _ in g.edges if u in ps and v in ps and u != v]
            pe += [g.edges[e][:2] for e in es]
            if len(p) > 1:
                dil = max(dil, _hop_diameter(g.n, pe))
    L = _log2n(g.n)
    charged = math.ceil(D * max(1.0, math.log2(D))) * math.ceil(L)
    net.ledger.charge("shortcuts", charged,
                      "low-congestion shortcuts for planar graphs: congestion and dilation O(D log D), "
                      "built in O~(D) rounds", "ceil(D*log2 D)*ceil(log2 n)")
    return Shortcuts(parts, edges, dil, max(load.values(), default=0), charged, t)


@dataclass
class SplitGraph:
    graph: PlanarGraph
    origin: list  # split vertex -> original vertex
    copy: dict  # (v, bag id) -> split vertex
    links: list  # split edge ids joining a vertex to its copies
    contiguous: bool  # copies nest around every vertex (always, for a valid level)
    instances: dict = field(default_factory=dict)  # (edge, bag id) -> split edge id


def split_graph(g, bags):
    """Duplicate every vertex shared by several bags of one level.

    Faces belong to at most one bag.  An edge is drawn once per bag owning a
    face beside it (twice on a boundary between two bags), each time between
    that bag's copies of its ends; a shared vertex keeps unit links to its
    copies, nested the way the bag regions meet around it.  The first
    instance of an edge keeps the original id.
    """
    member = {}
    for b in bags:
        for v in b.vertices:
            member.setdefault(v, []).append(b.id)
    owner = {}
    for b in bags:
        for d in b.darts:
            owner[d] = b.id
    copy = {}
    origin = list(range(g.n))
    for v in sorted(v for v, bs in member.items() if len(bs) > 1):
        for bid in member[v]:
            copy[(v, bid)] = len(origin)
            origin.append(v)

    def labels(e):
        # bags beside edge e, in the order they appear around its tail
        u = g.edges[e][0]
        seq = [owner.get(g.out_dart(u, e)), owner.get(g.out_dart(u, e) ^ 1)]
        out = [x for i, x in enumerate(seq) if x is not None and x not in seq[:i]]
        return out or [None]

    def end(x, bid):
        return copy.get((x, bid), x)

    edges = list(g.edges)
    inst = {}
    side = {}  # edge id -> bag labels in tail order
    for e, (u, v, w) in enumerate(g.edges):
        labs = labels(e)
        side[e] = labs
        for i, bid in enumerate(labs):
            eid = e if i == 0 else len(edges)
            if i:
                edges.append(None)
            edges[eid] = (end(u, bid), end(v, bid), w)
            inst[(e, bid)] = eid
    rot = [[] for _ in origin]
    links = []
    contiguous = True

    def link(a, b):
        links.append(len(edges))
        edges.append((a, b, 1))
        return links[-1]

    for v in range(g.n):
        seq = []
        for e in g.rotation[v]:
            labs = side[e] if g.edges[e][0] == v else side[e][::-1]
            seq += [(inst[(e, bid)], bid) for bid in labs]
        if not any((v, b) in copy for b in member.get(v, ())):
            rot[v] = [eid for eid, _ in seq]
            continue
        # maximal arcs owned by one copy (v itself for edges no bag owns)
        arcs = []
        for eid, bid in seq:
            c = end(v, bid)
            if arcs and arcs[-1][0] == c:
                arcs[-1][1].append(eid)
            else:
                arcs.append((c, [eid]))
        if len(arcs) > 1 and arcs[0][0] == arcs[-1][0]:
            c, tail = arcs.pop()
            arcs[0] = (c, tail + arcs[0][1])
        mark = len(edges)
        for k in range(len(arcs)):
            moves = _nest(v, arcs[k:] + arcs[:k], rot, link)
            if moves is not None:
                for eid, node in moves:
                    x, y, w = edges[eid]
                    edges[eid] = (node, y, w) if x == v else (x, node, w)
                break
            del edges[mark:]
            while links and links[-1] >= mark:
                links.pop()
        else:
            contiguous = False
            _flat(v, arcs, rot, link)
    for (v, bid), c in sorted(copy.items()):
        if not rot[c]:
            le = link(v, c)
            rot[v].append(le)
            rot[c].append(le)
    h = PlanarGraph(len(origin), edges, rot, g.is_weighted)
    return SplitGraph(h, origin, copy, links, contiguous, inst)


def _nest(v, arcs, rot, link):
    """Hang every copy off the copy whose arcs enclose it (or off v).

    Bag regions are disjoint and connected, so the arc labels around v never
    interleave; a copy whose arcs are not consecutive encloses the copies
    between them.  Each copy takes a contiguous block of its parent's
    rotation, which keeps the embedding planar.  Arcs no bag owns attach to
    whichever node encloses them.  Returns those (edge, node) moves, or None
    if the labels interleave from this starting arc.
    """
    last = {}
    for i, (c, _) in enumerate(arcs):
        last[c] = i
    placed = set()
    moves = []

    def place(node, lo, hi):
        out = []
        i = lo
        while i < hi:
            c, es = arcs[i]
            if c == node or c == v:
                out.extend(es)
                if node != v:
                    moves.extend((e, node) for e in es if c == v)
                i += 1
                continue
            if c in placed:
                return None
            j = last[c]
            if j >= hi:
                return None
            placed.add(c)
            le = link(node, c)
            out.append(le)
            inner = []
            k = i
            while k <= j:
                if arcs[k][0] == c:
                    inner.extend(arcs[k][1])
                    k += 1
                    continue
                m = k
                while arcs[m][0] != c:
                    m += 1
                sub = place(c, k, m)
                if sub is None:
                    return None
                inner.extend(sub)
                k = m
            rot[c] = inner + [le]
            i = j + 1
        return out

    got = place(v, 0, len(arcs))
    if got is None:
        return None
    rot[v] = got
    return moves


def _flat(v, arcs, rot, link):
    """Fallback: every copy hangs off v at its first arc."""
    rot[v] = []
    done = set()
    for c, es in arcs:
        if c == v:
            rot[v].extend(es)
        elif c not in done:
            done.add(c)
            le = link(v, c)
            rot[v].append(le)
            rot[c] = [e for c2, es2 in arcs if c2 == c for e in es2] + [le]


def split_frame_load(split, transcript):
    """Largest number of frames one original directed link carries in one
    round when a run on the split graph is mapped back (copy links are free)."""
    load = {}
    for line in transcript:
        parts = line.split("|")
        r = parts[1]
        a, b = (int(x) for x in parts[2].split(">"))
        oa, ob = split.origin[a], split.origin[b]
        if oa == ob:
            continue
        key = (r, oa, ob)
        load[key] = load.get(key, 0) + 1
    return max(load.values(), default=0)


# --- portals ---------------------------------------------------------------------


@dataclass
class PortalSet:
    portals: list
    spacing: Fraction
    segments: list  # vertex lists, top vertex first
    snap: dict  # separator vertex -> portal above it on its segment
    per_segment: list  # (length, portal count)

    def __len__(self):
        return len(self.portals)


def portal_set(g, t, dist, separator, spacing):
    """Portals on the separator pieces of a shortest-path tree.

    Segments are the components of the separator under tree edges.  On each
    segment the top vertex, the segment's leaves, and every vertex whose
    distance from the top first reaches a new multiple of ``spacing`` are
    portals; every separator vertex snaps to the nearest portal above it.
    """
    S = set(separator)
    spacing = Fraction(spacing)
    kids = {}
    tops = []
    for v in sorted(S):
        p = t.parent[v]
        if p >= 0 and p in S:
            kids.setdefault(p, []).append(v)
        else:
            tops.append(v)
    portals = set()
    snap = {}
    segments = []
    per = []
    for top in tops:
        seg = [top]
        length = 0
        count = 0
        for x in seg:
            cum = dist[x] - dist[top]
            p = t.parent[x]
            is_portal = x == top or x not in kids
            if not is_portal and spacing > 0:
                is_portal = math.floor(cum / spacing) > math.floor((dist[p] - dist[top]) / spacing)
            if x != top:
                length += dist[x] - dist[p]
            if is_portal:
                portals.add(x)
                count += 1
                snap[x] = x
            else:
                snap[x] = snap[p]
            seg.extend(kids.get(x, ()))
        segments.append(seg)
        per.append((length, count))
    return PortalSet(sorted(portals), spacing, segments, snap, per)


# --- (1+eps) weighted diameter -------------------------------------------------


@dataclass
class ApproxRun:
    estimate: Fraction
    ledger: object
    stats: dict


def approx_weighted_diameter(net, eps, seed=0, labels=None, label_bdd=None, source=0,
                             max_attempts=None, budget=None, hash_prime=None):
    """(1+eps) estimate of the weighted diameter, never below it.

    D~ is twice the eccentricity of ``source``.  Over a decomposition of the
    SSSP tree, each bag estimates the largest distance between two of its
    active vertices: leaf bags exactly from gathered labels, inner bags from
    core-sets of G-distance tuples to portals near the bag boundary, bucketed
    in a randomly shifted grid of side delta/2 with delta = eps*D~/3.
    """
    eps = Fraction(eps)
    if not 0 < eps <= 1:
        raise InvalidParams("eps must lie in (0, 1]")
    g = net.g
    _check_int_weights(g)
    n = g.n
    L = _log2n(n)
    attempts = math.ceil(3 * L) if max_attempts is None else max_attempts
    stats = {"restarts": 0, "levels": [], "portals": [], "cells": {}}
    if n == 1:
        return ApproxRun(Fraction(0), net.ledger, stats)
    if labels is None:
        label_bdd = label_bdd or build_bdd(g, mode="bfs")
        labels = weighted_labels(net, label_bdd)
    sp = sssp(net, labels, source)
    glinks = {v: [(u, 0) for u in net.nbrs[v]] for v in range(n)}
    gtree = build_trees(net, glinks, {0: source}, name="approx:tree")
    ecc = converge(net, gtree, {(0, v): {(0,): (sp.dist[v],)} for v in range(n)},
                   _max_merge, 1, name="approx:ecc")[0][(0,)][0]
    Dt = 2 * ecc
    delta = eps * Dt / 3
    eps_p = eps / Fraction(8 * L * L).limit_denominator(10**6)
    spacing = eps_p * Dt
    cell = delta / 2
    stats.update({"D_tilde": Dt, "delta": delta, "eps_prime": eps_p, "spacing": spacing})
    t = tree_from_parents(g, source, sp.parent)
    bdd = build_bdd(g, t=t, mode="sssp", eps=eps)
    _charge_bdd(net, bdd, "approx")
    stats["bdd_depth"] = bdd.depth()
    levels = bdd.by_depth()
    D = max(1, net.hop_radius)

    # structure per level: shortcuts, communication trees, portals
    comm = {}
    portals = {}
    snap_of = {}
    for depth in sorted(levels):
        bags = levels[depth]
        sc = shortcut_oracle(net, [b.vertices for b in bags], root=source, measure=False)
        extra = {b.id: es for b, es in zip(bags, sc.edges)}
        comm[depth] = build_trees(net, _bag_links(g, bags, extra), _leaders(bags),
                                  name=f"approx:trees:{depth}")
        for b in bags:
            if b.is_leaf:
                continue
            ps = portal_set(g, t, sp.dist, b.separator, spacing)
            portals[b.id] = ps
            stats["portals"].append({"bag": b.id, "count": len(ps), "segments": ps.per_segment})
            for v, q in ps.snap.items():
                snap_of.setdefault(v, q)
        net.ledger.charge(f"approx:portals:{depth}", math.ceil(D * L),
                          "segment identification and prefix sums along separator paths, O~(D)",
                          "ceil(D*log2 n)")

    # top-down: portal labels reach every node of the bag
    portal_dist = {v: {} for v in range(n)}
    for depth in sorted(levels):
        bags = [b for b in levels[depth] if not b.is_leaf]
        if not bags:
            continue
        trees = {b.id: comm[depth][b.id] for b in bags}
        items = {}
        for b in bags:
            for q in portals[b.id].portals:
                items.setdefault((b.id, q), {})[(q,)] = tuple(labels[q].words())
        got = converge(net, trees, items, _keep, 1, name=f"approx:portal-up:{depth}")
        recv = broadcast(net, trees, {bid: [v for _, v in sorted(acc.items())] for bid, acc in got.items()},
                         name=f"approx:portal-down:{depth}")
        for b in bags:
            for v in b.vertices:
                for w in recv[(b.id, v)]:
                    ql = DistanceLabel.from_words(w)
                    portal_dist[v][ql.vertex] = decode(labels[v], ql)

    known = {}
    for depth in sorted(levels, reverse=True):
        bags = levels[depth]
        trees = comm[depth]
        items = {}
        for b in bags:
            active = set(b.vertices) - b.marked
            if b.is_leaf:
                for v in active:
                    items[(b.id, v)] = {(1, v): tuple(labels[v].words())}
                continue
            for v in b.vertices:
                kv = [known[(c, v)] for c in b.children if (c, v) in known]
                items[(b.id, v)] = {(0, 0): _fpair(max(kv))} if kv else {}
        got = converge(net, trees, items, _max_merge, 2, name=f"approx:collect:{depth}")
        result = {}
        inner = []
        for b in bags:
            acc = got[b.id]
            if b.is_leaf:
                labs = [DistanceLabel.from_words(w) for (k, _), w in sorted(acc.items()) if k == 1]
                best = 0
                for i in range(len(labs)):
                    for j in range(i + 1, len(labs)):
                        best = max(best, decode(labs[i], labs[j]))
                result[b.id] = Fraction(best)
            else:
                inner.append(b)
                result[b.id] = _frac(acc[(0, 0)]) if (0, 0) in acc else Fraction(0)
        if inner:
            cross = _approx_cross(net, bdd, inner, trees, portal_dist, snap_of, portals, cell,
                                  seed, depth, attempts, budget, hash_prime, stats)
            for bid, val in cross.items():
                result[bid] = max(result[bid], val)
        out = broadcast(net, trees, {bid: [_fpair(val)] for bid, val in result.items()},
                        name=f"approx:announce:{depth}")
        for (bid, v), recs in out.items():
            if v in set(bdd.bags[bid].vertices):
                known[(bid, v)] = _frac(recs[0])
        stats["levels"].append({"depth": depth, "bags": len(bags)})
    raw = known[(0, min(bdd.root.vertices))]
    est = min(max(raw, Fraction(ecc)), Fraction(Dt))
    stats["raw"] = raw
    return ApproxRun(est, net.ledger, stats)


def _boundary_portals(bag, portals, snap_of):
    qs = set(portals[bag.id].portals)
    for v in bag.marked:
        qs.add(snap_of[v])
    return sorted(qs)


def _cell_of(tup, shift, cell):
    return tuple(math.floor((x + s) / cell) for x, s in zip(tup, shift))


def _approx_cross(net, bdd, bags, trees, portal_dist, snap_of, portals, cell, seed, depth,
                  attempts, budget, hash_prime, stats):
    g = net.g
    K = 1 << 16
    Q = {b.id: _boundary_portals(b, portals, snap_of) for b in bags}
    comp = {b.id: _comp_ids(bdd, b) for b in bags}
    tuples = {}
    for b in bags:
        for v in comp[b.id][0]:
            tuples[(b.id, v)] = tuple(portal_dist[v][q] for q in Q[b.id])
    result = {}
    pending = list(bags)
    attempt = 0
    while pending:
        if attempt >= attempts:
            raise RetriesExhausted(f"core-set hashing failed {attempt} times at depth {depth}")
        sub = {b.id: trees[b.id] for b in pending}
        payload = {}
        shifts = {}
        hps = {}
        for b in pending:
            rng = random.Random(f"{seed}:{b.id}:{attempt}")
            ks = [rng.randrange(K) for _ in Q[b.id]]
            shifts[b.id] = [Fraction(k, K) * cell for k in ks]
            hps[b.id] = hash_params(g.n, max(1, len(Q[b.id])), seed=rng.randrange(2**31), p=hash_prime)
            payload[b.id] = [(0, q, k) for q, k in zip(Q[b.id], ks)] + [(1, hps[b.id].b)]
        recv = broadcast(net, sub, payload, name=f"approx:grid:{depth}:{attempt}")
        items = {}
        for b in pending:
            ids, B = comp[b.id]
            for v in ids:
                assert len(recv[(b.id, v)]) == len(payload[b.id])
                c = _cell_of(tuples[(b.id, v)], shifts[b.id], cell)
                h = tuple_hash(c, hps[b.id])
                fam = [g.n] * (2 * B)
                for bit in range(B):
                    fam[2 * bit + ((ids[v] >> bit) & 1)] = v
                items[(b.id, v)] = {(h,): tuple(fam) + (v,)}
        merge = lambda k, a, c: tuple(min(x, y) for x, y in zip(a[:-1], c[:-1])) + (max(a[-1], c[-1]),)
        groups = converge(net, sub, items, merge, 1, name=f"approx:cells:{depth}:{attempt}")
        retry = []
        over = set()
        for b in pending:
            count = len(groups[b.id])
            stats["cells"].setdefault(b.id, []).append(count)
            if budget is not None and count > budget:
                over.add(b.id)
        asks = {}
        for b in pending:
            if b.id in over:
                continue
            ask = set()
            for val in groups[b.id].values():
                ask.update(x for x in val if x < g.n)
            asks[b.id] = sorted(ask)
        sub2 = {bid: sub[bid] for bid in asks}
        recv = broadcast(net, sub2, {bid: [(x,) for x in ask] for bid, ask in asks.items()},
                         name=f"approx:request:{depth}:{attempt}")
        items = {}
        for bid in asks:
            for v in comp[bid][0]:
                if (v,) in set(recv[(bid, v)]):
                    items[(bid, v)] = {(v,): tuples[(bid, v)]}
        full = converge(net, sub2, items, _keep, 1, name=f"approx:reps:{depth}:{attempt}")
        for b in pending:
            if b.id in over:
                net.ledger.restart(f"approx:{depth}:bag{b.id}", "cell count above budget")
                stats["restarts"] += 1
                retry.append(b)
                continue
            tup = {k[0]: t for k, t in full[b.id].items()}
            ids, B = comp[b.id]
            bad = False
            for val in groups[b.id].values():
                cells = {_cell_of(tup[x], shifts[b.id], cell) for x in val if x < g.n}
                if len(cells) > 1:
                    bad = True
                    break
            if bad:
                net.ledger.restart(f"approx:{depth}:bag{b.id}", "cell hash collision")
                stats["restarts"] += 1
                retry.append(b)
                continue
            best = None
            for bit in range(B):
                zero = sorted({val[2 * bit] for val in groups[b.id].values() if val[2 * bit] < g.n})
                one = sorted({val[2 * bit + 1] for val in groups[b.id].values() if val[2 * bit + 1] < g.n})
                for x in zero:
                    for y in one:
                        f = _min_plus(tup[x], tup[y]) if tup[x] else INF
                        if f < INF and (best is None or f > best):
                            best = f
            result[b.id] = Fraction(0) if best is None else best + 2 * cell
        pending = retry
        attempt += 1
    return result

"""Bounded diameter decomposition: a recursive bag tree cut by cycle separators.

Every bag owns a set of edge sides (darts).  The root owns all of them; a
split hands each owned side to the inside or the outside of the chosen
cycle, and each side's owned edges fall into connected children.  Because a
side is owned by one bag per depth, every edge lies in at most two bag
subgraphs of a depth, and the ownership sets double as the region
certificate.  The bag subgraph ``G[X]`` is (bag vertices, owned edges).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InvalidParams, TreeNotSpanning
from .planar import INF, PlanarGraph, SpanningTree, bfs_tree, components, sssp_tree
from .separator import _Evaluator, _tree_path, biconnect_augment, fan_triangulate, is_biconnected

CHILD_RATIO = Fraction(5, 6)


@dataclass
class Bag:
    id: int
    parent: int
    depth: int
    vertices: list
    darts: frozenset
    marked: frozenset = frozenset()  # separator vertices of ancestors
    separator: list = field(default_factory=list)  # S_X
    children: list = field(default_factory=list)
    cycle: list = field(default_factory=list)
    closing_virtual: bool = False
    inside: frozenset = frozenset()  # strictly inside the cycle
    sides: dict = field(default_factory=dict)  # child id -> '+' | '-'
    tree_extra: list = field(default_factory=list)  # T'_X \ T edge ids
    forced_leaf: bool = False

    @property
    def is_leaf(self):
        return not self.children

    def edges(self):
        return sorted({d >> 1 for d in self.darts})


@dataclass
class BddTree:
    g: PlanarGraph
    base_tree: SpanningTree
    mode: str
    leaf_threshold: float
    D: object
    bags: list

    @property
    def root(self):
        return self.bags[0]

    def depth(self):
        return max(b.depth for b in self.bags)

    def measure(self, bag):
        """Bag size as used for balance: all vertices, or unmarked ones in sssp mode."""
        if self.mode == "sssp":
            return len(set(bag.vertices) - bag.marked)
        return len(bag.vertices)

    def by_depth(self):
        out = {}
        for b in self.bags:
            out.setdefault(b.depth, []).append(b)
        return out

    def bags_of(self, v):
        return [b.id for b in self.bags if v in set(b.vertices)]


def _tree_radius(g, t, mode):
    if mode == "sssp":
        dist = [0] * g.n
        order = [t.root]
        ch = t.children()
        for x in order:
            for y in ch[x]:
                dist[y] = dist[x] + g.edges[t.parent_edge[y]][2]
                order.append(y)
        return max(dist)
    return max(t.depth())


def default_leaf_threshold(g, t, mode="bfs", eps=1):
    logn = max(1.0, math.log2(max(g.n, 2)))
    if mode == "sssp":
        return math.ceil(logn * logn / float(eps))
    return math.ceil(max(1, max(t.depth())) * logn)


class _UF:
    def __init__(self, items):
        self.p = {x: x for x in items}

    def find(self, x):
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a == b:
            return False
        if b < a:
            a, b = b, a
        self.p[b] = a
        return True


def _bag_graph(g, verts, darts):
    """Local graph on the bag vertices with the owned edges, G's rotation order."""
    loc = {v: i for i, v in enumerate(verts)}
    eids = sorted({d >> 1 for d in darts})
    lid = {e: i for i, e in enumerate(eids)}
    edges = [(loc[g.edges[e][0]], loc[g.edges[e][1]], g.edges[e][2]) for e in eids]
    rot = [[lid[e] for e in g.rotation[v] if e in lid] for v in verts]
    return PlanarGraph(len(verts), edges, rot, g.is_weighted), eids, loc


def _connect_tree(g, t, verts, eids, loc, local):
    """T'_X: T's edges inside the bag plus the fewest owned edges joining its pieces."""
    uf = _UF(range(len(verts)))
    adj = [[] for _ in verts]
    tree_e = t.edge_set
    chosen = []
    extra = []
    for i, e in enumerate(eids):
        if e in tree_e:
            u, v = local.edges[i][:2]
            uf.union(u, v)
            chosen.append(i)
    for i, e in enumerate(eids):
        if e not in tree_e:
            u, v = local.edges[i][:2]
            if uf.union(u, v):
                chosen.append(i)
                extra.append(e)
    for i in chosen:
        u, v = local.edges[i][:2]
        adj[u].append((v, i))
        adj[v].append((u, i))
    dep = t.depth()
    root = min(range(len(verts)), key=lambda i: (dep[verts[i]], verts[i]))
    parent = [-1] * len(verts)
    pe = [-1] * len(verts)
    seen = [False] * len(verts)
    seen[root] = True
    order = [root]
    for x in order:
        for y, i in sorted(adj[x]):
            if not seen[y]:
                seen[y] = True
                parent[y] = x
                pe[y] = i
                order.append(y)
    if not all(seen):
        raise TreeNotSpanning("bag subgraph is disconnected")
    return SpanningTree(root, parent, pe), extra


def _children_for(ev, e, local, eids, verts, darts):
    """Split the owned sides by the fundamental cycle of candidate e."""
    c = ev.child_face[e]
    lo, hi = ev.tin[c], ev.tout[c]
    fod = ev.face_of_dart
    side_darts = {"+": [], "-": []}
    for i, ge in enumerate(eids):
        for k in (0, 1):
            gd = 2 * ge + k
            if gd in darts:
                f = fod[2 * i + k]
                side_darts["+" if lo <= ev.tin[f] <= hi else "-"].append((i, gd))
    lid = {ge: i for i, ge in enumerate(eids)}
    out = []
    for side in "+-":
        lst = side_darts[side]
        if not lst:
            continue
        uf = _UF(sorted({x for i, _ in lst for x in local.edges[i][:2]}))
        for i, _ in lst:
            uf.union(*local.edges[i][:2])
        groups = {}
        for i, gd in lst:
            groups.setdefault(uf.find(local.edges[i][0]), []).append(gd)
        for r in sorted(groups):
            ds = frozenset(groups[r])
            vs = sorted({verts[x] for d in ds for x in local.edges[lid[d >> 1]][:2]})
            out.append((side, vs, ds))
    return out


def _edge_key(g, e):
    u, v = g.edges[e][:2]
    return (min(u, v), max(u, v), e)


def _split(g, t, bag, mode, top_k):
    verts = bag.vertices
    local, eids, loc = _bag_graph(g, verts, bag.darts)
    tp, extra = _connect_tree(g, t, verts, eids, loc, local)
    aug = local if is_biconnected(local) else biconnect_augment(local).graph
    h, _ = fan_triangulate(aug, range(len(aug.faces())), tp)
    w = [0 if (mode == "sssp" and v in bag.marked) else 1 for v in verts]
    if sum(w) == 0:
        return None
    ev = _Evaluator(h, tp, w)
    dep = tp.depth()
    cands = []
    for e in ev.nontree:
        cyc, _, ins, out = ev.score(e)
        cheap = max(ins, out) + (len(cyc) if mode == "bfs" else 0)
        cands.append((cheap, len(cyc), _edge_key(h, e), e))
    cands.sort()
    parent_size = len(verts) if mode == "bfs" else sum(w)
    best = None
    for _, clen, key, e in cands[:top_k]:
        kids = _children_for(ev, e, local, eids, verts, bag.darts)
        if len(kids) < 2:
            continue
        seen = {}
        for _, vs, _ in kids:
            for v in vs:
                seen[v] = seen.get(v, 0) + 1
        shared = {v for v, k in seen.items() if k > 1}
        if mode == "bfs":
            sizes = [len(vs) for _, vs, _ in kids]
        else:
            marked = bag.marked | shared
            sizes = [len(set(vs) - marked) for _, vs, _ in kids]
        worst = max(sizes)
        if 6 * worst > 5 * parent_size:
            continue
        rank = (worst, clen, key)
        if best is None or rank < best[0]:
            best = (rank, e, kids, shared)
    if best is None:
        return None
    _, e, kids, shared = best
    cyc, _ = _tree_path(tp, dep, *h.edges[e][:2])
    c = ev.child_face[e]
    lo, hi = ev.tin[c], ev.tout[c]
    on = set(cyc)
    inside = frozenset(verts[v] for v in range(len(verts))
                       if v not in on and lo <= ev.tin[ev.vface[v]] <= hi)
    return {"cycle": [verts[x] for x in cyc], "virtual": e in h.virtual,
            "inside": inside, "kids": kids, "shared": sorted(shared), "extra": extra}


def build_bdd(g, t=None, leaf_threshold=None, mode="bfs", root=0, eps=1, top_k=24):
    """Top-down decomposition; a bag splits while its size exceeds the
    threshold and some candidate cycle keeps every child within 5/6 of it.

    A bag with no such cycle becomes a leaf with ``forced_leaf`` set.
    """
    if mode not in ("bfs", "sssp"):
        raise InvalidParams(f"unknown mode {mode!r}")
    if g.n == 0:
        raise InvalidParams("empty graph")
    if t is None:
        t = bfs_tree(g, root) if mode == "bfs" else sssp_tree(g, root)
    if len(t.parent) != g.n or sum(1 for p in t.parent if p < 0) != 1:
        raise TreeNotSpanning("base tree must span the graph")
    for v, p in enumerate(t.parent):
        if p >= 0 and g.edges[t.parent_edge[v]][:2] not in ((v, p), (p, v)):
            raise TreeNotSpanning(f"tree edge of {v} is not an edge to its parent")
    thr = default_leaf_threshold(g, t, mode, eps) if leaf_threshold is None else leaf_threshold
    D = _tree_radius(g, t, mode)
    root_bag = Bag(0, -1, 0, list(range(g.n)), frozenset(range(2 * g.m)))
    tree = BddTree(g, t, mode, thr, D, [root_bag])
    queue = [root_bag]
    while queue:
        bag = queue.pop(0)
        if tree.measure(bag) <= thr or len(bag.vertices) <= 2:
            continue
        res = _split(g, t, bag, mode, top_k)
        if res is None:
            bag.forced_leaf = True
            continue
        bag.cycle = res["cycle"]
        bag.closing_virtual = res["virtual"]
        bag.inside = res["inside"]
        bag.separator = res["shared"]
        bag.tree_extra = res["extra"]
        shared = set(res["shared"])
        for side, vs, ds in res["kids"]:
            child = Bag(len(tree.bags), bag.id, bag.depth + 1, vs, ds,
                        frozenset((bag.marked | shared) & set(vs)))
            tree.bags.append(child)
            bag.children.append(child.id)
            bag.sides[child.id] = side
            queue.append(child)
    return tree


# --- validation ------------------------------------------------------------


@dataclass
class PropertyReport:
    results: dict  # name -> (passed, measured, bound)

    @property
    def ok(self):
        return all(p for p, _, _ in self.results.values())

    def failures(self):
        return [k for k, (p, _, _) in self.results.items() if not p]

    def lines(self):
        return [f"{k}: {'pass' if p else 'FAIL'} measured={m} bound={b}"
                for k, (p, m, b) in self.results.items()]


def _bag_local(g, bag):
    return _bag_graph(g, bag.vertices, bag.darts)


def _hop_diameter(local):
    best = 0
    for s in range(local.n):
        dist = [-1] * local.n
        dist[s] = 0
        q = [s]
        for x in q:
            for y, _ in local.adj[x]:
                if dist[y] < 0:
                    dist[y] = dist[x] + 1
                    q.append(y)
        if min(dist) < 0:
            return INF
        best = max(best, max(dist))
    return best


def _weighted_diameter(local):
    from .planar import distances

    return max((max(distances(local, s)) for s in range(local.n)), default=0)


def _path_cover(vertices, tree_edges):
    """Fewest vertex-disjoint paths covering a forest (greedy from the leaves)."""
    adj = {v: [] for v in vertices}
    for u, v in tree_edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = set()
    paths = 0
    for r in sorted(vertices):
        if r in seen:
            continue
        order, par = [r], {r: None}
        seen.add(r)
        for x in order:
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    par[y] = x
                    order.append(y)
        used = {}  # vertex -> number of path edges kept at it
        for x in reversed(order):
            p = par[x]
            if p is not None and used.get(x, 0) < 2 and used.get(p, 0) < 2:
                used[x] = used.get(x, 0) + 1
                used[p] = used.get(p, 0) + 1
        kept = sum(used.values()) // 2
        paths += len(order) - kept
    return paths


def validate_bdd(bdd, g=None):
    """Check the definitional and derived properties; never raises."""
    g = bdd.g if g is None else g
    t = bdd.base_tree
    n = g.n
    logn = max(1.0, math.log2(max(n, 2)))
    D = max(bdd.D, 1)
    res = {}
    bags = bdd.bags
    byd = bdd.by_depth()

    depth = bdd.depth()
    bound1 = math.ceil(math.log(max(n, 2)) / math.log(6 / 5)) + 1
    res["1_depth"] = (depth <= bound1, depth, bound1)

    root = bdd.root
    res["2_root"] = (root.vertices == list(range(n)) and root.darts == frozenset(range(2 * g.m)), len(root.vertices), n)

    ok3, ok3p, okc = True, True, True
    worst_child = Fraction(0)
    for b in bags:
        if b.is_leaf:
            continue
        kids = [bags[c] for c in b.children]
        if set().union(*[set(k.darts) for k in kids]) != set(b.darts):
            ok3 = False
        if set().union(*[set(k.vertices) for k in kids]) != set(b.vertices):
            ok3 = False
        if sum(len(k.darts) for k in kids) != len(b.darts):
            ok3 = False
        ps = bdd.measure(b)
        for k in kids:
            r = Fraction(bdd.measure(k), max(ps, 1))
            worst_child = max(worst_child, r)
            if 6 * bdd.measure(k) > 5 * ps:
                okc = False
        # 3': components of G[X] - S_X stay inside one child
        sep = set(b.separator)
        owner = {}
        for k in kids:
            for v in k.vertices:
                if v not in sep:
                    owner.setdefault(v, set()).add(k.id)
        if any(len(s) > 1 for s in owner.values()):
            ok3p = False
        for e in b.edges():
            u, v = g.edges[e][:2]
            if u in sep or v in sep:
                continue
            if owner.get(u) != owner.get(v):
                ok3p = False
    res["3_children_cover"] = (ok3, None, None)
    res["3'_separation"] = (ok3p, None, None)
    res["child_size_5/6"] = (okc, str(worst_child), "5/6")

    thr = bdd.leaf_threshold
    leaves = [b for b in bags if b.is_leaf]
    big = max((bdd.measure(b) for b in leaves), default=0)
    forced = [b.id for b in leaves if b.forced_leaf]
    unit = D * logn if bdd.mode == "bfs" else logn * logn
    # a leaf may stop short of the threshold when no 5/6 split exists; it
    # still has to fit the O(D log n) leaf size with constant 1
    bound4 = max(thr, math.ceil(unit)) if bdd.mode == "bfs" else thr
    res["4_leaf_size"] = (big <= bound4,
                          {"max": big, "c": round(big / unit, 3), "forced": len(forced)}, bound4)

    ok5, worst6, worst6p, worst_extra = True, 0, 0, 0
    ok6 = ok6p = True
    tree_e = t.edge_set
    for b in bags:
        local, eids, loc = _bag_local(g, b)
        if len(b.vertices) > 1 and len(components(local)) != 1:
            ok5 = False
        tedges = [i for i, e in enumerate(eids) if e in tree_e]
        comps = len(components(local, set(tedges)))
        worst6 = max(worst6, comps)
        if comps > b.depth + 1:
            ok6 = False
        worst_extra = max(worst_extra, len(b.tree_extra))
        if len(b.tree_extra) > b.depth:
            ok6 = False
        diam = _hop_diameter(local) if bdd.mode == "bfs" else _weighted_diameter(local)
        if bdd.mode == "bfs":
            bound = (b.depth + 1) * (2 * D + 1)
        else:
            bound = (b.depth + 1) * (2 * bdd.D + max((w for _, _, w in g.edges), default=1))
        worst6p = max(worst6p, Fraction(diam) / Fraction(D) if diam != INF else INF)
        if diam == INF or diam > bound:
            ok6p = False
    res["5_connected"] = (ok5, None, None)
    res["6_tree_components"] = (ok6, {"max_components": worst6, "max_extra_edges": worst_extra}, "depth+1")
    res["6'_diameter"] = (ok6p, {"max_diam/D": float(worst6p), "c_over_logn": round(float(worst6p) / logn, 3)},
                          "(depth+1)(2D+1)")

    ok7, worst7, worst7p = True, 0, 0
    for b in bags:
        if b.is_leaf:
            continue
        sep = set(b.separator)
        xs = set(b.vertices)
        tpairs = [(v, t.parent[v]) for v in sep if t.parent[v] in sep and v in xs]
        k = _path_cover(sep, tpairs)
        worst7 = max(worst7, k)
        worst7p = max(worst7p, len(sep))
        if k > 2 * (b.depth + 2) + len(b.tree_extra) + 1:
            ok7 = False
    res["7_separator_paths"] = (ok7, worst7, "2(depth+2)+|T'\\T|+1")
    res["7'_separator_size"] = (True, {"max": worst7p, "c": round(worst7p / (D * logn), 3)}, None)

    ok8 = True
    for d, level in byd.items():
        seen = {}
        for b in level:
            for x in b.darts:
                if x in seen:
                    ok8 = False
                seen[x] = b.id
    for b in bags:
        if b.is_leaf:
            continue
        kids = [bags[c] for c in b.children]
        sep = set(b.separator)
        for i in range(len(kids)):
            for j in range(i + 1, len(kids)):
                if not set(kids[i].vertices) & set(kids[j].vertices) <= sep:
                    ok8 = False
    # each bag lies wholly on one side of every ancestor cycle
    for b in bags:
        a = b.parent
        while a >= 0:
            anc = bags[a]
            rest = set(b.vertices) - set(anc.cycle)
            ins = rest & anc.inside
            if ins and ins != rest:
                ok8 = False
            a = anc.parent
    res["8_regions"] = (ok8, None, None)

    ok9 = True
    for b in bags:
        if b.is_leaf:
            continue
        cyc = b.cycle
        if not set(b.separator) <= set(cyc):
            ok9 = False
        for i in range(len(cyc) - 1):
            if g.edge_between(cyc[i], cyc[i + 1]) is None:
                ok9 = False
        if len(cyc) > 2 and not b.closing_virtual and g.edge_between(cyc[-1], cyc[0]) is None:
            ok9 = False
    res["9_cycle_curve"] = (ok9, None, None)

    mult = 0
    induced_mult = 0
    for d, level in byd.items():
        cnt = {}
        icnt = {}
        for b in level:
            for e in b.edges():
                cnt[e] = cnt.get(e, 0) + 1
            xs = set(b.vertices)
            for e, (u, v, _) in enumerate(g.edges):
                if u in xs and v in xs:
                    icnt[e] = icnt.get(e, 0) + 1
        mult = max(mult, max(cnt.values(), default=0))
        induced_mult = max(induced_mult, max(icnt.values(), default=0))
    res["8'_edge_multiplicity"] = (mult <= 2, {"owned": mult, "induced": induced_mult}, 2)

    okm = True
    for d, level in byd.items():
        seen = set()
        for b in level:
            free = set(b.vertices) - b.marked
            if free & seen:
                okm = False
            seen |= free
    res["unmarked_disjoint"] = (okm, None, None)
    return PropertyReport(res)


def dumps_bdd(bdd):
    lines = []
    for b in bdd.bags:
        sep = ",".join(map(str, b.separator))
        verts = ",".join(map(str, b.vertices))
        lines.append(f"bag {b.id} parent={b.parent} sep={sep} verts={verts}")
    return "\n".join(lines) + "\n"

"""Fundamental-cycle separators, block-cut trees and biconnectivity augmentation."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import Disconnected, InvalidParams, NotBiconnected, SeparatorFailure, TreeNotSpanning
from .planar import PlanarGraph, SpanningTree, components

BALANCE = Fraction(2, 3)


# --- block-cut tree --------------------------------------------------------


@dataclass
class BlockCutTree:
    blocks: list  # sorted vertex lists
    block_edges: list  # edge ids per block
    cut_vertices: list
    tree_edges: list  # (cut vertex, block index)
    vertex_level: list
    edge_level: list
    block_level: list
    block_root: list  # r(B), -1 for the root block of a cut-free graph
    root: int = -1

    def edge_block(self):
        out = {}
        for b, es in enumerate(self.block_edges):
            for e in es:
                out[e] = b
        return out


def _biconnected_components(g):
    """Edge partition into blocks (iterative Hopcroft-Tarjan)."""
    n = g.n
    disc = [-1] * n
    low = [0] * n
    blocks, cuts = [], set()
    timer = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = timer
        timer += 1
        root_children = 0
        stack = [(root, -1, iter(g.adj[root]))]
        estack = []
        while stack:
            v, pe, it = stack[-1]
            advanced = False
            for w, e in it:
                if e == pe:
                    continue
                if disc[w] < 0:
                    estack.append(e)
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, e, iter(g.adj[w])))
                    advanced = True
                    break
                if disc[w] < disc[v]:
                    estack.append(e)
                    low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if not stack:
                continue
            u = stack[-1][0]
            low[u] = min(low[u], low[v])
            if low[v] >= disc[u]:
                if u == root:
                    root_children += 1
                else:
                    cuts.add(u)
                comp = []
                while True:
                    e = estack.pop()
                    comp.append(e)
                    if e == pe:
                        break
                blocks.append(sorted(comp))
        if root_children > 1:
            cuts.add(root)
    return blocks, cuts


def block_cut_tree(g):
    """Blocks, cut vertices and levels measured from the smallest cut vertex.

    Levels are depths in the block-cut tree: the root cut vertex has level 0,
    a block sits one below its root cut vertex, and a cut vertex one below
    its parent block.  Non-cut vertices and edges inherit their block level.
    """
    if g.n == 0 or len(components(g)) != 1:
        raise Disconnected("block-cut tree needs a connected graph")
    eblocks, cuts = _biconnected_components(g)
    if g.n == 1:
        return BlockCutTree([[0]], [[]], [], [], [0], [], [0], [-1], -1)
    blocks = []
    for es in eblocks:
        vs = set()
        for e in es:
            vs.update(g.edges[e][:2])
        blocks.append(sorted(vs))
    cut_vertices = sorted(cuts)
    tree_edges = [(c, b) for b, vs in enumerate(blocks) for c in vs if c in cuts]
    nb = len(blocks)
    block_level = [0] * nb
    block_root = [-1] * nb
    vertex_level = [0] * g.n
    edge_level = [0] * g.m
    root = -1
    if cut_vertices:
        root = cut_vertices[0]
        by_cut = {}
        for c, b in tree_edges:
            by_cut.setdefault(c, []).append(b)
        seen_b = [False] * nb
        seen_c = {root}
        vertex_level[root] = 0
        frontier = [root]
        while frontier:
            nxt = []
            for c in frontier:
                for b in by_cut[c]:
                    if seen_b[b]:
                        continue
                    seen_b[b] = True
                    block_root[b] = c
                    block_level[b] = vertex_level[c] + 1
                    for v in blocks[b]:
                        if v in cuts and v not in seen_c:
                            seen_c.add(v)
                            vertex_level[v] = block_level[b] + 1
                            nxt.append(v)
            frontier = nxt
    for b, vs in enumerate(blocks):
        for v in vs:
            if v not in cuts:
                vertex_level[v] = block_level[b]
        for e in eblocks[b]:
            edge_level[e] = block_level[b]
    return BlockCutTree(blocks, eblocks, cut_vertices, tree_edges, vertex_level,
                        edge_level, block_level, block_root, root)


def is_biconnected(g):
    if g.n <= 2:
        return g.is_connected()
    if not g.is_connected():
        return False
    return not _biconnected_components(g)[1]


# --- augmentation ------------------------------------------------------------


@dataclass
class Augmentation:
    graph: PlanarGraph  # G with A and B edges appended (virtual)
    a_edges: list  # edge ids in graph
    b_edges: list
    sim_paths: dict  # virtual edge id -> real vertex path
    edge_level: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def congestion(self):
        load = {}
        for path in self.sim_paths.values():
            for x, y in zip(path, path[1:]):
                key = (min(x, y), max(x, y))
                load[key] = load.get(key, 0) + 1
        return load


class _Rot:
    """Mutable rotation used while inserting chords."""

    def __init__(self, g):
        self.edges = [(u, v) for u, v, _ in g.edges]
        self.rot = [list(r) for r in g.rotation]

    def other(self, e, v):
        a, b = self.edges[e]
        return b if v == a else a

    def chord(self, u, e1, e2):
        """Join the far ends of consecutive edges e1, e2 at u (e2 follows e1)."""
        u1, u2 = self.other(e1, u), self.other(e2, u)
        c = len(self.edges)
        self.edges.append((u1, u2))
        r2 = self.rot[u2]
        r2.insert(r2.index(e2) + 1, c)
        r1 = self.rot[u1]
        r1.insert(r1.index(e1), c)
        return c


def biconnect_augment(g):
    """Add A- and B-edges so the embedded graph becomes biconnected.

    A-edges join clockwise-consecutive neighbors of a cut vertex that lie in
    its child blocks.  B-edges (computed on G with A) join a child-level
    neighbor to the adjacent parent-level neighbor, scanning clockwise when
    level/2 is even and counter-clockwise otherwise.
    """
    bct = block_cut_tree(g)
    R = _Rot(g)
    level = list(bct.edge_level)
    paths = {}
    a_edges = []
    for u in bct.cut_vertices:
        rot = list(R.rot[u])
        k = len(rot)
        lu = bct.vertex_level[u]
        child = [level[e] == lu + 1 for e in rot]
        pairs = []
        for i in range(k if not all(child) else k - 1):
            e1, e2 = rot[i], rot[(i + 1) % k]
            if child[i] and child[(i + 1) % k] and R.other(e1, u) != R.other(e2, u):
                pairs.append((e1, e2))
        for e1, e2 in pairs:
            c = R.chord(u, e1, e2)
            level.append(lu + 1)
            paths[c] = [R.other(e1, u), u, R.other(e2, u)]
            a_edges.append(c)

    b_plan = []
    for u in bct.cut_vertices:
        lu = bct.vertex_level[u]
        if lu == 0:
            continue
        rot = R.rot[u]
        k = len(rot)
        lv = [level[e] for e in rot]
        clockwise = (lu // 2) % 2 == 0
        for i in range(k):
            if lv[i] != lu + 1:
                continue
            j = (i + 1) % k if clockwise else (i - 1) % k
            if lv[j] == lu - 1 and R.other(rot[i], u) != R.other(rot[j], u):
                b_plan.append((u, rot[i], rot[j], clockwise))
    b_edges = []
    skipped = []
    for u, ec, ep, clockwise in b_plan:
        rot = R.rot[u]
        k = len(rot)
        e1, e2 = (ec, ep) if clockwise else (ep, ec)
        if rot[(rot.index(e1) + 1) % k] != e2:
            skipped.append((u, ec, ep))  # corner already split by an earlier chord
            continue
        c = R.chord(u, e1, e2)
        level.append(bct.vertex_level[u])
        p1 = _oriented(paths, R, e1, u)
        p2 = _oriented(paths, R, e2, u)
        paths[c] = p1 + p2[::-1][1:]
        b_edges.append(c)

    edges = list(g.edges) + [(a, b, 1 if not g.is_weighted else _virtual_weight(g, paths[i]))
                             for i, (a, b) in enumerate(R.edges[g.m:], start=g.m)]
    aug = PlanarGraph(g.n, edges, R.rot, g.is_weighted, set(g.virtual) | set(range(g.m, len(edges))))
    return Augmentation(aug, a_edges, b_edges, paths, level, skipped)


def _virtual_weight(g, path):
    # weight of the simulating path, so virtual edges never shorten distances
    total = 0
    for x, y in zip(path, path[1:]):
        total += g.edges[g.edge_between(x, y)][2]
    return total


def _oriented(paths, R, e, u):
    """Real path of edge e running from its far endpoint to u."""
    x = R.other(e, u)
    p = list(paths[e]) if e in paths else [x, u]
    if p[0] != x:
        p.reverse()
    return p


# --- cycle separator -------------------------------------------------------


@dataclass
class CycleSeparator:
    cycle: list  # vertices along the cycle, closing edge joins the ends
    tree_path_edges: list
    closing_edge: tuple
    closing_edge_id: int
    closing_virtual: bool
    inside: list
    outside: list
    inside_weight: object
    outside_weight: object
    total_weight: object
    graph: PlanarGraph  # graph the cycle lives in (may carry virtual chords)
    chords: list = field(default_factory=list)

    @property
    def balance(self):
        if not self.total_weight:
            return Fraction(0)
        return Fraction(max(self.inside_weight, self.outside_weight)) / Fraction(self.total_weight)

    def edges(self):
        return list(self.tree_path_edges) + ([self.closing_edge_id] if self.closing_edge_id >= 0 else [])


def check_spanning_tree(g, t):
    if len(t.parent) != g.n or t.parent[t.root] != -1:
        raise TreeNotSpanning("tree has wrong size or root")
    for v in range(g.n):
        if v == t.root:
            continue
        p, e = t.parent[v], t.parent_edge[v]
        if p < 0 or e is None or e < 0 or e >= g.m or set(g.edges[e][:2]) != {v, p}:
            raise TreeNotSpanning(f"vertex {v} lacks a valid parent edge")
    dep = t.depth()
    if any(d < 0 for d in dep):
        raise TreeNotSpanning("tree does not reach every vertex")


def _tree_path(t, dep, x, z):
    """Vertices and edges on the tree path from x to z."""
    left, right = [x], [z]
    le, re_ = [], []
    a, b = x, z
    while dep[a] > dep[b]:
        le.append(t.parent_edge[a])
        a = t.parent[a]
        left.append(a)
    while dep[b] > dep[a]:
        re_.append(t.parent_edge[b])
        b = t.parent[b]
        right.append(b)
    while a != b:
        le.append(t.parent_edge[a])
        a = t.parent[a]
        left.append(a)
        re_.append(t.parent_edge[b])
        b = t.parent[b]
        right.append(b)
    return left + right[-2::-1], le + re_[::-1]


class _Evaluator:
    """Scores every fundamental cycle of a fixed graph and tree."""

    def __init__(self, g, t, w):
        self.g, self.t, self.w = g, t, w
        self.dep = t.depth()
        self.total = sum(w)
        fod = g.face_of_dart()
        self.face_of_dart = fod
        nf = len(g.faces())
        tree_edges = t.edge_set
        dual = [[] for _ in range(nf)]
        self.nontree = [e for e in range(g.m) if e not in tree_edges]
        for e in self.nontree:
            f1, f2 = fod[2 * e], fod[2 * e + 1]
            dual[f1].append((f2, e))
            dual[f2].append((f1, e))
        tin, tout = [-1] * nf, [0] * nf
        dparent = [-1] * nf
        self.child_face = {}
        order = []
        root = 0
        tin[root] = 0
        clock = 1
        stack = [(root, iter(dual[root]))]
        order.append(root)
        while stack:
            f, it = stack[-1]
            for h, e in it:
                if tin[h] < 0:
                    tin[h] = clock
                    clock += 1
                    dparent[h] = f
                    self.child_face[e] = h
                    order.append(h)
                    stack.append((h, iter(dual[h])))
                    break
            else:
                tout[f] = clock - 1
                stack.pop()
        self.tin, self.tout, self.dparent = tin, tout, dparent
        self.vface = [fod[g.out_dart(v, g.rotation[v][0])] if g.rotation[v] else root for v in range(g.n)]
        prefix = [0] * (clock + 1)
        for v in range(g.n):
            prefix[tin[self.vface[v]] + 1] += w[v]
        for i in range(clock):
            prefix[i + 1] += prefix[i]
        self.prefix = prefix

    def inside_of(self, c, on_cycle):
        lo, hi = self.tin[c], self.tout[c]
        s = self.prefix[hi + 1] - self.prefix[lo]
        for v in on_cycle:
            if lo <= self.tin[self.vface[v]] <= hi:
                s -= self.w[v]
        return s

    def score(self, e):
        x, z = self.g.edges[e][:2]
        verts, tedges = _tree_path(self.t, self.dep, x, z)
        c = self.child_face[e]
        inside = self.inside_of(c, verts)
        cyc = sum(self.w[v] for v in verts)
        outside = self.total - inside - cyc
        return verts, tedges, inside, outside

    def best(self, edges):
        best = None
        lim = BALANCE * self.total
        for e in edges:
            verts, tedges, ins, out = self.score(e)
            if ins <= lim and out <= lim:
                u, v = self.g.edges[e][:2]
                key = (max(ins, out), (min(u, v), max(u, v)), e)
                if best is None or key < best[0]:
                    best = (key, e, verts, tedges, ins, out)
        return best

    def critical_face(self):
        """Descend the dual tree toward heavy superfaces."""
        kids = {}
        for e, c in self.child_face.items():
            kids.setdefault(self.dparent[c], []).append((c, e))
        lim = BALANCE * self.total
        f = 0
        while True:
            heavy = None
            for c, e in kids.get(f, []):
                _, _, ins, _ = self.score(e)
                if ins > lim and (heavy is None or ins > heavy[0]):
                    heavy = (ins, c)
            if heavy is None:
                return f
            f = heavy[1]


def fan_triangulate(g, faces_to_fill, t):
    """Triangulate the given faces by fans anchored at their shallowest vertex."""
    dep = t.depth()
    R = _Rot(g)
    chords = []
    for f in faces_to_fill:
        walk = g.faces()[f]
        k = len(walk)
        if k <= 3:
            continue
        verts = [g.tail(d) for d in walk]
        if len(set(verts)) != k:
            continue
        a = min(range(k), key=lambda i: (dep[verts[i]], verts[i]))
        # rotate so the anchor comes first; walk[i] leaves verts[i]
        walk = walk[a:] + walk[:a]
        verts = verts[a:] + verts[:a]
        e_in = walk[-1] >> 1
        for j in range(2, k - 1):
            fj = verts[j]
            e_prev = walk[j - 1] >> 1
            c = len(R.edges)
            R.edges.append((verts[0], fj))
            r = R.rot[verts[0]]
            r.insert(r.index(e_in) + 1, c)
            rj = R.rot[fj]
            rj.insert(rj.index(e_prev) + 1, c)
            chords.append(c)
    if not chords:
        return g, []
    edges = list(g.edges) + [(u, v, 1) for u, v in R.edges[g.m:]]
    h = PlanarGraph(g.n, edges, R.rot, False if not g.is_weighted else True,
                    set(g.virtual) | set(chords))
    return h, chords


def cycle_separator(g, t, node_weights=None, eps_bal=0):
    """Balanced fundamental cycle of ``t`` (closing edge possibly virtual)."""
    if g.n == 0:
        raise InvalidParams("empty graph")
    check_spanning_tree(g, t)
    if not is_biconnected(g):
        raise NotBiconnected("graph has a cut vertex; augment first")
    w = list(node_weights) if node_weights is not None else [1] * g.n
    if len(w) != g.n or any(x < 0 for x in w) or sum(w) <= 0:
        raise InvalidParams("node weights must be nonnegative with positive sum")
    lim_scale = 1 + Fraction(eps_bal)

    def finish(h, best, chords):
        _, e, verts, tedges, ins, out = best
        ev = _Evaluator(h, t, w)
        c = ev.child_face[e]
        lo, hi = ev.tin[c], ev.tout[c]
        on = set(verts)
        inside = [v for v in range(h.n) if v not in on and lo <= ev.tin[ev.vface[v]] <= hi]
        ins_set = set(inside)
        outside = [v for v in range(h.n) if v not in on and v not in ins_set]
        x, z = h.edges[e][:2]
        return CycleSeparator(verts, tedges, (x, z), e, e in h.virtual, inside, outside,
                              ins, out, ev.total, h, chords)

    ev = _Evaluator(g, t, w)
    if not ev.nontree:
        verts = list(range(g.n))
        return CycleSeparator(verts, sorted(t.edge_set), (verts[0], verts[-1]), -1, False,
                              [], [], 0, 0, ev.total, g, [])
    real = [e for e in ev.nontree if e not in g.virtual]
    b = ev.best(real)
    if b is not None and _within(b, ev.total, lim_scale):
        return finish(g, b, [])
    crit = ev.critical_face()
    h, chords = fan_triangulate(g, [crit], t)
    ev2 = _Evaluator(h, t, w)
    b = ev2.best(ev2.nontree)
    if b is not None:
        return finish(h, b, chords)
    h, chords = fan_triangulate(g, range(len(g.faces())), t)
    ev3 = _Evaluator(h, t, w)
    b = ev3.best(ev3.nontree)
    if b is None:
        raise SeparatorFailure("no balanced fundamental cycle after triangulation")
    return finish(h, b, chords)


def _within(best, total, scale):
    return best[4] <= BALANCE * scale * total and best[5] <= BALANCE * scale * total


def side_weights(g, sep, w):
    """Recompute strict side weights from scratch (independent check)."""
    on = set(sep.cycle)
    h = sep.graph
    allowed = set(range(h.m)) - {e for e in range(h.m) if set(h.edges[e][:2]) & on}
    comps = components(h, allowed)
    sides = []
    for comp in comps:
        if comp[0] in on:
            continue
        sides.append(comp)
    ins, outs = set(sep.inside), set(sep.outside)
    for comp in sides:
        cs = set(comp)
        if not (cs <= ins or cs <= outs):
            return None
    return sum(w[v] for v in sep.inside), sum(w[v] for v in sep.outside)

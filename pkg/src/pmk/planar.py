"""Embedded planar graphs stored as rotation systems.

A graph keeps, for every vertex, the clockwise cyclic order of its incident
edge ids.  Faces are recovered by boundary walks over darts: dart ``2e``
runs from ``edges[e][0]`` to ``edges[e][1]`` and dart ``2e + 1`` runs back.
After arriving at ``h`` along edge ``e`` the walk leaves ``h`` along the
edge that follows ``e`` in the rotation of ``h``.
"""

from __future__ import annotations

import heapq
import math
import random
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    Disconnected,
    GraphFormatError,
    InvalidParams,
    MalformedRotation,
    NonPlanarRotation,
    SourcesNotOnFace,
    TreeNotSpanning,
)

INF = math.inf


def as_weight(w):
    """Normalize a weight to an exact number (int when integral)."""
    if isinstance(w, bool):
        raise GraphFormatError("boolean weight")
    if isinstance(w, float):
        w = Fraction(w).limit_denominator(10**9)
    w = Fraction(w)
    return w.numerator if w.denominator == 1 else w


class PlanarGraph:
    """Undirected embedded graph with exact weights.

    ``edges`` is a list of ``(u, v, w)``; ``rotation[v]`` lists the edge ids
    at ``v`` in clockwise order.  ``virtual`` holds ids of edges that do not
    exist in the underlying network (added by augmentation or separators).
    """

    def __init__(self, n, edges, rotation=None, weighted=False, virtual=()):
        self.n = int(n)
        self.is_weighted = bool(weighted)
        self.edges = []
        for e, (u, v, *rest) in enumerate(edges):
            w = rest[0] if rest else 1
            w = as_weight(w) if self.is_weighted else 1
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphFormatError(f"edge {e} has endpoint out of range")
            if u == v:
                raise GraphFormatError(f"edge {e} is a self-loop")
            if self.is_weighted and w <= 0:
                raise GraphFormatError(f"edge {e} has nonpositive weight")
            self.edges.append((int(u), int(v), w))
        self.virtual = frozenset(virtual)
        if rotation is None:
            rotation = [[] for _ in range(self.n)]
            for e, (u, v, _) in enumerate(self.edges):
                rotation[u].append(e)
                rotation[v].append(e)
        self.rotation = [list(r) for r in rotation]
        if len(self.rotation) != self.n:
            raise MalformedRotation("rotation must list every vertex")
        self._pos = None
        self._faces = None
        self.adj = [[] for _ in range(self.n)]
        for v in range(self.n):
            for e in self.rotation[v]:
                if not 0 <= e < len(self.edges):
                    raise MalformedRotation(f"vertex {v} lists unknown edge {e}")
                a, b, _ = self.edges[e]
                if v not in (a, b):
                    raise MalformedRotation(f"vertex {v} lists non-incident edge {e}")
                self.adj[v].append((b if v == a else a, e))

    @property
    def m(self):
        return len(self.edges)

    def weight(self, e):
        return self.edges[e][2]

    def other(self, e, v):
        a, b, _ = self.edges[e]
        return b if v == a else a

    def neighbors(self, v):
        return [u for u, _ in self.adj[v]]

    def degree(self, v):
        return len(self.rotation[v])

    def real_edges(self):
        return [e for e in range(self.m) if e not in self.virtual]

    def edge_between(self, u, v):
        """Smallest-weight edge id joining u and v, or None."""
        best = None
        for x, e in self.adj[u]:
            if x == v and (best is None or self.edges[e][2] < self.edges[best][2]):
                best = e
        return best

    # --- darts and faces -------------------------------------------------

    def tail(self, d):
        return self.edges[d >> 1][d & 1]

    def head(self, d):
        return self.edges[d >> 1][1 - (d & 1)]

    def out_dart(self, v, e):
        return 2 * e if self.edges[e][0] == v else 2 * e + 1

    def _positions(self):
        if self._pos is None:
            pos = {}
            for v in range(self.n):
                for i, e in enumerate(self.rotation[v]):
                    pos[(v, e)] = i
            self._pos = pos
        return self._pos

    def next_dart(self, d):
        h = self.head(d)
        rot = self.rotation[h]
        i = self._positions()[(h, d >> 1)]
        return self.out_dart(h, rot[(i + 1) % len(rot)])

    def faces(self):
        """Boundary walks as lists of darts, in discovery order."""
        if self._faces is None:
            seen = [False] * (2 * self.m)
            faces = []
            for d0 in range(2 * self.m):
                if seen[d0]:
                    continue
                walk = []
                d = d0
                while not seen[d]:
                    seen[d] = True
                    walk.append(d)
                    d = self.next_dart(d)
                faces.append(walk)
            self._faces = faces
        return self._faces

    def face_vertices(self, f):
        return [self.tail(d) for d in self.faces()[f]]

    def face_of_dart(self):
        out = [0] * (2 * self.m)
        for f, walk in enumerate(self.faces()):
            for d in walk:
                out[d] = f
        return out

    # --- derived graphs --------------------------------------------------

    def with_edges(self, new_edges, rotation, virtual=True):
        """Copy with extra edges appended; caller supplies the full rotation."""
        edges = list(self.edges) + [tuple(e) if len(e) == 3 else (e[0], e[1], 1) for e in new_edges]
        virt = set(self.virtual)
        if virtual:
            virt.update(range(self.m, len(edges)))
        return PlanarGraph(self.n, edges, rotation, self.is_weighted, virt)

    def induced(self, vertices, keep_virtual=True):
        """Induced subgraph on ``vertices``; returns (graph, old_ids).

        The restricted rotation of a planar rotation system is planar, so
        the result is again a valid embedding.
        """
        old = sorted(set(vertices))
        new = {v: i for i, v in enumerate(old)}
        edges, remap, virt = [], {}, set()
        for e, (u, v, w) in enumerate(self.edges):
            if u in new and v in new and (keep_virtual or e not in self.virtual):
                remap[e] = len(edges)
                if e in self.virtual:
                    virt.add(len(edges))
                edges.append((new[u], new[v], w))
        rotation = [[remap[e] for e in self.rotation[v] if e in remap] for v in old]
        return PlanarGraph(len(old), edges, rotation, self.is_weighted, virt), old

    def is_connected(self):
        return self.n <= 1 or len(components(self)) == 1

    def __repr__(self):
        return f"PlanarGraph(n={self.n}, m={self.m}, weighted={self.is_weighted})"


def components(g, allowed_edges=None):
    """Connected components as sorted vertex lists, ordered by smallest vertex."""
    seen = [False] * g.n
    out = []
    for s in range(g.n):
        if seen[s]:
            continue
        comp = [s]
        seen[s] = True
        q = deque([s])
        while q:
            x = q.popleft()
            for y, e in g.adj[x]:
                if allowed_edges is not None and e not in allowed_edges:
                    continue
                if not seen[y]:
                    seen[y] = True
                    comp.append(y)
                    q.append(y)
        out.append(sorted(comp))
    return out


# --- validation ----------------------------------------------------------


@dataclass
class EmbeddingReport:
    faces: list
    face_darts: list
    components: list
    euler: list  # (V, E, F) per component
    valid: bool = True


def validate_embedding(g):
    """Check the rotation system and that it embeds every component in the sphere."""
    count = {}
    for v in range(g.n):
        for e in g.rotation[v]:
            count[(v, e)] = count.get((v, e), 0) + 1
    for e, (u, v, _) in enumerate(g.edges):
        for x in (u, v):
            if count.get((x, e), 0) != 1:
                raise MalformedRotation(f"edge {e} must appear exactly once around vertex {x}")
    seen_pairs = {}
    for e, (u, v, _) in enumerate(g.edges):
        key = (min(u, v), max(u, v))
        if key in seen_pairs and e not in g.virtual and seen_pairs[key] not in g.virtual:
            raise GraphFormatError(f"parallel real edges between {key}")
        seen_pairs.setdefault(key, e)

    comps = components(g)
    comp_of = [0] * g.n
    for i, c in enumerate(comps):
        for v in c:
            comp_of[v] = i
    ecount = [0] * len(comps)
    for u, _, _ in g.edges:
        ecount[comp_of[u]] += 1
    fcount = [0] * len(comps)
    faces = g.faces()
    for walk in faces:
        fcount[comp_of[g.tail(walk[0])]] += 1
    euler = []
    for i, c in enumerate(comps):
        f = fcount[i] if ecount[i] else 1
        euler.append((len(c), ecount[i], f))
        if len(c) - ecount[i] + f != 2:
            raise NonPlanarRotation(
                f"component {i}: V-E+F = {len(c)}-{ecount[i]}+{f} != 2"
            )
    return EmbeddingReport(
        faces=[[g.tail(d) for d in w] for w in faces],
        face_darts=[list(w) for w in faces],
        components=comps,
        euler=euler,
    )


# --- shortest paths ------------------------------------------------------


def distances(g, s):
    """Exact single-source distances (BFS when unweighted, Dijkstra otherwise)."""
    dist = [INF] * g.n
    dist[s] = 0
    if not g.is_weighted:
        q = deque([s])
        while q:
            x = q.popleft()
            for y, _ in g.adj[x]:
                if dist[y] == INF:
                    dist[y] = dist[x] + 1
                    q.append(y)
        return dist
    heap = [(0, s)]
    done = [False] * g.n
    while heap:
        dx, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        for y, e in g.adj[x]:
            nd = dx + g.edges[e][2]
            if nd < dist[y]:
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


def parents_from_distances(g, dist, s):
    """Shortest-path parents; ties go to the smaller vertex id."""
    parent = [-1] * g.n
    for v in range(g.n):
        if v == s or dist[v] == INF:
            continue
        best = None
        for u, e in g.adj[v]:
            if dist[u] + g.edges[e][2] == dist[v] and (best is None or u < best):
                best = u
        parent[v] = best
    return parent


def single_source_distances(g, s):
    """Return ``(dist, parent)``; unreachable vertices get ``inf`` and parent -1."""
    if not 0 <= s < g.n:
        raise InvalidParams(f"source {s} out of range")
    dist = distances(g, s)
    return dist, parents_from_distances(g, dist, s)


class DistOracle:
    """Cached exact distances; the ground truth for every check."""

    def __init__(self, g):
        self.g = g
        self._rows = {}

    def row(self, s):
        r = self._rows.get(s)
        if r is None:
            r = self._rows[s] = distances(self.g, s)
        return r

    def dist(self, u, v):
        if v in self._rows and u not in self._rows:
            return self._rows[v][u]
        return self.row(u)[v]

    def eccentricity(self, v):
        return max(self.row(v))

    def diameter(self):
        return max((self.eccentricity(v) for v in range(self.g.n)), default=0)


def diameter(g):
    return DistOracle(g).diameter()


def aspect_ratio(g, exact_limit=512):
    """Ratio of largest to smallest distance between distinct vertices."""
    if g.n < 2:
        return 1
    if g.n <= exact_limit:
        o = DistOracle(g)
        lo, hi = INF, 0
        for u in range(g.n):
            r = o.row(u)
            for v in range(u + 1, g.n):
                if r[v] != INF:
                    lo = min(lo, r[v])
                    hi = max(hi, r[v])
        return Fraction(hi) / Fraction(lo) if lo != INF else 1
    wmin = min(w for _, _, w in g.edges)
    return Fraction(2 * DistOracle(g).eccentricity(0)) / Fraction(wmin)


# --- spanning trees ------------------------------------------------------


@dataclass
class SpanningTree:
    root: int
    parent: list
    parent_edge: list
    edge_set: frozenset = field(default=frozenset())

    def __post_init__(self):
        self.edge_set = frozenset(e for e in self.parent_edge if e >= 0)

    def children(self):
        ch = [[] for _ in self.parent]
        for v, p in enumerate(self.parent):
            if p >= 0:
                ch[p].append(v)
        return ch

    def depth(self):
        dep = [-1] * len(self.parent)
        dep[self.root] = 0
        order = [self.root]
        ch = self.children()
        for x in order:
            for y in ch[x]:
                dep[y] = dep[x] + 1
                order.append(y)
        return dep

    def path_to_root(self, v):
        out = [v]
        while self.parent[out[-1]] >= 0:
            out.append(self.parent[out[-1]])
        return out


def tree_from_parents(g, root, parent):
    pe = [-1] * g.n
    for v, p in enumerate(parent):
        if p >= 0:
            pe[v] = g.edge_between(v, p)
            if pe[v] is None:
                raise TreeNotSpanning(f"parent {p} of {v} is not a neighbour")
    return SpanningTree(root, list(parent), pe)


def bfs_tree(g, root):
    """Hop-count BFS tree; parents are the smallest-id neighbor one level up."""
    hop = PlanarGraph(g.n, [(u, v, 1) for u, v, _ in g.edges], g.rotation, False, g.virtual)
    dist = distances(hop, root)
    if any(d == INF for d in dist):
        raise Disconnected("graph is not connected")
    return tree_from_parents(g, root, parents_from_distances(hop, dist, root))


def sssp_tree(g, root):
    dist, parent = single_source_distances(g, root)
    if any(d == INF for d in dist):
        raise Disconnected("graph is not connected")
    return tree_from_parents(g, root, parent)


# --- sources on a face ---------------------------------------------------


@dataclass(frozen=True)
class FaceVertexSequence:
    face_id: int
    vertices: tuple
    consecutive: bool = True

    def __len__(self):
        return len(self.vertices)


def face_sources(g, face_id, k=None, start=0):
    """Take up to ``k`` consecutive distinct vertices along a face walk."""
    faces = g.faces()
    if not 0 <= face_id < len(faces):
        raise SourcesNotOnFace(f"no face {face_id}")
    walk = [g.tail(d) for d in faces[face_id]]
    k = len(walk) if k is None else k
    out = []
    for i in range(len(walk)):
        v = walk[(start + i) % len(walk)]
        if v in out or len(out) == k:
            break
        out.append(v)
    return FaceVertexSequence(face_id, tuple(out), True)


def check_sources(g, S):
    """Raise SourcesNotOnFace unless S follows the walk of its face in order."""
    if not S.vertices:
        raise SourcesNotOnFace("empty source sequence")
    if len(set(S.vertices)) != len(S.vertices):
        raise SourcesNotOnFace("repeated source")
    if g.m == 0:
        if len(S.vertices) == 1:
            return
        raise SourcesNotOnFace("edgeless graph has no face walk")
    faces = g.faces()
    if not 0 <= S.face_id < len(faces):
        raise SourcesNotOnFace(f"no face {S.face_id}")
    walk = [g.tail(d) for d in faces[S.face_id]]
    L = len(walk)
    for start in range(L):
        if walk[start] != S.vertices[0]:
            continue
        pos, ok = start, True
        for s in S.vertices[1:]:
            if S.consecutive:
                pos += 1
                ok = walk[pos % L] == s
            else:
                step = next((j for j in range(1, L) if walk[(pos + j) % L] == s), None)
                ok = step is not None and pos + step < start + L
                pos = pos + step if ok else pos
            if not ok:
                break
        if ok:
            return
    raise SourcesNotOnFace(f"sources {S.vertices} do not follow face {S.face_id}")


# --- generators ----------------------------------------------------------


def _rotation_from_coords(n, edges, coords):
    rot = [[] for _ in range(n)]
    for e, (u, v, *_) in enumerate(edges):
        rot[u].append(e)
        rot[v].append(e)
    for v in range(n):
        x0, y0 = coords[v]

        def ang(e, v=v, x0=x0, y0=y0):
            a, b = edges[e][0], edges[e][1]
            o = b if a == v else a
            return -math.atan2(coords[o][1] - y0, coords[o][0] - x0)

        rot[v].sort(key=ang)
    return rot


def grid(rows, cols):
    n = rows * cols
    edges, coords = [], []
    for r in range(rows):
        for c in range(cols):
            coords.append((c, -r))
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, 1))
            if r + 1 < rows:
                edges.append((v, v + cols, 1))
    return edges, coords


def random_triangulation_rotation(n, rng, flips=None):
    """Stacked triangulation followed by random edge flips.

    Works on neighbor-order lists: after inserting into face (a, b, c) the
    new vertex x has clockwise order (a, c, b).
    """
    nbr = {0: [1, 2], 1: [2, 0], 2: [0, 1]}
    faces = [(0, 1, 2), (0, 2, 1)]
    for x in range(3, n):
        fi = rng.randrange(len(faces))
        a, b, c = faces[fi]
        for p, q in ((b, a), (c, b), (a, c)):
            lst = nbr[p]
            lst.insert(lst.index(q) + 1, x)
        nbr[x] = [a, c, b]
        faces[fi] = (a, b, x)
        faces.append((b, c, x))
        faces.append((c, a, x))

    def succ(v, u):
        lst = nbr[v]
        return lst[(lst.index(u) + 1) % len(lst)]

    flips = 2 * n if flips is None else flips
    for _ in range(flips if n > 3 else 0):
        u = rng.randrange(n)
        v = rng.choice(nbr[u])
        if len(nbr[u]) <= 3 or len(nbr[v]) <= 3:
            continue
        x = succ(v, u)
        y = succ(u, v)
        if x == y or y in nbr[x]:
            continue
        nbr[u].remove(v)
        nbr[v].remove(u)
        nbr[x].insert(nbr[x].index(v) + 1, y)
        nbr[y].insert(nbr[y].index(u) + 1, x)
    return nbr


def graph_from_neighbor_rotation(nbr, weights=None):
    n = len(nbr)
    eid, edges = {}, []
    for u in range(n):
        for v in nbr[u]:
            key = (min(u, v), max(u, v))
            if key not in eid:
                eid[key] = len(edges)
                w = weights[key] if weights else 1
                edges.append((key[0], key[1], w))
    rot = [[eid[(min(u, v), max(u, v))] for v in nbr[u]] for u in range(n)]
    return PlanarGraph(n, edges, rot, weights is not None)


def _weighted_copy(g, wmax, rng):
    edges = [(u, v, rng.randint(1, wmax)) for u, v, _ in g.edges]
    return PlanarGraph(g.n, edges, g.rotation, True, g.virtual)


KINDS = ("grid", "random-triangulation", "path", "cycle")


def generate(kind, params=None, seed=0):
    """Build a test graph.

    params: ``grid`` takes rows/cols, the others take n.  An optional
    ``wmax`` makes the graph weighted with integer weights in [1, wmax].
    """
    params = dict(params or {})
    for k, v in params.items():
        if not isinstance(v, (int, Fraction)) or v <= 0:
            raise InvalidParams(f"parameter {k} must be a positive number")
    rng = random.Random(seed)
    if kind == "grid":
        rows, cols = params.get("rows"), params.get("cols", params.get("rows"))
        if rows is None:
            raise InvalidParams("grid needs rows")
        edges, coords = grid(rows, cols)
        g = PlanarGraph(rows * cols, edges, _rotation_from_coords(rows * cols, edges, coords))
    elif kind in ("path", "cycle"):
        n = params.get("n")
        if n is None or (kind == "cycle" and n < 3):
            raise InvalidParams(f"{kind} needs n (cycle needs n >= 3)")
        edges = [(i, i + 1, 1) for i in range(n - 1)]
        if kind == "cycle":
            edges.append((n - 1, 0, 1))
        coords = [(math.cos(2 * math.pi * i / n), math.sin(2 * math.pi * i / n)) for i in range(n)]
        if kind == "path":
            coords = [(i, 0) for i in range(n)]
        g = PlanarGraph(n, edges, _rotation_from_coords(n, edges, coords))
    elif kind == "random-triangulation":
        n = params.get("n")
        if n is None or n < 3:
            raise InvalidParams("random-triangulation needs n >= 3")
        g = graph_from_neighbor_rotation(random_triangulation_rotation(n, rng, params.get("flips")))
    else:
        raise InvalidParams(f"unknown kind {kind!r}")
    if "wmax" in params:
        g = _weighted_copy(g, int(params["wmax"]), rng)
    return g


# --- text format ---------------------------------------------------------

_HEADER = re.compile(r"planar\s+v=(\d+)\s+e=(\d+)\s+weighted=([01])\s*$")
_ROT = re.compile(r"rot\s+(\d+):\s*(.*)$")
_EDGE = re.compile(r"edge\s+(\d+):\s*(\d+)\s+(\d+)\s+(\S+)(\s+virtual)?\s*$")


def dumps(g):
    lines = [f"planar v={g.n} e={g.m} weighted={int(g.is_weighted)}"]
    for v in range(g.n):
        lines.append(f"rot {v}: " + " ".join(map(str, g.rotation[v])))
    for e, (u, v, w) in enumerate(g.edges):
        tag = " virtual" if e in g.virtual else ""
        lines.append(f"edge {e}: {u} {v} {w}{tag}")
    return "\n".join(lines) + "\n"


def loads(text):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise GraphFormatError("empty graph file")
    m = _HEADER.match(lines[0])
    if not m:
        raise GraphFormatError(f"bad header: {lines[0]!r}")
    n, ecount, weighted = int(m[1]), int(m[2]), m[3] == "1"
    rotation = [None] * n
    edges = [None] * ecount
    virtual = set()
    for ln in lines[1:]:
        if (r := _ROT.match(ln)) is not None:
            v = int(r[1])
            if v >= n:
                raise GraphFormatError(f"vertex {v} out of range")
            rotation[v] = [int(x) for x in r[2].split()]
        elif (r := _EDGE.match(ln)) is not None:
            e = int(r[1])
            if e >= ecount:
                raise GraphFormatError(f"edge id {e} out of range")
            try:
                w = Fraction(r[4])
            except ValueError as exc:
                raise GraphFormatError(f"bad weight {r[4]!r}") from exc
            edges[e] = (int(r[2]), int(r[3]), w)
            if r[5]:
                virtual.add(e)
        else:
            raise GraphFormatError(f"unrecognized line: {ln!r}")
    if any(e is None for e in edges):
        raise GraphFormatError("missing edge lines")
    if any(r is None for r in rotation):
        raise MalformedRotation("missing rot lines")
    return PlanarGraph(n, edges, rotation, weighted, virtual)


def load(path):
    with open(path) as fh:
        return loads(fh.read())


def dump(g, path):
    with open(path, "w") as fh:
        fh.write(dumps(g))

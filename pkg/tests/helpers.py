"""Small graphs and independent oracles shared by the tests."""

import heapq
from collections import deque

from pmk.planar import PlanarGraph, generate


def bfs_all(g):
    """All-pairs hop distances by plain BFS over the edge list."""
    adj = [[] for _ in range(g.n)]
    for u, v, _ in g.edges:
        adj[u].append(v)
        adj[v].append(u)
    out = []
    for s in range(g.n):
        d = [None] * g.n
        d[s] = 0
        q = deque([s])
        while q:
            x = q.popleft()
            for y in adj[x]:
                if d[y] is None:
                    d[y] = d[x] + 1
                    q.append(y)
        out.append(d)
    return out


def dijkstra_all(g):
    adj = [[] for _ in range(g.n)]
    for u, v, w in g.edges:
        adj[u].append((v, w))
        adj[v].append((u, w))
    out = []
    for s in range(g.n):
        d = {s: 0}
        heap = [(0, s)]
        while heap:
            dx, x = heapq.heappop(heap)
            if dx > d[x]:
                continue
            for y, w in adj[x]:
                if dx + w < d.get(y, float("inf")):
                    d[y] = dx + w
                    heapq.heappush(heap, (d[y], y))
        out.append([d.get(v) for v in range(g.n)])
    return out


def oracle_diameter(g):
    rows = dijkstra_all(g)
    return max(max(r) for r in rows)


def triangle(w01=1, w12=1, w02=3):
    # rotation lists edge ids in cyclic order around each vertex
    edges = [(0, 1, w01), (1, 2, w12), (0, 2, w02)]
    rot = [[0, 2], [1, 0], [2, 1]]
    return PlanarGraph(3, edges, rot, weighted=(w01, w12, w02) != (1, 1, 1))


def path(n):
    return generate("path", {"n": n})


def cycle(n):
    return generate("cycle", {"n": n})


def grid(k, wmax=None, seed=0):
    params = {"rows": k, "cols": k}
    if wmax:
        params["wmax"] = wmax
    return generate("grid", params, seed)

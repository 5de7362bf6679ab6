"""Rooted dynamic forest with subtree add, as Euler tours kept in treaps.

Each tree is stored as its Euler tour: a vertex token for every vertex and,
for every non-root vertex v, a pair of arc tokens ``down[v]`` / ``up[v]``
bracketing the tour of v's subtree.  The subtree of v is therefore a
contiguous run of the sequence, so ``add_subtree`` is a split, a lazy tag
and a merge.  Values are exact (int/Fraction/float) or residues when a
modulus is given.
"""

from __future__ import annotations

import random

from .errors import InvalidParams


class _Node:
    __slots__ = ("pri", "left", "right", "up", "size", "val", "lazy", "vertex")

    def __init__(self, pri, vertex=-1, val=0):
        self.pri = pri
        self.left = self.right = self.up = None
        self.size = 1
        self.val = val
        self.lazy = 0
        self.vertex = vertex  # -1 for arc tokens


def _size(t):
    return t.size if t is not None else 0


class DynamicForest:
    """Cut / Join / GetValue / AddSubtree over vertices ``0..n-1``.

    ``join(v, u)`` hangs the tree rooted at v below u; ``cut(v)`` detaches v
    (with its subtree) from its parent.  Trees are never rerooted.
    """

    def __init__(self, n, values=None, mod=None, seed=0):
        rng = random.Random(seed)
        self.n = n
        self.mod = mod
        vals = list(values) if values is not None else [0] * n
        if len(vals) != n:
            raise InvalidParams("one initial value per vertex")
        self.vnode = [_Node(rng.random(), v, self._norm(vals[v])) for v in range(n)]
        self.down = [_Node(rng.random()) for _ in range(n)]
        self.upn = [_Node(rng.random()) for _ in range(n)]
        self.parent = [-1] * n
        self.ops = 0

    def _norm(self, x):
        return x % self.mod if self.mod is not None else x

    # -- treap plumbing --

    def _apply(self, t, delta):
        if t is None:
            return
        if t.vertex >= 0:
            t.val = self._norm(t.val + delta)
        t.lazy = self._norm(t.lazy + delta)

    def _push(self, t):
        if t.lazy:
            self._apply(t.left, t.lazy)
            self._apply(t.right, t.lazy)
            t.lazy = 0

    @staticmethod
    def _pull(t):
        t.size = 1 + _size(t.left) + _size(t.right)
        if t.left is not None:
            t.left.up = t
        if t.right is not None:
            t.right.up = t

    def _merge(self, a, b):
        if a is None:
            return b
        if b is None:
            return a
        if a.pri > b.pri:
            self._push(a)
            a.right = self._merge(a.right, b)
            self._pull(a)
            a.up = None
            return a
        self._push(b)
        b.left = self._merge(a, b.left)
        self._pull(b)
        b.up = None
        return b

    def _split(self, t, k):
        """First k tokens and the rest."""
        if t is None:
            return None, None
        self._push(t)
        if _size(t.left) >= k:
            a, b = self._split(t.left, k)
            t.left = b
            self._pull(t)
            t.up = None
            if a is not None:
                a.up = None
            return a, t
        a, b = self._split(t.right, k - _size(t.left) - 1)
        t.right = a
        self._pull(t)
        t.up = None
        if b is not None:
            b.up = None
        return t, b

    @staticmethod
    def _root(x):
        while x.up is not None:
            x = x.up
        return x

    @staticmethod
    def _index(x):
        i = _size(x.left)
        while x.up is not None:
            p = x.up
            if p.right is x:
                i += _size(p.left) + 1
            x = p
        return i

    def _reset(self, t):
        t.left = t.right = t.up = None
        t.size = 1
        t.lazy = 0

    # -- public operations --

    def find_root(self, v):
        while self.parent[v] >= 0:
            v = self.parent[v]
        return v

    def connected(self, u, v):
        return self._root(self.vnode[u]) is self._root(self.vnode[v])

    def get_value(self, v):
        x = self.vnode[v]
        val = x.val
        p = x.up
        while p is not None:
            val += p.lazy
            p = p.up
        return self._norm(val)

    def values(self):
        return [self.get_value(v) for v in range(self.n)]

    def cut(self, v):
        if self.parent[v] < 0:
            raise InvalidParams(f"vertex {v} has no parent to cut from")
        self.ops += 1
        root = self._root(self.vnode[v])
        i = self._index(self.down[v])
        j = self._index(self.upn[v])
        a, rest = self._split(root, i)
        mid, b = self._split(rest, j - i + 1)
        self._merge(a, b)
        _, inner = self._split(mid, 1)
        self._split(inner, _size(inner) - 1)
        self._reset(self.down[v])
        self._reset(self.upn[v])
        self.parent[v] = -1

    def join(self, v, u):
        if self.parent[v] >= 0:
            raise InvalidParams(f"vertex {v} is not a tree root")
        if self.connected(u, v):
            raise InvalidParams(f"{u} and {v} are already in one tree")
        self.ops += 1
        tour = self._root(self.vnode[v])
        root = self._root(self.vnode[u])
        a, b = self._split(root, self._index(self.vnode[u]) + 1)
        seg = self._merge(self._merge(self.down[v], tour), self.upn[v])
        self._merge(self._merge(a, seg), b)
        self.parent[v] = u

    def add_subtree(self, delta, v):
        """Add delta to v and every descendant of v."""
        self.ops += 1
        if self.parent[v] < 0:
            self._apply(self._root(self.vnode[v]), delta)
            return
        root = self._root(self.vnode[v])
        i = self._index(self.vnode[v])
        j = self._index(self.upn[v])
        a, rest = self._split(root, i)
        mid, b = self._split(rest, j - i)
        self._apply(mid, delta)
        self._merge(self._merge(a, mid), b)


class NaiveForest:
    """Parent-pointer forest with O(n) operations; the test oracle."""

    def __init__(self, n, values=None, mod=None):
        self.n = n
        self.mod = mod
        self.val = list(values) if values is not None else [0] * n
        self.parent = [-1] * n

    def _norm(self, x):
        return x % self.mod if self.mod is not None else x

    def find_root(self, v):
        while self.parent[v] >= 0:
            v = self.parent[v]
        return v

    def cut(self, v):
        if self.parent[v] < 0:
            raise InvalidParams(f"vertex {v} has no parent to cut from")
        self.parent[v] = -1

    def join(self, v, u):
        if self.parent[v] >= 0 or self.find_root(u) == v:
            raise InvalidParams("bad join")
        self.parent[v] = u

    def _in_subtree(self, x, v):
        while x >= 0:
            if x == v:
                return True
            x = self.parent[x]
        return False

    def add_subtree(self, delta, v):
        for x in range(self.n):
            if self._in_subtree(x, v):
                self.val[x] = self._norm(self.val[x] + delta)

    def get_value(self, v):
        return self._norm(self.val[v])

    def values(self):
        return [self.get_value(v) for v in range(self.n)]

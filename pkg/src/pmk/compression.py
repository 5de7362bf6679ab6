"""Exact distance-tuple compression for sources lying consecutively on a face.

Indices follow two conventions: membership pairs ``(i, delta)`` use 1-based
``i`` in ``1..l-1`` (comparing ``s_i`` with ``s_{i+1}``), while the codec's
``decode`` takes a 0-based source position.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .errors import InconsistentMembership, InvalidParams, UnknownTarget
from .planar import check_sources, distances

UNWEIGHTED_DELTAS = (-1, 0)


def compute_tuples(g, S):
    """tuple(v)[i] = d(v, s_i) for every vertex, via one search per source."""
    check_sources(g, S)
    rows = [distances(g, s) for s in S.vertices]
    return [tuple(r[v] for r in rows) for v in range(g.n)]


def membership(tup, deltas=UNWEIGHTED_DELTAS):
    return frozenset(
        (i + 1, dl)
        for i in range(len(tup) - 1)
        for dl in deltas
        if tup[i] <= tup[i + 1] + dl
    )


def membership_family(g, S, deltas=UNWEIGHTED_DELTAS, tuples=None):
    """Per-vertex membership sets and the sorted family of distinct sets."""
    tuples = compute_tuples(g, S) if tuples is None else tuples
    per_vertex = [membership(t, deltas) for t in tuples]
    family = sorted(set(per_vertex), key=lambda m: sorted(m))
    return per_vertex, family


def universe(ell, deltas=UNWEIGHTED_DELTAS):
    return [(i, dl) for i in range(1, ell) for dl in deltas]


def reconstruct_tuple(r, d_r, m, ell, deltas=UNWEIGHTED_DELTAS):
    """Rebuild a tuple from the anchor distance and the membership set.

    ``r`` is 1-based.  For each adjacent pair the difference
    d(s_i) - d(s_{i+1}) is -1 when (i, -1) is present, 0 when only (i, 0)
    is, and +1 otherwise.
    """
    if tuple(deltas) != UNWEIGHTED_DELTAS:
        raise InvalidParams("reconstruction needs the unweighted domain {-1, 0}")
    if not 1 <= r <= ell:
        raise InvalidParams(f"anchor {r} outside 1..{ell}")
    diff = {}
    for i in range(1, ell):
        lo, zero = (i, -1) in m, (i, 0) in m
        if lo and not zero:
            raise InconsistentMembership(f"(i={i}, -1) present without (i={i}, 0)")
        diff[i] = -1 if lo else 0 if zero else 1
    extra = [x for x in m if not (1 <= x[0] < ell and x[1] in deltas)]
    if extra:
        raise InconsistentMembership(f"pairs outside the universe: {sorted(extra)}")
    out = [None] * (ell + 1)
    out[r] = d_r
    for i in range(r - 1, 0, -1):
        out[i] = out[i + 1] + diff[i]
    for i in range(r, ell):
        out[i + 1] = out[i] - diff[i]
    if any(x < 0 for x in out[1:]):
        raise InconsistentMembership("reconstruction produced a negative distance")
    return tuple(out[1:])


# --- codec -------------------------------------------------------------------


class BitWriter:
    def __init__(self):
        self.acc = 0
        self.nbits = 0

    def write(self, value, width):
        if width == 0:
            return
        if value < 0 or value >= 1 << width:
            raise ValueError(f"{value} does not fit in {width} bits")
        self.acc = (self.acc << width) | value
        self.nbits += width

    def getvalue(self):
        pad = (-self.nbits) % 8
        return (self.acc << pad).to_bytes((self.nbits + pad) // 8, "big")


class BitReader:
    def __init__(self, data):
        self.acc = int.from_bytes(data, "big")
        self.total = len(data) * 8
        self.pos = 0

    def read(self, width):
        if width == 0:
            return 0
        if self.pos + width > self.total:
            raise ValueError("truncated stream")
        shift = self.total - self.pos - width
        self.pos += width
        return (self.acc >> shift) & ((1 << width) - 1)


MAGIC = b"PMKC"


def _zigzag(x):
    return 2 * x if x >= 0 else -2 * x - 1


def _unzigzag(z):
    return z // 2 if z % 2 == 0 else -(z + 1) // 2


@dataclass
class TupleTable:
    table: list  # lexicographically sorted distinct tuples
    index_of: dict  # target vertex -> row
    ell: int
    D: int
    n: int

    @property
    def rows(self):
        return len(self.table)

    def value_bits(self):
        return max(1, int(self.D).bit_length())

    def diff_bits(self):
        z = max((_zigzag(b - a) for row in self.table for a, b in zip(row, row[1:])), default=0)
        return max(1, z.bit_length())

    def index_bits(self):
        return (self.rows - 1).bit_length()

    def to_bytes(self):
        w = BitWriter()
        targets = sorted(self.index_of)
        all_targets = targets == list(range(self.n))
        for x in (self.ell, self.rows, self.D, self.n, len(targets)):
            w.write(int(x), 32)
        w.write(1 if all_targets else 0, 8)
        vb, db = self.value_bits(), self.diff_bits()
        w.write(db, 8)
        for row in self.table:
            w.write(row[0], vb)
            for a, b in zip(row, row[1:]):
                w.write(_zigzag(b - a), db)
        if not all_targets:
            tb = max(1, (self.n - 1).bit_length())
            for t in targets:
                w.write(t, tb)
        ib = self.index_bits()
        for t in targets:
            w.write(self.index_of[t], ib)
        return MAGIC + w.getvalue()

    @classmethod
    def from_bytes(cls, data):
        if data[:4] != MAGIC:
            raise ValueError("not a tuple table")
        r = BitReader(data[4:])
        ell, rows, D, n, tcount = (r.read(32) for _ in range(5))
        all_targets = r.read(8) == 1
        vb = max(1, D.bit_length())
        db = r.read(8)
        table = []
        for _ in range(rows):
            row = [r.read(vb)]
            for _ in range(ell - 1):
                row.append(row[-1] + _unzigzag(r.read(db)))
            table.append(tuple(row))
        if all_targets:
            targets = list(range(n))
        else:
            tb = max(1, (n - 1).bit_length())
            targets = [r.read(tb) for _ in range(tcount)]
        ib = (rows - 1).bit_length()
        index_of = {t: r.read(ib) for t in targets}
        return cls(table, index_of, ell, D, n)

    def size_bits(self):
        return 8 * len(self.to_bytes())


def encode(g, S, T=None, tuples=None):
    """Deduplicate the tuples of targets T into a sorted table.

    Rows are delta coded; with face-consecutive unweighted sources every
    difference is in {-1, 0, 1} and costs two bits.
    """
    tuples = compute_tuples(g, S) if tuples is None else tuples
    T = range(g.n) if T is None else T
    T = sorted(set(T))
    for t in T:
        if not 0 <= t < g.n:
            raise UnknownTarget(f"target {t} out of range")
    ell = len(S.vertices)
    for t in T:
        tup = tuples[t]
        if any(x == float("inf") or x != int(x) for x in tup):
            raise InvalidParams("codec needs finite integer distances")
    table = sorted({tuples[t] for t in T})
    row = {tup: i for i, tup in enumerate(table)}
    D = max((max(tup) for tup in table), default=0)
    return TupleTable(table, {t: row[tuples[t]] for t in T}, ell, int(D), g.n)


def decode(tab, s_index, t):
    if t not in tab.index_of:
        raise UnknownTarget(f"vertex {t} was not encoded")
    if not 0 <= s_index < tab.ell:
        raise InvalidParams(f"source index {s_index} outside 0..{tab.ell - 1}")
    return tab.table[tab.index_of[t]][s_index]


# --- VC dimension ----------------------------------------------------------


def _masks(family, universe):
    bit = {x: 1 << i for i, x in enumerate(universe)}
    out = set()
    for f in family:
        m = 0
        for x in f:
            if x in bit:
                m |= bit[x]
        out.add(m)
    return out


def shattered_subsets(family, universe, k):
    """All k-subsets of the universe shattered by the family (brute force)."""
    masks = _masks(family, universe)
    found = []
    for combo in combinations(range(len(universe)), k):
        sel = 0
        for i in combo:
            sel |= 1 << i
        if len({m & sel for m in masks}) == 1 << k:
            found.append(tuple(universe[i] for i in combo))
    return found


def vc_dimension(family, universe, cap=4):
    """Largest shattered subset size, probing sizes up to cap + 1.

    A return value of cap + 1 means "more than cap".  Shattered sets are
    grown level by level, since subsets of shattered sets are shattered.
    """
    masks = _masks(family, universe)
    if not masks:
        return 0
    level = [()]
    best = 0
    for k in range(1, cap + 2):
        nxt = []
        for base in level:
            start = base[-1] + 1 if base else 0
            bsel = 0
            for i in base:
                bsel |= 1 << i
            for j in range(start, len(universe)):
                sel = bsel | (1 << j)
                if len({m & sel for m in masks}) == 1 << k:
                    nxt.append(base + (j,))
        if not nxt:
            break
        best = k
        level = nxt
    return best

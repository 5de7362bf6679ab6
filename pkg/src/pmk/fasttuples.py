"""Near-linear tuple computation on top of a multiple-source shortest path
operation stream.

The driver walks the face sources in order and turns the shortest path tree
of one source into the next with Cut / Join / AddSubtree operations on a
primal forest whose values are distances.  A shadow forest replays the same
operations with rescaled deltas so that, at the end, it holds a Rabin-Karp
hash of every distance tuple (unweighted case) or a random projection of it
(weighted case).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .compression import TupleTable
from .coreset import CoreSet, source_gap
from .dynforest import DynamicForest
from .errors import (
    Disconnected,
    DriverViolation,
    GraphFormatError,
    HashCollisionDetected,
    InvalidParams,
    NonpositiveParam,
    RetriesExhausted,
    SourceGapExceeded,
    UnknownTarget,
)
from .planar import INF, check_sources, distances, parents_from_distances

# --- primes and hashing ----------------------------------------------------

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(x):
    """Deterministic Miller-Rabin (exact below 3.3e24)."""
    if x < 2:
        return False
    for q in _MR_BASES:
        if x % q == 0:
            return x == q
    d, s = x - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        y = pow(a, d, x)
        if y in (1, x - 1):
            continue
        for _ in range(s - 1):
            y = y * y % x
            if y == x - 1:
                break
        else:
            return False
    return True


def next_prime(x):
    """Smallest prime strictly greater than x."""
    c = x + 1
    while not is_prime(c):
        c += 1
    return c


@dataclass(frozen=True)
class HashParams:
    b: int
    p: int
    ell: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise InvalidParams(f"modulus {self.p} is not prime")
        if not 0 <= self.b < self.p:
            raise InvalidParams("base must lie in 0..p-1")
        if self.ell < 1:
            raise InvalidParams("need at least one source")


def hash_params(n, ell, seed=0, c=4, b=None, p=None):
    """p = smallest prime above n^c, b uniform in 0..p-1 unless given."""
    p = next_prime(max(n, 2) ** c) if p is None else p
    if b is None:
        b = random.Random(seed).randrange(p)
    return HashParams(b, p, ell)


def tuple_hash(d, hp):
    """sum_{i=1..l} d_i b^i mod p."""
    acc, power = 0, 1
    for x in d:
        power = power * hp.b % hp.p
        acc = (acc + int(x) * power) % hp.p
    return acc


def partial_hash(d, hp, j):
    """Hash with every entry after position j (1-based) replaced by d_j."""
    return tuple_hash(tuple(d[:j]) + (d[j - 1],) * (len(d) - j), hp)


def suffix_powers(hp):
    """suf[j] = sum_{i=j..l} b^i mod p for j = 1..l (index 0 unused)."""
    pw = [1] * (hp.ell + 2)
    for i in range(1, hp.ell + 1):
        pw[i] = pw[i - 1] * hp.b % hp.p
    suf = [0] * (hp.ell + 2)
    for i in range(hp.ell, 0, -1):
        suf[i] = (suf[i + 1] + pw[i]) % hp.p
    return suf


def mirror_delta(delta, j, hp, suf=None):
    """Shadow increment for a primal AddSubtree(delta) while on source j."""
    if not 1 <= j <= hp.ell:
        raise InvalidParams(f"source position {j} outside 1..{hp.ell}")
    suf = suffix_powers(hp) if suf is None else suf
    return int(delta) * suf[j] % hp.p


# --- the operation stream --------------------------------------------------


@dataclass(frozen=True)
class Op:
    j: int  # 1-based source position the op is issued under
    kind: str  # cut | join | add | advance
    a: object = None
    b: object = None


@dataclass
class OpStream:
    n: int
    ell: int
    ops: list = field(default_factory=list)

    def counts(self):
        out = {"cut": 0, "join": 0, "add": 0, "advance": 0}
        for op in self.ops:
            out[op.kind] += 1
        return out


def _tree(g, s):
    dist = distances(g, s)
    if any(x == INF for x in dist):
        raise Disconnected("graph is not connected")
    return dist, parents_from_distances(g, dist, s)


def mssp_opstream(g, S):
    """Reference driver: shortest path trees of consecutive sources.

    From all singletons, tree 1 is built with joins and one AddSubtree per
    edge weight.  Between sources, every vertex whose parent changes is cut,
    then rejoined to its new parent; along unchanged tree edges the change
    in distance is constant, so one AddSubtree per moved vertex (plus the
    root) carries values from d(s_j, .) to d(s_{j+1}, .).
    """
    check_sources(g, S)
    srcs = S.vertices
    st = OpStream(g.n, len(srcs))
    dist, parent = _tree(g, srcs[0])
    order = sorted(range(g.n), key=lambda v: (dist[v], v))
    for v in order:
        if parent[v] >= 0:
            st.ops.append(Op(1, "join", v, parent[v]))
    for v in order:
        if parent[v] >= 0:
            st.ops.append(Op(1, "add", dist[v] - dist[parent[v]], v))
    for j in range(2, len(srcs) + 1):
        st.ops.append(Op(j, "advance"))
        nd, npar = _tree(g, srcs[j - 1])
        moved = [v for v in range(g.n) if npar[v] != parent[v]]
        for v in moved:
            if parent[v] >= 0:
                st.ops.append(Op(j, "cut", v))
        for v in sorted(moved, key=lambda x: (nd[x], x)):
            if npar[v] >= 0:
                st.ops.append(Op(j, "join", v, npar[v]))
        root = srcs[j - 1]
        if nd[root] - dist[root]:
            st.ops.append(Op(j, "add", nd[root] - dist[root], root))
        for v in moved:
            if v != root:
                c = (nd[v] - dist[v]) - (nd[npar[v]] - dist[npar[v]])
                if c:
                    st.ops.append(Op(j, "add", c, v))
        dist, parent = nd, npar
    return st


def dump_opstream(st):
    lines = [f"opstream v1 n={st.n} l={st.ell}"]
    for op in st.ops:
        if op.kind == "advance":
            lines.append(f"{op.j} advance")
        elif op.kind == "cut":
            lines.append(f"{op.j} cut {op.a}")
        elif op.kind == "join":
            lines.append(f"{op.j} join {op.a} {op.b}")
        else:
            lines.append(f"{op.j} add {op.a} {op.b}")
    return "\n".join(lines) + "\n"


def load_opstream(text):
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows or rows[0][:2] != ["opstream", "v1"]:
        raise GraphFormatError("missing 'opstream v1' header")
    kv = dict(x.split("=", 1) for x in rows[0][2:])
    st = OpStream(int(kv["n"]), int(kv["l"]))
    for r in rows[1:]:
        j, kind = int(r[0]), r[1]
        if kind == "advance":
            st.ops.append(Op(j, kind))
        elif kind == "cut":
            st.ops.append(Op(j, kind, int(r[2])))
        elif kind == "join":
            st.ops.append(Op(j, kind, int(r[2]), int(r[3])))
        elif kind == "add":
            st.ops.append(Op(j, kind, _num(r[2]), int(r[3])))
        else:
            raise GraphFormatError(f"unknown op {kind!r}")
    return st


def _num(s):
    x = Fraction(s)
    return int(x) if x.denominator == 1 else x


def _replay(st, on_op=None):
    """Replay the stream on a primal forest; on_op(op, forest) after each op."""
    f = DynamicForest(st.n)
    for op in st.ops:
        if op.kind == "cut":
            f.cut(op.a)
        elif op.kind == "join":
            f.join(op.a, op.b)
        elif op.kind == "add":
            f.add_subtree(op.a, op.b)
        if on_op is not None:
            on_op(op, f)
    return f


# --- hashed MSSP -------------------------------------------------------------


def run_hashed_mssp(g, S, hp, stream=None, check=False, stats=None):
    """Per-vertex hash of the distance tuple, maintained in a shadow forest.

    With ``check`` the fine-grained shadow invariant is verified after every
    op against brute-force tuples, and primal values are checked against
    d(s_j, .) whenever a source finishes; failures raise DriverViolation.
    """
    st = mssp_opstream(g, S) if stream is None else stream
    ell = len(S.vertices)
    if hp.ell != ell or st.ell != ell or st.n != g.n:
        raise InvalidParams("hash parameters, stream and sources disagree")
    suf = suffix_powers(hp)
    pw = [pow(hp.b, i, hp.p) for i in range(ell + 1)]
    shadow = DynamicForest(g.n, mod=hp.p)
    rows = [distances(g, s) for s in S.vertices] if check else None
    state = {"j": 1}

    def finished(j, f):
        for v in range(g.n):
            if f.get_value(v) != rows[j - 1][v]:
                raise DriverViolation(f"primal value of {v} is not d(s_{j}, {v}) when source {j} ends")

    def step(op, f):
        j = op.j
        if op.kind == "cut":
            shadow.cut(op.a)
        elif op.kind == "join":
            shadow.join(op.a, op.b)
        elif op.kind == "add":
            if not isinstance(op.a, int):
                raise InvalidParams("hashing needs integer distances")
            shadow.add_subtree(mirror_delta(op.a, j, hp, suf), op.b)
        else:
            if check:
                finished(j - 1, f)
            state["j"] = j
        if check:
            for v in range(g.n):
                want = (sum(rows[i - 1][v] * pw[i] for i in range(1, j)) + f.get_value(v) * suf[j]) % hp.p
                if shadow.get_value(v) != want:
                    raise DriverViolation(f"shadow invariant broken at vertex {v} after {op}")

    f = _replay(st, step)
    if check:
        finished(ell, f)
    if stats is not None:
        stats["primal_ops"] = f.ops
        stats["shadow_ops"] = shadow.ops
        stats.update(st.counts())
    return shadow.values()


def _materialize(st, vertices):
    """Tuples of the given vertices via GetValue after each source finishes."""
    cols = {v: [] for v in vertices}

    def step(op, f):
        if op.kind == "advance":
            for v in cols:
                cols[v].append(f.get_value(v))

    f = _replay(st, step)
    for v in cols:
        cols[v].append(f.get_value(v))
    return {v: tuple(c) for v, c in cols.items()}


def select_and_materialize(hashes, g, S, T=None, stream=None, stats=None):
    """One exact tuple per hash group, as a TupleTable.

    The smallest and largest vertex of each group are both materialized;
    if their tuples differ the hash collided and HashCollisionDetected is
    raised.
    """
    st = mssp_opstream(g, S) if stream is None else stream
    T = sorted(set(range(g.n) if T is None else T))
    for t in T:
        if not 0 <= t < g.n:
            raise UnknownTarget(f"target {t} out of range")
    groups = {}
    for t in T:
        groups.setdefault(hashes[t], []).append(t)
    picks = sorted({x for grp in groups.values() for x in (grp[0], grp[-1])})
    tup = _materialize(st, picks)
    for h, grp in groups.items():
        if tup[grp[0]] != tup[grp[-1]]:
            raise HashCollisionDetected(f"vertices {grp[0]} and {grp[-1]} share hash {h} with different tuples")
    table = sorted({tup[grp[0]] for grp in groups.values()})
    row = {x: i for i, x in enumerate(table)}
    index_of = {t: row[tup[groups[hashes[t]][0]]] for t in T}
    D = max((max(x) for x in table), default=0)
    if stats is not None:
        stats["groups"] = len(groups)
        stats["get_value_calls"] = len(picks) * len(S.vertices)
        stats["stream_ops"] = len(st.ops)
    return TupleTable(table, index_of, len(S.vertices), int(D), g.n)


def fast_encode(g, S, T=None, seed=0, b=None, max_attempts=8, stats=None):
    """Hash, group, materialize; resample the base after a detected collision."""
    st = mssp_opstream(g, S)
    rng = random.Random(seed)
    stats = {} if stats is None else stats
    stats["collisions"] = 0
    for attempt in range(max_attempts):
        hp = hash_params(g.n, len(S.vertices), b=b if attempt == 0 and b is not None else None,
                         seed=rng.randrange(2**63))
        hashes = run_hashed_mssp(g, S, hp, st, stats=stats)
        try:
            tab = select_and_materialize(hashes, g, S, T, st, stats)
        except HashCollisionDetected:
            stats["collisions"] += 1
            continue
        stats["b"] = hp.b
        stats["p"] = hp.p
        stats["attempts"] = attempt + 1
        return tab
    raise RetriesExhausted(f"hash collisions in all {max_attempts} attempts")


def planted_base(d1, d2, p):
    """A base under which two distinct tuples of length 2 hash equally.

    Solves (a1) b + (a2) b^2 = 0 mod p for the nonzero root.
    """
    a1, a2 = d1[0] - d2[0], d1[1] - d2[1]
    if a2 % p == 0:
        raise InvalidParams("needs tuples differing in the second entry")
    return (-a1) * pow(a2, -1, p) % p


# --- weighted: projection and shifted grid ---------------------------------


def projection_dim(n):
    return max(1, math.ceil(24 * math.log(max(n, 2))))


def projection(ell, r, rng):
    """r x ell matrix with i.i.d. Gaussian(0, 1/r) entries."""
    sd = 1 / math.sqrt(r)
    return [[rng.gauss(0.0, sd) for _ in range(ell)] for _ in range(r)]


def project(mat, vec):
    return [sum(a * float(x) for a, x in zip(row, vec)) for row in mat]


def run_projected_mssp(g, S, mat, stream=None):
    """Projected tuples via r scalar shadow forests."""
    st = mssp_opstream(g, S) if stream is None else stream
    ell = len(S.vertices)
    r = len(mat)
    # suffix[j][k] = sum_{i>=j} mat[k][i-1]
    suffix = [[0.0] * r for _ in range(ell + 2)]
    for j in range(ell, 0, -1):
        suffix[j] = [suffix[j + 1][k] + mat[k][j - 1] for k in range(r)]
    shadows = [DynamicForest(g.n, values=[0.0] * g.n) for _ in range(r)]

    def step(op, f):
        if op.kind == "cut":
            for sh in shadows:
                sh.cut(op.a)
        elif op.kind == "join":
            for sh in shadows:
                sh.join(op.a, op.b)
        elif op.kind == "add":
            dlt = float(op.a)
            for k, sh in enumerate(shadows):
                sh.add_subtree(dlt * suffix[op.j][k], op.b)

    _replay(st, step)
    return [[shadows[k].get_value(v) for k in range(r)] for v in range(g.n)]


def weighted_fast_coreset(g, S, delta, seed=0, d=None, budget=None, attempts=None):
    """delta-additive core-set by projection and a randomly shifted grid.

    delta' = delta / (2 sqrt(l r) log n), cell side Z = delta' sqrt(l) log n.
    Each attempt draws a fresh shift; the accepted attempt is the first whose
    number of non-empty cells is within ``budget`` (default: twice the mean
    over all attempts).  RetriesExhausted if none qualifies.
    """
    if delta <= 0:
        raise NonpositiveParam("delta must be positive")
    check_sources(g, S)
    rows = [distances(g, s) for s in S.vertices]
    gap = source_gap(g, S, rows)
    if d is not None and gap > d:
        raise SourceGapExceeded(f"consecutive sources are {gap} apart, above d={d}")
    n, ell = g.n, len(S.vertices)
    logn = max(1.0, math.log2(max(n, 2)))
    r = projection_dim(n)
    rng = random.Random(seed)
    mat = projection(ell, r, rng)
    st = mssp_opstream(g, S)
    proj = run_projected_mssp(g, S, mat, st)
    dp = float(delta) / (2 * math.sqrt(ell * r) * logn)
    Z = dp * math.sqrt(ell) * logn
    attempts = math.ceil(3 * logn) if attempts is None else attempts
    tries = []
    for _ in range(attempts):
        z = [rng.uniform(0, Z) for _ in range(r)]
        keys = [tuple(math.floor((x + zk) / Z) for x, zk in zip(proj[v], z)) for v in range(n)]
        cells = {}
        for v in range(n):
            cells.setdefault(keys[v], v)
        tries.append((keys, cells))
        if budget is not None and len(cells) <= budget:
            break
    counts = [len(c) for _, c in tries]
    limit = budget if budget is not None else 2 * sum(counts) / len(counts)
    pick = next((i for i, c in enumerate(counts) if c <= limit), None)
    if pick is None:
        raise RetriesExhausted(f"no attempt within {limit} cells: {counts}")
    keys, cells = tries[pick]
    witness = [cells[keys[v]] for v in range(n)]
    members = sorted(cells.values())
    member_tuples = _materialize(st, members)
    bucket_of = {rep: key for key, rep in cells.items()}
    cs = CoreSet(members, witness, Fraction(delta), bucket_of, len(cells),
                 Fraction(d if d is not None else gap))
    cs.extra.update({"r": r, "Z": Z, "delta_p": dp, "attempts": len(tries), "picked": pick,
                     "cell_counts": counts, "member_tuples": member_tuples, "gap": gap})
    return cs

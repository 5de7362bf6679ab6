"""Acceptance run: one test per criterion, each printing a single
``criterion N: PASS|FAIL ...`` line with the measured quantities."""

import functools
import json
import math
import random
import time
from fractions import Fraction

import pytest

from helpers import bfs_all, dijkstra_all, oracle_diameter
from pmk import compression as C
from pmk import coreset as CS
from pmk import distributed as dist
from pmk import fasttuples as F
from pmk.bdd import build_bdd, validate_bdd
from pmk.cli import main
from pmk.congest import SimNetwork
from pmk.corpus import grid_family, random_graph, random_instance, reweight
from pmk.planar import dump, face_sources, generate, sssp_tree

pytestmark = pytest.mark.acceptance


def report(capsys, n, ok, msg):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {msg}")
    assert ok, msg


@functools.lru_cache(maxsize=None)
def corpus():
    return [random_instance(seed, nmax=256, smax=16) for seed in range(200)]


def test_criterion_1_compression_exact(capsys):
    t0 = time.perf_counter()
    bad = pairs = 0
    for g, S in corpus():
        tab = C.encode(g, S)
        for i, s in enumerate(S.vertices):
            ref = bfs_all_from(g, s)
            for t in range(g.n):
                pairs += 1
                bad += C.decode(tab, i, t) != ref[t]
    secs = time.perf_counter() - t0
    report(capsys, 1, bad == 0 and secs < 120,
           f"instances={len(corpus())} pairs={pairs} mismatches={bad} seconds={secs:.1f}")


def bfs_all_from(g, s):
    adj = [[] for _ in range(g.n)]
    for u, v, _ in g.edges:
        adj[u].append(v)
        adj[v].append(u)
    d = [None] * g.n
    d[s] = 0
    frontier = [s]
    while frontier:
        nxt = []
        for x in frontier:
            for y in adj[x]:
                if d[y] is None:
                    d[y] = d[x] + 1
                    nxt.append(y)
        frontier = nxt
    return d


def test_criterion_2_tuple_count(capsys):
    worst = 0.0
    surj_bad = 0
    for g, S in corpus():
        D = max(max(r) for r in bfs_all(g))
        ell = len(S.vertices)
        tuples = C.compute_tuples(g, S)
        worst = max(worst, len(set(tuples)) / (ell ** 3 * (D + 1)))
        per, _ = C.membership_family(g, S, tuples=tuples)
        for v in range(g.n):
            for r in range(1, ell + 1):
                surj_bad += C.reconstruct_tuple(r, tuples[v][r - 1], per[v], ell) != tuples[v]
    report(capsys, 2, worst <= 4 and surj_bad == 0,
           f"c={worst:.4f} (need <= 4) surjection_failures={surj_bad}")


def _weighted_universe(ell, d):
    # largest grid with (ell-1) * |M| <= 24
    K = ((24 // (ell - 1)) - 1) // 2
    delta_p = Fraction(ell * d, K)
    return CS.grid(ell, d, delta_p).values()


def test_criterion_3_vc_dimension(capsys):
    checked = found = 0
    for g, S in corpus():
        ell = len(S.vertices)
        if ell > 12:
            continue
        _, fam = C.membership_family(g, S)
        checked += 1
        found += bool(C.shattered_subsets(fam, C.universe(ell), 4))
    wchecked = 0
    for seed in range(60):
        g, S = random_instance(1000 + seed, nmax=80, smax=5, weighted=True, wmax=9)
        ell = len(S.vertices)
        if ell < 2:
            continue
        tuples = C.compute_tuples(g, S)
        d = max(max(t) for t in tuples) or 1
        M = _weighted_universe(ell, d)
        uni = C.universe(ell, M)
        assert len(uni) <= 24
        fam = sorted({C.membership(t, M) for t in tuples}, key=sorted)
        wchecked += 1
        found += bool(C.shattered_subsets(fam, uni, 4))
    report(capsys, 3, found == 0,
           f"unweighted={checked} weighted={wchecked} counterexamples={found}")


def test_criterion_4_hashed_mssp(capsys):
    mism = inst = 0
    for seed in range(60):
        g, S = random_instance(2000 + seed, nmax=128, smax=12)
        hp = F.hash_params(g.n, len(S.vertices), seed=seed)
        got = F.run_hashed_mssp(g, S, hp, check=True)
        mism += got != [F.tuple_hash(t, hp) for t in C.compute_tuples(g, S)]
        inst += 1

    g = generate("grid", {"rows": 6, "cols": 6})
    S = face_sources(g, 0, 2)
    tuples = C.compute_tuples(g, S)
    p = F.hash_params(g.n, 2).p
    t1, t2 = next((a, b) for a in tuples for b in tuples if a[1] != b[1] and a != b)
    base = F.planted_base(t1, t2, p)
    stats = {}
    recovered = F.fast_encode(g, S, b=base, stats=stats).to_bytes() == C.encode(g, S).to_bytes()
    detected = stats.get("collisions", 0) >= 1

    g, S = random_instance(77, nmax=128, smax=8)
    ell = len(S.vertices)
    distinct = sorted(set(C.compute_tuples(g, S)))
    small_p = 101
    rng = random.Random(4)
    hits = trials = 0
    for _ in range(100_000):
        a, b = rng.sample(distinct, 2)
        hp = F.HashParams(rng.randrange(small_p), small_p, ell)
        hits += F.tuple_hash(a, hp) == F.tuple_hash(b, hp)
        trials += 1
    freq = hits / trials
    ok = mism == 0 and detected and recovered and freq <= 2 * ell / small_p
    report(capsys, 4, ok,
           f"instances={inst} mismatches={mism} planted_detected={detected} recovered={recovered} "
           f"collision_freq={freq:.5f} bound={2 * ell / small_p:.5f} (p={small_p}, ell={ell})")


def test_criterion_5_additive_coreset(capsys):
    worst_err = 0
    worst_c = worst_members_c = 0.0
    fast_bad = slow_bad = 0
    for seed in range(100):
        g, S = random_instance(3000 + seed, nmax=90, smax=6, weighted=True, wmax=9)
        delta = [1, 2, 5, Fraction(1, 2)][seed % 4]
        cs = CS.additive_coreset(g, S, delta)
        tuples = cs.extra["tuples"]
        err = CS.max_witness_error(tuples, cs)
        slow_bad += err > delta
        worst_err = max(worst_err, err / delta)
        d = max(cs.extra["gap"], cs.extra["ecc"])
        bound = CS.size_bound(len(S.vertices), d, delta)
        worst_c = max(worst_c, float(cs.extra["buckets"] / bound))
        worst_members_c = max(worst_members_c, float(len(cs.members) / bound))
        fast = F.weighted_fast_coreset(g, S, delta, seed=seed)
        fast_bad += CS.max_witness_error(tuples, fast) > delta
    ok = slow_bad == 0 and fast_bad == 0 and worst_c <= 3
    report(capsys, 5, ok,
           f"slow_failures={slow_bad} fast_failures={fast_bad} max_err/delta={float(worst_err):.3f} "
           f"buckets_c={worst_c:.3f} members_c={worst_members_c:.3f} (need <= 3)")


def test_criterion_6_multiplicative(capsys):
    eps_list = [Fraction(1), Fraction(1, 2), Fraction(1, 4)]
    good = total = under = 0
    for inst in range(3):
        g, S = random_instance(4000 + inst, nmax=128, smax=6, weighted=True, wmax=12)
        ref = dijkstra_all(g)
        for seed in range(32):
            layers = CS.ldd_layers(g, S, seed)
            for eps in eps_list:
                mc = CS.multiplicative_compress(g, S, eps, seed, layers=layers)
                for i, s in enumerate(S.vertices):
                    for t in range(g.n):
                        est = CS.multiplicative_decode(mc, i, t)
                        total += 1
                        under += est < ref[s][t]
                        good += ref[s][t] <= est <= (1 + eps) * ref[s][t]
    frac = good / total
    report(capsys, 6, frac >= 0.99, f"samples={total} in_bound={frac:.5f} underestimates={under}")


def test_criterion_7_bdd_validator(capsys):
    failures = []
    mult = 0
    count = 0
    for seed in range(40):
        rng = random.Random(5000 + seed)
        g = random_graph(rng, 200)
        weighted = seed % 2 == 1
        if weighted:
            g = reweight(g, rng, 12)
            bdd = build_bdd(g, sssp_tree(g, 0), mode="sssp")
        else:
            bdd = build_bdd(g)
        rep = validate_bdd(bdd)
        count += 1
        mult = max(mult, rep.results["8'_edge_multiplicity"][1]["owned"])
        if not rep.ok:
            failures.append((seed, rep.failures()))
    report(capsys, 7, not failures,
           f"graphs={count} failures={failures} max_owned_multiplicity={mult}")


def test_criterion_8_distributed(capsys):
    exact = 0
    for seed in range(100):
        g = random_graph(random.Random(6000 + seed), 200)
        net = SimNetwork(g)
        bdd = build_bdd(g)
        run = dist.unweighted_diameter(net, bdd, dist.unweighted_labels(net, bdd), seed=seed)
        exact += run.value == oracle_diameter(g)

    wbad = 0
    for seed in range(10):
        rng = random.Random(7000 + seed)
        g = reweight(random_graph(rng, 100), rng, 20)
        ref = dijkstra_all(g)
        net = SimNetwork(g)
        labels = dist.weighted_labels(net, build_bdd(g))
        wbad += any(dist.decode(labels[u], labels[v]) != ref[u][v]
                    for u in range(g.n) for v in range(g.n))
        src = rng.randrange(g.n)
        wbad += dist.sssp(net, labels, src).dist != ref[src]

    sandwich = 0
    half = Fraction(1, 2)
    for seed in range(100):
        rng = random.Random(8000 + seed)
        g = reweight(random_graph(rng, 100), rng, 12)
        est = dist.approx_weighted_diameter(SimNetwork(g), half, seed=seed).estimate
        true = oracle_diameter(g)
        sandwich += true <= est <= (1 + half) * true
    ok = exact == 100 and wbad == 0 and sandwich >= 95
    report(capsys, 8, ok,
           f"unweighted_exact={exact}/100 weighted_failures={wbad} approx_sandwich={sandwich}/100")


def _slope(xs, ys):
    lx = [math.log(x) for x in xs]
    ly = [math.log(y) for y in ys]
    mx, my = sum(lx) / len(lx), sum(ly) / len(ly)
    return sum((a - mx) * (b - my) for a, b in zip(lx, ly)) / sum((a - mx) ** 2 for a in lx)


def test_criterion_9_round_scaling(capsys):
    ks = [8, 12, 16, 20]
    Ds, un, wl = [], [], []
    for k, g in grid_family(ks):
        net = SimNetwork(g)
        bdd = build_bdd(g)
        dist.unweighted_diameter(net, bdd, dist.unweighted_labels(net, bdd))
        Ds.append(2 * (k - 1))
        un.append((net.ledger.total, g.n))
    for k, g in grid_family(ks, weighted=True):
        net = SimNetwork(g)
        dist.weighted_labels(net, build_bdd(g))
        wl.append((net.ledger.total, g.n))
    # polylog factors are divided out before fitting the exponent in D
    norm = lambda rows: [r / math.log2(n) ** 3 for r, n in rows]
    raw_u, raw_w = _slope(Ds, [r for r, _ in un]), _slope(Ds, [r for r, _ in wl])
    fit_u, fit_w = _slope(Ds, norm(un)), _slope(Ds, norm(wl))
    report(capsys, 9, fit_u <= 5 and fit_w <= 3,
           f"D={Ds} unweighted_rounds={[r for r, _ in un]} label_rounds={[r for r, _ in wl]} "
           f"exponent_unweighted={fit_u:.2f} (raw {raw_u:.2f}, need <= 5) "
           f"exponent_labels={fit_w:.2f} (raw {raw_w:.2f}, need <= 3)")


def _run(capsys, argv):
    code = main(argv)
    return code, capsys.readouterr().out


def test_criterion_10_determinism(capsys, tmp_path):
    g = generate("random-triangulation", {"n": 60}, seed=11)
    w = generate("random-triangulation", {"n": 60, "wmax": 9}, seed=12)
    dump(g, tmp_path / "g.txt")
    dump(w, tmp_path / "w.txt")
    gp, wp = str(tmp_path / "g.txt"), str(tmp_path / "w.txt")
    commands = [
        ["gen", "random-triangulation", "--n", "50"],
        ["validate", gp],
        ["sep", gp], ["bdd", gp, "--validate"], ["bdd", wp, "--tree", "sssp:0"],
        ["compress", gp, "--check"], ["fast-compress", gp, "--check"],
        ["coreset", wp, "--delta", "2"], ["coreset", wp, "--delta", "2", "--fast"],
        ["mcompress", wp, "--eps", "1/2"],
        ["diameter", gp], ["diameter", wp, "--eps", "1/2"],
        ["sim", "diameter", gp, "--transcript", "T"],
        ["sim", "diameter", wp, "--transcript", "T"],
        ["sim", "labels", wp, "--transcript", "T"],
        ["sim", "sssp", wp, "--source", "3", "--transcript", "T", "--ledger", "L"],
    ]
    differing = []
    for cmd in commands:
        outs = []
        for rep in range(2):
            argv = ["--seed", "5", "--json"] + [
                str(tmp_path / f"{a}{rep}") if a in ("T", "L") else a for a in cmd]
            code, out = _run(capsys, argv)
            files = tuple((tmp_path / f"{a}{rep}").read_bytes() for a in ("T", "L") if a in cmd)
            outs.append((code, out, files))
        if outs[0] != outs[1]:
            differing.append(" ".join(cmd))
    spec = {"command": "sim-diameter", "graphs": [{"kind": "random-triangulation", "params": {"n": 40}}],
            "repetitions": 2, "seed": 3,
            "out_json": str(tmp_path / "s.json"), "out_csv": str(tmp_path / "s.csv")}
    (tmp_path / "spec.json").write_text(json.dumps(spec))
    suites = []
    for rep in range(2):
        _run(capsys, ["suite", str(tmp_path / "spec.json")])
        suites.append(((tmp_path / "s.json").read_bytes(), (tmp_path / "s.csv").read_bytes()))
    if suites[0] != suites[1]:
        differing.append("suite")
    report(capsys, 10, not differing,
           f"commands={len(commands)} + suite, differing={differing}")

"""Command line entry point and the experiment-suite runner.

    pmk [--seed N] [--json] [--quiet] <command> ...

Exit codes: 0 ok, 2 input error, 3 property violation detected.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import compression, coreset, diameter, distributed, fasttuples
from .bdd import build_bdd, dumps_bdd, validate_bdd
from .congest import SimNetwork
from .corpus import largest_face
from .errors import InvalidParams, IoError, PmkError, PropertyViolation, SpecError
from .planar import (DistOracle, bfs_tree, dumps, face_sources, generate, load, sssp_tree,
                     validate_embedding)
from .separator import biconnect_augment, cycle_separator, is_biconnected


def _q(text):
    """Exact rational from '1/2', '0.25' or '3'."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, float) and x == float("inf"):
        return "inf"
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def dump_json(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _read_graph(path):
    try:
        return load(path)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror}") from exc


def _sources(g, face=None, k=None, start=0):
    f = largest_face(g) if face is None else face
    return face_sources(g, f, k, start)


def _source_arg(g, args):
    """--sources face:<id>[:k] wins over --face/--k."""
    if args.sources:
        parts = args.sources.split(":")
        if parts[0] != "face" or len(parts) not in (2, 3):
            raise InvalidParams(f"bad --sources {args.sources!r}; expected face:<id>[:k]")
        try:
            nums = [int(x) for x in parts[1:]]
        except ValueError as exc:
            raise InvalidParams(f"bad --sources {args.sources!r}") from exc
        return _sources(g, nums[0], nums[1] if len(nums) > 1 else None, args.start)
    return _sources(g, args.face, args.k, args.start)


def _tree_arg(text):
    kind, _, root = text.partition(":")
    if kind not in ("bfs", "sssp"):
        raise argparse.ArgumentTypeError(f"bad tree {text!r}; expected bfs:<r> or sssp:<r>")
    try:
        return kind, int(root or 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad tree root in {text!r}") from exc


def _targets(g, spec):
    if spec in (None, "all"):
        return None
    try:
        return [int(x) for x in Path(spec).read_text().split()]
    except OSError as exc:
        raise IoError(f"cannot read targets {spec}") from exc
    except ValueError as exc:
        raise InvalidParams("targets file must list vertex ids") from exc


# --- commands ----------------------------------------------------------------


def cmd_validate(g, args):
    rep = validate_embedding(g)
    return {"n": g.n, "m": g.m, "faces": len(rep.faces), "components": len(rep.components),
            "weighted": g.is_weighted, "valid": rep.valid}


def cmd_sep(g, args):
    kind, root = args.tree
    t = bfs_tree(g, root) if kind == "bfs" else sssp_tree(g, root)
    h = g if is_biconnected(g) else biconnect_augment(g).graph
    weights = None
    if args.weights != "unit":
        try:
            weights = [Fraction(x) for x in Path(args.weights).read_text().split()]
        except OSError as exc:
            raise IoError(f"cannot read weights {args.weights}") from exc
        except ValueError as exc:
            raise InvalidParams("weights file must list numbers") from exc
    sep = cycle_separator(h, t, weights)
    return {"cycle": sep.cycle, "closing_edge": list(sep.closing_edge),
            "closing_virtual": sep.closing_virtual, "inside": len(sep.inside),
            "outside": len(sep.outside), "balance": sep.balance}


def cmd_bdd(g, args):
    mode, root = args.tree if args.tree else (args.mode, 0)
    bdd = build_bdd(g, mode=mode, root=root, leaf_threshold=args.threshold, eps=args.eps or 1)
    rep = validate_bdd(bdd)
    out = {"bags": len(bdd.bags), "depth": bdd.depth(), "leaf_threshold": bdd.leaf_threshold,
           "properties": {k: bool(v[0]) for k, v in rep.results.items()},
           "ok": rep.ok}
    if args.dump:
        Path(args.dump).write_text(dumps_bdd(bdd))
    if not rep.ok:
        raise PropertyViolation("decomposition failed: " + ", ".join(rep.failures()))
    return out


def _check_table(g, S, tab, T=None):
    rows = [DistOracle(g).row(s) for s in S.vertices]
    for i in range(len(S.vertices)):
        for t in (range(g.n) if T is None else T):
            if compression.decode(tab, i, t) != rows[i][t]:
                raise PropertyViolation(f"decode mismatch at source {i}, target {t}")


def cmd_compress(g, args, fast=False):
    S = _source_arg(g, args)
    T = _targets(g, args.targets)
    stats = {}
    if fast:
        if args.prime != "auto":
            raise InvalidParams("only --prime auto is supported")
        tab = fasttuples.fast_encode(g, S, T, seed=args.seed, stats=stats)
    else:
        tab = compression.encode(g, S, T)
    blob = tab.to_bytes()
    if args.out:
        Path(args.out).write_bytes(blob)
    if args.check:
        _check_table(g, S, tab, T)
    out = {"n": g.n, "ell": len(S.vertices), "sources": list(S.vertices), "D": tab.D,
           "distinct_tuples": tab.rows, "bytes": len(blob)}
    if fast:
        out["collisions"] = stats.get("collisions", 0)
    return out


def cmd_coreset(g, args):
    S = _source_arg(g, args)
    if args.fast:
        cs = fasttuples.weighted_fast_coreset(g, S, args.delta, seed=args.seed)
    else:
        cs = coreset.additive_coreset(g, S, args.delta)
    tuples = compression.compute_tuples(g, S)
    err = coreset.max_witness_error(tuples, cs)
    d = _coreset_scale(tuples, cs)
    out = {"n": g.n, "ell": len(S.vertices), "delta": args.delta, "size": len(cs),
           "max_error": err, "bound": coreset.size_bound(len(S.vertices), d, args.delta)}
    if err > args.delta:
        raise PropertyViolation(f"witness error {err} above delta {args.delta}")
    return out


def _coreset_scale(tuples, cs):
    """d in the size bound: it has to cover both the source gap and d(v, s_1)."""
    return max(cs.d, max(t[0] for t in tuples))


def cmd_mcompress(g, args):
    S = _source_arg(g, args)
    eps = args.eps or Fraction(1, 2)
    mc = coreset.multiplicative_compress(g, S, eps, args.seed)
    oracle = DistOracle(g)
    bad = 0
    total = 0
    for i, s in enumerate(S.vertices):
        row = oracle.row(s)
        for t in range(g.n):
            est = coreset.multiplicative_decode(mc, i, t)
            total += 1
            if not row[t] <= est <= (1 + eps) * row[t]:
                bad += 1
    return {"n": g.n, "ell": len(S.vertices), "eps": eps, "pairs": total, "outside": bad,
            **mc.stats}


def cmd_diameter(g, args):
    if args.eps is None and not g.is_weighted:
        res = diameter.exact_diameter(g)
        mode = "exact"
    else:
        res = diameter.approx_diameter(g, args.eps or Fraction(1, 2), seed=args.seed)
        mode = "approx"
    levels = {}
    for f in res.frames:
        lv = levels.setdefault(f.depth, {"frames": 0, "max_frame": 0, "max_reps": 0})
        lv["frames"] += 1
        lv["max_frame"] = max(lv["max_frame"], len(f.vertices))
        lv["max_reps"] = max(lv["max_reps"], max((len(r) for r in f.reps), default=0))
    return {"mode": mode, "value": res.value, "depth": res.max_depth(),
            "levels": [levels[d] | {"depth": d} for d in sorted(levels)]}


def cmd_sim(g, args):
    net = SimNetwork(g, keep_transcript=bool(args.transcript))
    out = {"n": g.n, "hop_radius": net.hop_radius, "beta": net.beta}
    if args.what == "labels" or args.what == "sssp" or g.is_weighted:
        bdd = build_bdd(g, mode="bfs")
    if args.what == "labels":
        labels = (distributed.weighted_labels(net, bdd) if g.is_weighted
                  else distributed.unweighted_labels(net, bdd))
        out["max_label_bits"] = max(lab.bits(net.codec) for lab in labels)
        out["label_constant"] = round(distributed.label_bound_constant(labels, net, g.is_weighted), 6)
        if args.check:
            oracle = DistOracle(g)
            for u in range(g.n):
                row = oracle.row(u)
                for v in range(g.n):
                    if distributed.decode(labels[u], labels[v]) != row[v]:
                        raise PropertyViolation(f"label decode mismatch at ({u}, {v})")
    elif args.what == "sssp":
        labels = (distributed.weighted_labels(net, bdd) if g.is_weighted
                  else distributed.unweighted_labels(net, bdd))
        res = distributed.sssp(net, labels, args.source)
        out.update({"source": args.source, "dist": res.dist, "parent": res.parent})
    elif g.is_weighted:
        res = distributed.approx_weighted_diameter(net, args.eps or Fraction(1, 2), seed=args.seed,
                                                   label_bdd=bdd)
        out.update({"mode": "approx", "value": res.estimate, "restarts": res.stats["restarts"],
                    "D_tilde": res.stats["D_tilde"]})
    else:
        bdd = build_bdd(g, mode="bfs")
        labels = distributed.unweighted_labels(net, bdd)
        res = distributed.unweighted_diameter(net, bdd, labels, seed=args.seed)
        out.update({"mode": "exact", "value": res.value, "restarts": res.stats["restarts"]})
    led = net.ledger
    out.update({"executed": led.executed, "charged": led.charged, "total": led.total,
                "transcript_hash": net.transcript_hash})
    if args.ledger:
        Path(args.ledger).write_text(dump_json(led.to_dict()))
    if args.transcript:
        Path(args.transcript).write_text("\n".join(net.transcript) + "\n")
    return out


# --- suites ------------------------------------------------------------------


SUITE_COLUMNS = {
    "compress": [("n", "measured"), ("D", "measured"), ("ell", "measured"),
                 ("distinct_tuples", "measured"), ("bound_ratio", "measured")],
    "fast-compress": [("n", "measured"), ("D", "measured"), ("ell", "measured"),
                      ("distinct_tuples", "measured"), ("collisions", "measured")],
    "coreset": [("n", "measured"), ("ell", "measured"), ("d", "oracle"), ("delta", "measured"),
                ("size", "measured"), ("size_bound", "oracle"), ("max_error", "oracle")],
    "diameter": [("n", "measured"), ("value", "measured"), ("oracle", "oracle"),
                 ("depth", "measured")],
    "sim-diameter": [("n", "measured"), ("D", "oracle"), ("value", "measured"),
                     ("oracle", "oracle"), ("executed", "measured"), ("charged", "charged"),
                     ("total", "charged")],
    "sim-labels": [("n", "measured"), ("D", "oracle"), ("max_bits", "measured"),
                   ("bound_constant", "measured"), ("decode_pass_rate", "oracle"),
                   ("executed", "measured"), ("charged", "charged")],
}


@dataclass
class ExperimentSpec:
    """A sweep: one command over graph sources and repetitions.

    A graph source is ``{"file": path}`` or ``{"kind": ..., "params": {...}}``;
    repetition r runs with seed ``seed + r``.
    """

    command: str
    graphs: list
    params: dict = field(default_factory=dict)
    repetitions: int = 1
    seed: int = 0
    out_json: str = "report.json"
    out_csv: str = "report.csv"

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise SpecError("spec must be a JSON object")
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise SpecError(f"unknown spec fields: {sorted(unknown)}")
        try:
            spec = cls(**d)
        except TypeError as exc:
            raise SpecError(str(exc)) from exc
        if spec.command not in SUITE_COLUMNS:
            raise SpecError(f"unknown suite command {spec.command!r}")
        if not isinstance(spec.repetitions, int) or spec.repetitions < 0:
            raise SpecError("repetitions must be a nonnegative integer")
        for src in spec.graphs:
            if not isinstance(src, dict) or not ({"file"} <= set(src) or {"kind"} <= set(src)):
                raise SpecError(f"bad graph source {src!r}")
        return spec

    @classmethod
    def load(cls, path):
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except OSError as exc:
            raise IoError(f"cannot read {path}") from exc
        except json.JSONDecodeError as exc:
            raise SpecError(f"spec is not valid JSON: {exc}") from exc

    def to_dict(self):
        return asdict(self)


def _suite_graph(src, seed):
    if "file" in src:
        return _read_graph(src["file"])
    return generate(src["kind"], src.get("params"), seed=src.get("seed", seed))


def _suite_row(command, g, params, seed):
    p = {k: _q(str(v)) if k in ("eps", "delta") else v for k, v in params.items()}
    if command in ("compress", "fast-compress"):
        S = _sources(g, p.get("face"), p.get("k"), p.get("start", 0))
        stats = {}
        if command == "compress":
            tab = compression.encode(g, S)
        else:
            tab = fasttuples.fast_encode(g, S, seed=seed, stats=stats)
        ell = len(S.vertices)
        D = DistOracle(g).diameter()
        row = {"n": g.n, "D": D, "ell": ell, "distinct_tuples": tab.rows}
        if command == "compress":
            row["bound_ratio"] = round(tab.rows / (ell ** 3 * (D + 1)), 6)
        else:
            row["collisions"] = stats.get("collisions", 0)
        return row
    if command == "coreset":
        S = _sources(g, p.get("face"), p.get("k"), p.get("start", 0))
        delta = p.get("delta", Fraction(1))
        cs = coreset.additive_coreset(g, S, delta)
        tuples = cs.extra["tuples"]
        d = _coreset_scale(tuples, cs)
        return {"n": g.n, "ell": len(S.vertices), "d": d, "delta": delta, "size": len(cs),
                "size_bound": coreset.size_bound(len(S.vertices), d, delta),
                "max_error": coreset.max_witness_error(tuples, cs)}
    oracle = DistOracle(g)
    if command == "diameter":
        if "eps" in p:
            res = diameter.approx_diameter(g, p["eps"], seed=seed)
        else:
            res = diameter.exact_diameter(g)
        return {"n": g.n, "value": res.value, "oracle": oracle.diameter(), "depth": res.max_depth()}
    net = SimNetwork(g)
    bdd = build_bdd(g, mode="bfs")
    if command == "sim-diameter":
        if g.is_weighted:
            val = distributed.approx_weighted_diameter(net, p.get("eps", Fraction(1, 2)), seed=seed,
                                                       label_bdd=bdd).estimate
        else:
            labels = distributed.unweighted_labels(net, bdd)
            val = distributed.unweighted_diameter(net, bdd, labels, seed=seed).value
        return {"n": g.n, "D": net.hop_radius, "value": val, "oracle": oracle.diameter(),
                "executed": net.ledger.executed, "charged": net.ledger.charged,
                "total": net.ledger.total}
    labels = (distributed.weighted_labels(net, bdd) if g.is_weighted
              else distributed.unweighted_labels(net, bdd))
    good = sum(distributed.decode(labels[u], labels[v]) == oracle.dist(u, v)
               for u in range(g.n) for v in range(g.n))
    return {"n": g.n, "D": net.hop_radius, "max_bits": max(x.bits(net.codec) for x in labels),
            "bound_constant": round(distributed.label_bound_constant(labels, net, g.is_weighted), 6),
            "decode_pass_rate": Fraction(good, g.n * g.n), "executed": net.ledger.executed,
            "charged": net.ledger.charged}


def run_suite(spec):
    """Run every (graph, repetition) job in spec order; write JSON and CSV.

    Returns the two output paths.  Reports contain no timings, so a replay
    of the same spec is byte-identical.
    """
    if isinstance(spec, dict):
        spec = ExperimentSpec.from_dict(spec)
    cols = SUITE_COLUMNS[spec.command]
    runs = []
    for gi, src in enumerate(spec.graphs):
        for r in range(spec.repetitions):
            seed = spec.seed + r
            g = _suite_graph(src, seed)
            row = _suite_row(spec.command, g, spec.params, seed)
            runs.append({"graph": gi, "rep": r, "seed": seed, **row})
    header = ["graph", "rep", "seed"] + [c for c, _ in cols]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for run in runs:
        w.writerow([_jsonable(run.get(c)) for c in header])
    report = {"spec": spec.to_dict(), "columns": {c: prov for c, prov in cols}, "runs": runs}
    try:
        Path(spec.out_csv).write_text(buf.getvalue())
        Path(spec.out_json).write_text(dump_json(report))
    except OSError as exc:
        raise IoError(f"cannot write report: {exc}") from exc
    return spec.out_json, spec.out_csv


def cmd_suite(args):
    js, cs = run_suite(ExperimentSpec.load(args.spec))
    return {"json": js, "csv": cs}


# --- parser ----------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="pmk", description="Planar distance compression toolkit.")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="print results as JSON")
    p.add_argument("--quiet", action="store_true", help="print nothing; rely on the exit code")
    sub = p.add_subparsers(dest="command", required=True)

    def graph_cmd(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("graph")
        return sp

    def sources(sp):
        sp.add_argument("--face", type=int, help="face id (default: largest face)")
        sp.add_argument("--k", type=int, help="number of consecutive sources")
        sp.add_argument("--start", type=int, default=0)
        sp.add_argument("--sources", help="face:<id>[:k]")

    graph_cmd("validate", "check a rotation system")

    sp = sub.add_parser("gen", help="generate a graph file")
    sp.add_argument("kind", choices=["grid", "random-triangulation", "path", "cycle"])
    sp.add_argument("--n", type=int)
    sp.add_argument("--rows", type=int)
    sp.add_argument("--cols", type=int)
    sp.add_argument("--wmax", type=int)
    sp.add_argument("-o", "--out")

    sp = graph_cmd("sep", "balanced cycle separator")
    sp.add_argument("--tree", type=_tree_arg, default=("bfs", 0), help="bfs:<r> or sssp:<r>")
    sp.add_argument("--weights", default="unit", help="'unit' or a file of node weights")

    sp = graph_cmd("bdd", "bounded diameter decomposition and its validator")
    sp.add_argument("--mode", choices=["bfs", "sssp"], default="bfs")
    sp.add_argument("--tree", type=_tree_arg, help="bfs:<r> or sssp:<r> (overrides --mode)")
    sp.add_argument("--validate", action="store_true", help="accepted; validation always runs")
    sp.add_argument("--threshold", type=int)
    sp.add_argument("--eps", type=_q)
    sp.add_argument("--dump")

    for name, help_ in (("compress", "exact tuple table"), ("fast-compress", "hashed tuple table")):
        sp = graph_cmd(name, help_)
        sources(sp)
        sp.add_argument("-o", "--out")
        sp.add_argument("--targets", default="all", help="'all' or a file of vertex ids")
        sp.add_argument("--check", action="store_true", help="verify decode against an oracle")
        if name == "fast-compress":
            sp.add_argument("--prime", default="auto")

    sp = graph_cmd("coreset", "additive core-set")
    sources(sp)
    sp.add_argument("--delta", type=_q, required=True)
    sp.add_argument("--fast", action="store_true", help="projection and shifted grid")

    sp = graph_cmd("mcompress", "multiplicative compression")
    sources(sp)
    sp.add_argument("--eps", type=_q)

    sp = graph_cmd("diameter", "centralized diameter (exact unless --eps or weighted)")
    sp.add_argument("--eps", type=_q)

    sp = sub.add_parser("sim", help="run a distributed program in the simulator")
    sp.add_argument("what", choices=["diameter", "sssp", "labels"])
    sp.add_argument("graph")
    sp.add_argument("--eps", type=_q)
    sp.add_argument("--source", type=int, default=0)
    sp.add_argument("--ledger", help="write the round ledger as JSON")
    sp.add_argument("--transcript", help="write the frame transcript")
    sp.add_argument("--check", action="store_true")

    sp = sub.add_parser("suite", help="run an experiment spec (JSON)")
    sp.add_argument("spec")
    return p


def _print(out, args):
    if args.quiet:
        return
    if args.json:
        sys.stdout.write(dump_json(out))
        return
    for k, v in out.items():
        print(f"{k}: {json.dumps(_jsonable(v), sort_keys=True)}")


def run(args):
    if args.command == "gen":
        params = {k: getattr(args, k) for k in ("n", "rows", "cols", "wmax") if getattr(args, k)}
        g = generate(args.kind, params, seed=args.seed)
        text = dumps(g)
        if args.out:
            Path(args.out).write_text(text)
            return {"n": g.n, "m": g.m, "out": args.out}
        if not args.quiet:
            sys.stdout.write(text)
        return None
    if args.command == "suite":
        return cmd_suite(args)
    g = _read_graph(args.graph)
    if args.command in ("compress", "fast-compress"):
        return cmd_compress(g, args, fast=args.command == "fast-compress")
    handler = {"validate": cmd_validate, "sep": cmd_sep, "bdd": cmd_bdd, "coreset": cmd_coreset,
               "mcompress": cmd_mcompress, "diameter": cmd_diameter, "sim": cmd_sim}[args.command]
    return handler(g, args)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        out = run(args)
    except PmkError as exc:
        print(f"pmk: {type(exc).__name__}: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", 3)
    if out is not None:
        _print(out, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())

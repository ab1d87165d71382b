"""Command-line front end: gen, mst, cluster, eval, bench, repro.

Every artifact embeds the run configuration, seed and tool version, either as
a leading ``# dbmstclu {json}`` comment line or under a ``config`` key.
Exit codes: 0 success, 2 parameter error, 3 data error, 4 sketch failure.
Errors are reported on stderr as one JSON object.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .bench import BENCH_SEED, fit_through_origin, run_scaling
from .clustering import dbmstclu, semst
from .datagen import (
    POINT_KINDS,
    QUALITY_DATASETS,
    build_dissimilarity_stream,
    gen_points,
    gen_sbm,
    point_cloud_csv,
    read_point_csv,
)
from .exceptions import (
    DBMSTCluError,
    IncompleteComponentsError,
    ParameterError,
    UndefinedMetricError,
)
from .forest import SpanningForest, exact_mst
from .metrics import adjusted_rand_index, dbcvi_score, silhouette
from .sketch import GraphSketch
from .stream import (
    parse_stream,
    read_binary_stream,
    serialize_stream,
    updates_to_arrays,
    write_binary_stream,
)

EXIT_OK, EXIT_PARAM, EXIT_DATA, EXIT_SKETCH = 0, 2, 3, 4
_TAG = "# dbmstclu "


class _Fail(Exception):
    def __init__(self, code, kind, message, extra=None):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.extra = extra or {}


def _config(args, command):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "threads")}
    cfg["command"] = command
    cfg["version"] = __version__
    return cfg


def _header(cfg):
    return _TAG + json.dumps(cfg, sort_keys=True)


def _write_lines(path, lines):
    with open(path, "w") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def _write_json(path, doc):
    text = json.dumps(doc, sort_keys=True, indent=1)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


# stream loading


def _load_stream_arrays(path):
    """Read a text or binary stream into ``(n, u, v, w_old, delta)``."""
    if path.endswith(".bin"):
        return read_binary_stream(path)
    with open(path) as fh:
        n, updates = parse_stream(fh)
        u, v, w_old, delta = updates_to_arrays(updates)
    return n, u, v, w_old, delta


def _net_graph(n, u, v, w_old, delta):
    """Final edge weights after replaying a trusted stream."""
    weights = {}
    for a, b, wo, d in zip(u.tolist(), v.tolist(), w_old.tolist(), delta.tolist()):
        key = (a, b) if a < b else (b, a)
        w = wo + d
        weights[key] = 0.0 if abs(w) <= 1e-12 else min(w, 1.0)
    items = [(a, b, w) for (a, b), w in weights.items() if w > 0]
    if not items:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
    a, b, w = zip(*items)
    return np.array(a), np.array(b), np.array(w)


def _read_labels(path):
    """Labels from ``node,cluster`` CSV or a point CSV with a ``label`` column."""
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append(line.split(","))
    if header is None:
        raise ParameterError(f"{path}: no header line")
    if header[:2] == ["node", "cluster"]:
        nodes = np.array([int(r[0]) for r in rows])
        lab = np.array([int(r[1]) for r in rows])
        out = np.empty(len(rows), dtype=np.int64)
        out[nodes] = lab
        return out
    if header[-1] == "label":
        return np.array([int(float(r[-1])) for r in rows], dtype=np.int64)
    raise ParameterError(f"{path}: expected 'node,cluster' or a 'label' column")


# subcommands


def cmd_gen(args):
    cfg = _config(args, "gen")
    if args.kind == "sbm":
        if args.k is None:
            raise ParameterError("sbm needs --k")
        graph, truth = gen_sbm(args.n, args.k, args.p_in, args.p_out,
                               intra_range=tuple(args.intra), inter_range=tuple(args.inter),
                               seed=args.seed)
        _write_lines(args.out + ".truth.csv",
                     [_header(cfg), "node,cluster"] + [f"{i},{c}" for i, c in enumerate(truth.tolist())])
    else:
        X, y = gen_points(args.kind, args.n, args.dims, args.noise, args.ambient_std, seed=args.seed)
        _write_lines(args.out + ".csv", [_header(cfg)] + point_cloud_csv(X, y))
        graph = build_dissimilarity_stream(X, metric="euclidean", w_min=args.w_min)
    if args.binary:
        write_binary_stream(args.out + ".bin", graph.n, *graph.update_arrays())
    _write_lines(args.out + ".stream",
                 serialize_stream(graph.n, graph.updates(), _header(cfg)[2:]))
    return {"n": graph.n, "edges": int(len(graph.u))}


def cmd_mst(args):
    cfg = _config(args, "mst")
    n, u, v, w_old, delta = _load_stream_arrays(args.stream)
    if args.mode == "exact":
        a, b, w = _net_graph(n, u, v, w_old, delta)
        forest = exact_mst(a, b, w, n)
        forest.save(args.out, cfg)
        return {"n": n, "edges": forest.n_edges, "weight": forest.total_weight()}
    sk = GraphSketch(n, epsilon=args.epsilon, w_min=args.w_min, n_repetitions=args.repetitions,
                     random_state=args.seed)
    chunk = 20000
    for s in range(0, len(u), chunk):
        sk.update_many(u[s:s + chunk], v[s:s + chunk], w_old[s:s + chunk], delta[s:s + chunk])
    cfg["grid_levels"] = sk.grid.n_levels
    try:
        forest = sk.approx_mst()
    except IncompleteComponentsError as exc:
        cfg["partial"] = True
        if exc.forest is not None:
            exc.forest.save(args.out, cfg)
        raise _Fail(EXIT_SKETCH, "IncompleteComponentsError", str(exc),
                    {"partial_output": args.out, "level": exc.level})
    forest.save(args.out, cfg)
    return {"n": n, "edges": forest.n_edges, "weight": forest.total_weight(),
            "estimate": sk.mst_weight_estimate()}


def cmd_cluster(args):
    cfg = _config(args, "cluster")
    forest = SpanningForest.load(args.forest)
    if args.baseline == "semst":
        if args.k is None:
            raise ParameterError("--baseline semst needs --k")
        part = semst(forest, args.k)
    else:
        part = dbmstclu(forest)
    labels = part.labels
    if args.noise_max_size is not None:
        sizes = np.bincount(labels)
        labels = np.where(sizes[labels] <= args.noise_max_size, -1, labels)
    _write_lines(args.out + ".csv",
                 [_header(cfg), "node,cluster"] + [f"{i},{c}" for i, c in enumerate(labels.tolist())])
    report = {
        "config": cfg,
        "forest_config": forest.metadata,
        "dbcvi": part.dbcvi,
        "n_clusters": part.n_clusters,
        "trace": part.trace,
        "clusters": part.cluster_report(),
    }
    _write_json(args.out + ".json", report)
    return {"n_clusters": part.n_clusters, "dbcvi": part.dbcvi}


def _metrics(labels, truth=None, X=None, forest=None, noise_label=-1):
    out = {}
    if truth is not None:
        out["ari"] = adjusted_rand_index(labels, truth)
    if X is not None:
        sil_labels = labels.copy()
        noise = sil_labels == noise_label
        # noise points become singletons
        sil_labels[noise] = sil_labels.max() + 1 + np.arange(noise.sum())
        try:
            out["silhouette"] = silhouette(sil_labels, X=X)
        except UndefinedMetricError:
            out["silhouette"] = None
    if forest is not None:
        out["dbcvi"] = dbcvi_score(forest, labels)
    return out


def cmd_eval(args):
    cfg = _config(args, "eval")
    labels = _read_labels(args.assignment)
    truth = _read_labels(args.truth) if args.truth else None
    X = read_point_csv(args.points)[0] if args.points else None
    forest = SpanningForest.load(args.forest) if args.forest else None
    if forest is not None and np.any(labels < 0):
        raise ParameterError("dbcvi needs a labelling without noise flags")
    doc = {"config": cfg, "metrics": _metrics(labels, truth, X, forest)}
    _write_json(args.out, doc)
    return doc["metrics"]


def cmd_bench(args):
    cfg = _config(args, "bench")
    rows = run_scaling(args.sizes, args.ks, seed=args.seed, repeats=args.repeats)
    lines = [_header(cfg), "n,k,seconds,n_clusters,ari"]
    lines += [f"{r['n']},{r['k']},{r['seconds']!r},{r['n_clusters']},{r['ari']!r}" for r in rows]
    _write_lines(args.out, lines)
    fits = {}
    for k in args.ks:
        sel = [r for r in rows if r["k"] == k]
        if len(sel) >= 2:
            a, r2 = fit_through_origin([r["n"] for r in sel], [r["seconds"] for r in sel])
            fits[str(k)] = {"slope": a, "r2": r2}
    return {"fits": fits}


def cmd_repro(args):
    cfg = _config(args, "repro")
    os.makedirs(args.out, exist_ok=True)
    table = {}
    for name, spec in QUALITY_DATASETS.items():
        spec = dict(spec)
        kind = spec.pop("kind")
        seed = spec.pop("seed") + args.seed
        X, y = gen_points(kind, seed=seed, **spec)
        _write_lines(os.path.join(args.out, f"{name}_points.csv"),
                     [_header(dict(cfg, dataset=name, seed=seed))] + point_cloud_csv(X, y))
        graph = build_dissimilarity_stream(X, w_min=args.w_min)
        exact = exact_mst(graph.u, graph.v, graph.weight, graph.n)
        sk = GraphSketch(graph.n, epsilon=args.epsilon, w_min=args.w_min, random_state=seed)
        sk.update_many(*graph.update_arrays())
        sketched = sk.approx_mst()
        runs = {
            "dbmstclu_exact": (exact, dbmstclu(exact)),
            "dbmstclu_sketch": (sketched, dbmstclu(sketched)),
            "semst_exact": (exact, semst(exact, 2)),
        }
        table[name] = {}
        for method, (forest, part) in runs.items():
            m = _metrics(part.labels, y, X)
            m["dbcvi"] = part.dbcvi
            m["n_clusters"] = part.n_clusters
            table[name][method] = m
            _write_lines(os.path.join(args.out, f"{name}_{method}.csv"),
                         [_header(dict(cfg, dataset=name, method=method)), "node,cluster"]
                         + [f"{i},{c}" for i, c in enumerate(part.labels.tolist())])
    _write_json(os.path.join(args.out, "table.json"), {"config": cfg, "table": table})
    return {"table": table}


# parser


def _int_list(text):
    return [int(float(x)) for x in text.split(",") if x]


def build_parser():
    parser = argparse.ArgumentParser(prog="dbmstclu", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=1,
                        help="accepted for compatibility; execution is sequential and this has no effect")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a point cloud or SBM graph as an update stream")
    p.add_argument("kind", choices=POINT_KINDS + ("sbm",))
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--dims", type=int, default=20)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--ambient-std", type=float, default=None)
    p.add_argument("--k", type=int, default=None, help="SBM block count")
    p.add_argument("--p-in", type=float, default=0.1)
    p.add_argument("--p-out", type=float, default=0.01)
    p.add_argument("--intra", type=float, nargs=2, default=[0.05, 0.2])
    p.add_argument("--inter", type=float, nargs=2, default=[0.6, 1.0])
    p.add_argument("--w-min", type=float, default=1e-3)
    p.add_argument("--binary", action="store_true", help="also write the binary stream")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("mst", help="recover a spanning forest from a stream")
    p.add_argument("stream")
    p.add_argument("--mode", choices=("sketch", "exact"), default="sketch")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--w-min", type=float, default=1e-3)
    p.add_argument("--repetitions", type=int, default=None, help="sampler budget per level")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="forest file (.json for JSON, text otherwise)")
    p.set_defaults(func=cmd_mst)

    p = sub.add_parser("cluster", help="cluster a spanning forest")
    p.add_argument("forest")
    p.add_argument("--baseline", choices=("semst",), default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--noise-max-size", type=int, default=None,
                   help="label clusters of at most this size as -1")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("eval", help="score an assignment")
    p.add_argument("assignment")
    p.add_argument("--truth", default=None)
    p.add_argument("--points", default=None)
    p.add_argument("--forest", default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="time clustering on SBM graphs")
    p.add_argument("--sizes", type=_int_list, default=[1000, 10000, 50000])
    p.add_argument("--ks", type=_int_list, default=[5, 20])
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=BENCH_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("repro", help="run the circles/moons quality pipeline")
    p.add_argument("--seed", type=int, default=0, help="offset added to the pinned dataset seeds")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--w-min", type=float, default=1e-3)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_repro)
    return parser


def _classify(exc):
    if isinstance(exc, _Fail):
        return exc.code, exc.kind, str(exc), exc.extra
    if isinstance(exc, IncompleteComponentsError):
        return EXIT_SKETCH, type(exc).__name__, str(exc), {}
    if isinstance(exc, ParameterError):
        return EXIT_PARAM, type(exc).__name__, str(exc), {}
    if isinstance(exc, (DBMSTCluError, ValueError, OSError, KeyError)):
        return EXIT_DATA, type(exc).__name__, str(exc), {}
    raise exc


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        summary = args.func(args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        code, kind, message, extra = _classify(exc)
        print(json.dumps(dict({"error": kind, "message": message}, **extra), sort_keys=True),
              file=sys.stderr)
        return code
    if summary is not None and args.command != "eval":
        print(json.dumps(summary, sort_keys=True, default=float))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

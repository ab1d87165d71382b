"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from dbmstclu.bench import fit_through_origin, time_clustering
from dbmstclu.clustering import ClusterPartition, dbmstclu, semst
from dbmstclu.datagen import QUALITY_DATASETS, build_dissimilarity_stream, gen_points, gen_sbm
from dbmstclu.forest import SpanningForest, exact_mst
from dbmstclu.l0 import L0Sampler, SampleStatus
from dbmstclu.metrics import adjusted_rand_index, dbcvi_score
from dbmstclu.sketch import GraphSketch
from dbmstclu.stream import WeightGrid

from oracles import naive_dbmstclu, random_tree
from cut_properties import PROPERTIES
from streams import as_arrays, insert_only, turnstile_stream

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} | {detail}")
        return ok
    return emit


def _path(weights):
    n = len(weights) + 1
    return SpanningForest(n, np.arange(n - 1), np.arange(1, n), weights)


def _best_time(fn, repeats=20):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def test_criterion_01_three_node_path(report):
    forest = _path([0.1, 1.0])
    part, secs = _best_time(lambda: dbmstclu(forest))
    other = ClusterPartition(forest).evaluate_cut(0)
    first_heavy = part.cuts[0] == 1
    final_ok = abs(part.dbcvi - 0.9333) <= 1e-9 or abs(part.dbcvi - 14 / 15) <= 1e-9
    other_ok = abs(other - (-0.2667)) <= 1e-4 and abs(other - (1 / 3 + 2 / 3 * (0.1 - 1))) <= 1e-9
    ok = first_heavy and final_ok and other_ok and secs < 1e-3
    report(1, ok, f"first cut={part.cuts[0]} final dbcvi={part.dbcvi!r} after {len(part.cuts)} cuts "
                  f"(wanted 0.9333), light-edge cut={other:.6f}, time={secs * 1e3:.3f} ms")
    assert first_heavy and other_ok and secs < 1e-3
    assert final_ok, "the greedy loop keeps cutting while the score does not drop"


def test_criterion_02_symmetric_path(report):
    forest = _path([0.1, 0.1, 0.9, 1.0, 0.9, 0.1, 0.1])
    part, secs = _best_time(lambda: dbmstclu(forest))
    first = part.cuts[0]
    first_val = part.trace[0]["dbcvi_after"]
    heaviest = ClusterPartition(forest).evaluate_cut(3)
    ok = (forest.weight[first] == 0.9 and abs(first_val - 0.27) <= 0.01
          and abs(heaviest - 0.1) <= 1e-12 and first_val > heaviest and secs < 1e-3)
    report(2, ok, f"first cut edge {forest.edges[first]} dbcvi={first_val:.6f}, "
                  f"heaviest-edge cut={heaviest:.6f}, time={secs * 1e3:.3f} ms")
    assert ok


def test_criterion_03_cut_property_suite(report):
    t0 = time.perf_counter()
    rows = {}
    for i, (name, check) in enumerate(sorted(PROPERTIES.items())):
        rows[name] = check(1000, np.random.default_rng(100 + i))
    secs = time.perf_counter() - t0
    ok = all(c >= 1000 and a == c for c, a in rows.values()) and secs < 30
    detail = ", ".join(f"{k}={a}/{c}" for k, (c, a) in rows.items())
    report(3, ok, f"{detail}; time={secs:.1f} s")
    assert ok


def test_criterion_04_incremental_vs_naive(report):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(200):
        n = int(rng.integers(2, 201))
        u, v, w = random_tree(n, rng)
        part = dbmstclu(SpanningForest(n, u, v, w))
        cuts, dbcvi = naive_dbmstclu(n, u, v, w)
        mismatches += part.cuts != cuts or part.dbcvi != dbcvi
    secs = time.perf_counter() - t0
    ok = mismatches == 0 and secs < 60
    report(4, ok, f"mismatching trees={mismatches}/200, time={secs:.1f} s")
    assert ok


def test_criterion_05_sketch_sandwich(report):
    eps = 0.1
    grid = WeightGrid(eps, 1e-3)
    n = 64
    iu, iv = np.triu_indices(n, 1)
    t0 = time.perf_counter()
    good = failures = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        keep = rng.random(len(iu)) < 0.2
        u, v = iu[keep], iv[keep]
        w = grid.values[rng.integers(0, grid.r, len(u))]
        exact = exact_mst(u, v, w, n).total_weight()
        sk = GraphSketch(n, epsilon=eps, random_state=seed)
        sk.update_many(u, v, np.zeros(len(u)), w)
        try:
            approx = sk.approx_mst().total_weight()
        except Exception:
            failures += 1
            continue
        good += exact <= approx * (1 + 1e-12) and approx <= (1 + eps) * exact * (1 + 1e-12)
    secs = time.perf_counter() - t0
    ok = good >= 95 and secs < 120
    report(5, ok, f"sandwich held in {good}/100 runs ({failures} sampler failures), time={secs:.1f} s")
    assert ok


def test_criterion_06_l0_uniformity(report):
    rng = np.random.default_rng(6)
    m = 64 * 63 // 2
    support = rng.choice(m, size=8, replace=False).tolist()
    counts = dict.fromkeys(support, 0)
    fails = 0
    t0 = time.perf_counter()
    for _ in range(10_000):
        s = L0Sampler.random(m, rng)
        for j in support:
            s.update(j, 1)
        res = s.sample()
        if res.status == SampleStatus.EDGE:
            counts[res.index] += 1
        else:
            fails += 1
    secs = time.perf_counter() - t0
    got = 10_000 - fails
    freq = np.array([counts[j] for j in support]) / got
    tv = 0.5 * float(np.abs(freq - 1 / 8).sum())
    ok = (np.all(np.abs(freq - 1 / 8) <= 0.05) and tv <= 0.1 and fails / 10_000 <= 0.5 and secs < 30)
    report(6, ok, f"freq range [{freq.min():.4f}, {freq.max():.4f}], TV={tv:.4f}, "
                  f"fail rate={fails / 10_000:.4f}, time={secs:.1f} s")
    assert ok


def test_criterion_07_turnstile(report):
    t0 = time.perf_counter()
    same = zero = 0
    trials = 20
    for seed in range(trials):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(10, 40))
        iu, iv = np.triu_indices(n, 1)
        pick = rng.random(len(iu)) < 0.15
        target = {(int(a), int(b)): float(x) for a, b, x in
                  zip(iu[pick], iv[pick], rng.uniform(0.01, 1.0, pick.sum()))}
        updates, net = turnstile_stream(n, target, rng, n_noise_edges=2 * n)
        a = GraphSketch(n, random_state=seed)
        a.update_many(*as_arrays(updates))
        b = GraphSketch(n, random_state=seed)
        b.update_many(*as_arrays(insert_only(net)))
        same += a.approx_mst() == b.approx_mst()
        # deleting every surviving edge empties the sketch
        a.update_many(*as_arrays([(x, y, w, -w) for (x, y), w in sorted(net.items())]))
        zero += a.is_zero() and not a.phi.any() and not a.iota.any() and not a.tau.any()
    secs = time.perf_counter() - t0
    ok = same == trials and zero == trials and secs < 30
    report(7, ok, f"identical forests {same}/{trials}, zeroed sketches {zero}/{trials}, time={secs:.1f} s")
    assert ok


@pytest.fixture(scope="module")
def quality_runs():
    """Exact, sketched and baseline partitions of the pinned quality datasets."""
    out = {}
    t0 = time.perf_counter()
    for name, spec in QUALITY_DATASETS.items():
        spec = dict(spec)
        kind, seed = spec.pop("kind"), spec.pop("seed")
        X, y = gen_points(kind, seed=seed, **spec)
        graph = build_dissimilarity_stream(X)
        exact = exact_mst(graph.u, graph.v, graph.weight, graph.n)
        sk = GraphSketch(graph.n, epsilon=0.1, random_state=seed)
        sk.update_many(*graph.update_arrays())
        sketched = sk.approx_mst()
        out[name] = {
            "truth": y,
            "exact": (exact, dbmstclu(exact)),
            "sketch": (sketched, dbmstclu(sketched)),
            "semst": (exact, semst(exact, 2)),
        }
    out["_seconds"] = time.perf_counter() - t0
    return out


@pytest.mark.slow
def test_criterion_08_clustering_quality(report, quality_runs):
    ok = quality_runs["_seconds"] < 300
    parts = []
    for name in QUALITY_DATASETS:
        runs = quality_runs[name]
        y = runs["truth"]
        methods = ("exact", "sketch", "semst")
        ari = {m: adjusted_rand_index(runs[m][1].labels, y) for m in methods}
        dbcvi = {m: runs[m][1].dbcvi for m in methods}
        ok &= ari["exact"] >= 0.95 and ari["sketch"] >= 0.95
        ok &= dbcvi["exact"] > dbcvi["semst"]
        if name == "circles":
            ok &= ari["semst"] <= 0.05
        parts.append(f"{name}: ARI exact={ari['exact']:.3f} sketch={ari['sketch']:.3f} "
                     f"semst={ari['semst']:.3f}, DBCVI dbmstclu={dbcvi['exact']:.4f} "
                     f"semst={dbcvi['semst']:.4f}")
    report(8, ok, "; ".join(parts) + f"; time={quality_runs['_seconds']:.1f} s")
    assert ok


@pytest.mark.slow
def test_criterion_09_scaling(report):
    t0 = time.perf_counter()
    sizes = [1000, 10_000, 50_000, 100_000]
    rows = [time_clustering(n, 5, repeats=3) for n in sizes]
    a, r2 = fit_through_origin(sizes, [r["seconds"] for r in rows])
    k100 = time_clustering(10_000, 100, repeats=3)
    ratio = k100["seconds"] / rows[1]["seconds"]
    secs = time.perf_counter() - t0
    ok = r2 >= 0.98 and ratio < 20 and secs < 900
    timings = ", ".join(f"N={r['n']}: {r['seconds']:.3f}s ({r['n_clusters']} clusters, ARI {r['ari']:.3f})"
                        for r in rows + [k100])
    report(9, ok, f"{timings}; slope={a:.3e} s/node, R2={r2:.4f}, "
                  f"K=100/K=5 ratio at N=1e4={ratio:.2f}, time={secs:.1f} s")
    assert ok


def test_criterion_10_self_consistency(report, quality_runs):
    checked = exact = 0
    for name in QUALITY_DATASETS:
        for method in ("exact", "sketch"):
            forest, part = quality_runs[name][method]
            checked += 1
            exact += dbcvi_score(forest, part.labels) == part.dbcvi
    rng = np.random.default_rng(10)
    for _ in range(200):
        n = int(rng.integers(1, 150))
        u, v, w = random_tree(n, rng)
        forest = SpanningForest(n, u, v, w)
        part = dbmstclu(forest)
        checked += 1
        exact += dbcvi_score(forest, part.labels) == part.dbcvi
    for seed in range(5):
        graph, _ = gen_sbm(500, 5, 0.05, 0.002, seed=seed)
        forest = exact_mst(graph.u, graph.v, graph.weight, graph.n)
        part = dbmstclu(forest)
        checked += 1
        exact += dbcvi_score(forest, part.labels) == part.dbcvi
    ok = exact == checked
    report(10, ok, f"bit-exact agreement on {exact}/{checked} pipeline runs")
    assert ok

"""Randomized instance families for the first-cut and cluster-fate properties.

Each ``check_*`` function draws instances until ``n_instances`` of them meet
the property's hypotheses, then compares what the engine does with the
closed-form condition and with a from-scratch score of every candidate cut.
It returns ``(n_checked, n_agreeing)``.
"""

import math

import numpy as np

from dbmstclu.clustering import ClusterPartition
from dbmstclu.forest import SpanningForest

from oracles import components, partition_score, random_tree

# instances closer than this to a closed-form boundary are redrawn
_MARGIN = 1e-9


def _brute_best(n, u, v, w, cut, floor=-math.inf):
    """Best single extra cut by rescoring every uncut edge; last maximum wins."""
    best, best_val = None, floor
    for e in range(len(u)):
        if cut[e]:
            continue
        trial = np.array(cut, dtype=bool)
        trial[e] = True
        val = partition_score(n, u, v, w, trial)
        if val >= best_val:
            best, best_val = e, val
    return best, best_val


def _side_sizes(n, u, v, e):
    keep = np.ones(len(u), dtype=bool)
    keep[e] = False
    lab = components(n, u, v, keep)
    return lab


def first_cut_threshold(N, n1, n2, w1_ratio):
    """Smallest ``w2 / w`` above which the second-heaviest edge is cut first."""
    disc = n1 ** 2 + 4 * w1_ratio * (n2 ** 2 * w1_ratio + N ** 2 - N * n1 - n2 ** 2)
    return (2 * n2 * w1_ratio - n1 + math.sqrt(disc)) / (2 * (N - n1 + n2))


def _two_edge_tree(rng, N, balanced=False):
    if balanced:
        h = N // 2
        ua, va, _ = random_tree(h, rng, np.ones(h - 1))
        ub, vb, _ = random_tree(h, rng, np.ones(h - 1))
        a, b = int(rng.integers(h)), int(rng.integers(h, N))
        u = np.concatenate([ua, ub + h, [a]])
        v = np.concatenate([va, vb + h, [b]])
        forest = SpanningForest(N, u, v, np.ones(N - 1))
        e1 = forest.edge_index(a, b)
    else:
        u, v, _ = random_tree(N, rng, np.ones(N - 1))
        forest = SpanningForest(N, u, v, np.ones(N - 1))
        e1 = int(rng.integers(N - 1))
    e2 = int(rng.choice([e for e in range(N - 1) if e != e1]))
    return forest.u, forest.v, e1, e2


def _two_edge_sizes(N, u, v, e1, e2):
    lab1 = _side_sizes(N, u, v, e1)
    lab2 = _side_sizes(N, u, v, e2)
    # side of e1 away from e2, side of e2 holding e1
    far = lab1 != lab1[u[e2]]
    n1 = int(far.sum())
    near = lab2 == lab2[u[e1]]
    n2 = int(near.sum())
    return n1, n2


def _two_edge_weights(rng, N, low=0.02, high=0.5):
    w = rng.uniform(low, high)
    # the heaviest edge must stand out enough that no base-weight edge competes
    w1 = rng.uniform(w / (1 - 1 / (N - 1)), 1.0)
    return w, w1


def check_second_heaviest_first(n_instances, rng):
    """Two special edges: the lighter one is cut first iff above the threshold."""
    checked = agree = 0
    while checked < n_instances:
        N = int(rng.integers(5, 21))
        u, v, e1, e2 = _two_edge_tree(rng, N)
        n1, n2 = _two_edge_sizes(N, u, v, e1, e2)
        if n1 < 2 or N - n2 < 2:
            continue
        w, w1 = _two_edge_weights(rng, N)
        if w1 / w < 1 / (1 - 1 / (N - 1)):
            continue
        thr = first_cut_threshold(N, n1, n2, w1 / w)
        ratio = thr * math.exp(rng.uniform(-0.3, 0.3))
        if not 1 < ratio < w1 / w or abs(ratio - thr) <= _MARGIN * thr:
            continue
        w2 = ratio * w
        weights = np.full(N - 1, w)
        weights[e1], weights[e2] = w1, w2
        expect_e2 = ratio > thr
        part = ClusterPartition(SpanningForest(N, u, v, weights))
        got, val = part.find_best_cut(floor=-1.0)
        brute, brute_val = _brute_best(N, u, v, weights, np.zeros(N - 1, bool))
        checked += 1
        agree += (got == (e2 if expect_e2 else e1)) and brute == got and brute_val == val
    return checked, agree


def check_balanced_heaviest_first(n_instances, rng):
    """Two special edges with the heaviest one splitting the tree in halves."""
    checked = agree = 0
    while checked < n_instances:
        N = 2 * int(rng.integers(3, 11))
        u, v, e1, e2 = _two_edge_tree(rng, N, balanced=True)
        _, n2 = _two_edge_sizes(N, u, v, e1, e2)
        # a leaf second edge can beat the middle one when w2 is close to w1
        if N - n2 < 2:
            continue
        w, w1 = _two_edge_weights(rng, N)
        w2 = rng.uniform(w, w1)
        if not w < w2 < w1:
            continue
        weights = np.full(N - 1, w)
        weights[e1], weights[e2] = w1, w2
        part = ClusterPartition(SpanningForest(N, u, v, weights))
        got, val = part.find_best_cut(floor=-1.0)
        brute, brute_val = _brute_best(N, u, v, weights, np.zeros(N - 1, bool))
        checked += 1
        agree += got == e1 and brute == e1 and brute_val == val
    return checked, agree


def check_heaviest_cut_nonnegative(n_instances, rng):
    """Cutting a maximum-weight edge of a tree first never gives a negative score."""
    checked = agree = 0
    while checked < n_instances:
        N = int(rng.integers(2, 31))
        u, v, w = random_tree(N, rng, rng.choice([0.1, 0.2, 0.5, 0.8, 1.0], N - 1))
        part = ClusterPartition(SpanningForest(N, u, v, w))
        heavy = np.flatnonzero(w == w.max())
        # u, v from random_tree are already in edge-id order
        for e in heavy.tolist():
            val = part.evaluate_cut(e)
            cut = np.zeros(N - 1, bool)
            cut[e] = True
            checked += 1
            agree += val >= 0 and val == partition_score(N, u, v, w, cut)
    return checked, agree


def check_lightest_cut_nonpositive(n_instances, rng):
    """Cutting a minimum-weight edge with no leaf side first never gives a positive score."""
    checked = agree = 0
    while checked < n_instances:
        N = int(rng.integers(4, 31))
        u, v, w = random_tree(N, rng, rng.choice([0.1, 0.2, 0.5, 0.8, 1.0], N - 1))
        part = ClusterPartition(SpanningForest(N, u, v, w))
        for e in np.flatnonzero(w == w.min()).tolist():
            lab = _side_sizes(N, u, v, e)
            if min(np.sum(lab == lab[u[e]]), np.sum(lab == lab[v[e]])) < 2:
                continue
            val = part.evaluate_cut(e)
            cut = np.zeros(N - 1, bool)
            cut[e] = True
            checked += 1
            agree += val <= 0 and val == partition_score(N, u, v, w, cut)
    return checked, agree


def _random_partition(rng, N, heavy_cuts):
    u, v, w = random_tree(N, rng, rng.uniform(0.01, 1.0, N - 1))
    forest = SpanningForest(N, u, v, w)
    k = int(rng.integers(0, max(1, N // 3)))
    if heavy_cuts:
        order = np.argsort(-w, kind="stable")[:k]
    else:
        order = rng.permutation(N - 1)[:k]
    part = ClusterPartition.from_cuts(forest, order.tolist())
    return u, v, w, part


def check_negative_cluster_gets_cut(n_instances, rng):
    """A partition holding a negative cluster always admits a non-worsening cut."""
    checked = agree = 0
    while checked < n_instances:
        N = int(rng.integers(3, 31))
        u, v, w, part = _random_partition(rng, N, heavy_cuts=False)
        if min(info.validity for info in part.clusters.values()) >= 0:
            continue
        cut = np.array(part.is_cut)
        current = part.dbcvi
        got = part.find_best_cut(floor=current)
        brute, brute_val = _brute_best(N, u, v, w, cut, floor=current)
        checked += 1
        agree += got is not None and brute is not None and got == (brute, brute_val)
    return checked, agree


def _cluster_edges(part, cid):
    return [e for e in range(len(part.is_cut))
            if not part.is_cut[e] and part.cluster_of_edge(e) == cid]


def check_light_inner_edge_kept(n_instances, rng):
    """In a positive cluster, an edge lighter than its separation with heavier
    edges on both sides is never cut."""
    checked = agree = 0
    while checked < n_instances:
        N = int(rng.integers(5, 31))
        u, v, w, part = _random_partition(rng, N, heavy_cuts=True)
        cut = np.array(part.is_cut)
        best = part.find_best_cut()
        for cid, info in list(part.clusters.items()):
            if info.validity <= 0:
                continue
            for e in _cluster_edges(part, cid):
                if not w[e] < info.sep:
                    continue
                keep = ~cut
                keep[e] = False
                lab = components(N, u, v, keep)
                inside = keep & (lab[u] == lab[u[e]])
                other = keep & (lab[u] == lab[v[e]])
                if not (np.any(w[inside] > w[e]) and np.any(w[other] > w[e])):
                    continue
                trial = cut.copy()
                trial[e] = True
                brute = partition_score(N, u, v, w, trial)
                val = part.evaluate_cut(e)
                checked += 1
                agree += val < part.dbcvi and brute == val and best[0] != e
    return checked, agree


def check_heaviest_edge_rule(n_instances, rng):
    """In a positive cluster, cutting its heaviest edge does not lower the score
    iff the size-weighted side dispersion over the edge weight is at most the
    edge weight over the cluster separation."""
    checked = agree = 0
    while checked < n_instances:
        N = int(rng.integers(4, 31))
        u, v, w, part = _random_partition(rng, N, heavy_cuts=True)
        cut = np.array(part.is_cut)
        for cid, info in list(part.clusters.items()):
            edges = _cluster_edges(part, cid)
            if info.validity <= 0 or not edges or info.sep >= 1.0:
                continue
            e = max(edges, key=lambda f: w[f])
            wmax = w[e]
            keep = ~cut
            keep[e] = False
            lab = components(N, u, v, keep)
            sides = []
            for end in (u[e], v[e]):
                members = lab == lab[end]
                inner = keep & members[u] & members[v]
                sides.append((int(members.sum()), float(w[inner].max()) if inner.any() else 0.0))
            (n1, d1), (n2, d2) = sides
            lhs = (n1 * d1 + n2 * d2) / (n1 + n2) / wmax
            rhs = wmax / info.sep
            if abs(lhs - rhs) <= _MARGIN * rhs:
                continue
            val = part.evaluate_cut(e)
            trial = cut.copy()
            trial[e] = True
            checked += 1
            agree += ((val >= part.dbcvi) == (lhs <= rhs)
                      and val == partition_score(N, u, v, w, trial))
            if checked >= n_instances:
                break
    return checked, agree


PROPERTIES = {
    "heaviest-cut-nonnegative": check_heaviest_cut_nonnegative,
    "lightest-cut-nonpositive": check_lightest_cut_nonpositive,
    "second-heaviest-threshold": check_second_heaviest_first,
    "balanced-heaviest-first": check_balanced_heaviest_first,
    "negative-cluster-gets-cut": check_negative_cluster_gets_cut,
    "light-inner-edge-kept": check_light_inner_edge_kept,
    "heaviest-edge-rule": check_heaviest_edge_rule,
}

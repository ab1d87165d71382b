"""Greedy validity-maximizing cuts of a spanning forest.

:class:`ClusterPartition` holds the current clusters of a forest together
with the exact running score. Candidate cuts inside a cluster are scored in
one linear pass (:func:`double_dfs`) which yields, for every edge, the size,
dispersion and separation of both sides. Scores of clusters untouched by a
cut are kept, so after each cut only the two new clusters are rescanned.
"""

from collections import deque
from dataclasses import dataclass
import math

import numpy as np

from .exceptions import InvalidCutError, ParameterError
from .validity import cluster_term, cluster_validity, from_fixed, to_fixed

_INF = math.inf
# candidates further than this below a cluster's best cannot tie after rounding
_MARGIN = 1 << (1074 - 48)

_DESCEND, _FAR, _NEAR = 0, 1, 2


@dataclass
class ClusterInfo:
    size: int
    sep: float
    disp: float
    rep: int

    @property
    def validity(self):
        return cluster_validity(self.sep, self.disp)


@dataclass
class CutScan:
    """Two-sided statistics of every candidate cut in one cluster.

    ``left`` is the side holding the smaller endpoint of the edge and
    ``right`` the side holding the larger one. Separation of a side already
    accounts for the candidate edge itself.
    """

    edges: np.ndarray
    left_size: np.ndarray
    left_disp: np.ndarray
    left_sep: np.ndarray
    right_size: np.ndarray
    right_disp: np.ndarray
    right_sep: np.ndarray

    def __len__(self):
        return len(self.edges)

    def row(self, edge):
        i = int(np.flatnonzero(self.edges == edge)[0])
        return (int(self.left_size[i]), float(self.left_disp[i]), float(self.left_sep[i]),
                int(self.right_size[i]), float(self.right_disp[i]), float(self.right_sep[i]))


class ClusterPartition:
    """Clusters of a forest obtained by cutting some of its edges.

    Initially every connected component of the forest is one cluster. A
    cluster without incident cut edges has separation 1.

    Parameters
    ----------
    forest : SpanningForest
    """

    def __init__(self, forest):
        self.forest = forest
        self.n = forest.n
        indptr, nbr, eidx = forest.adjacency()
        self._indptr = indptr.tolist()
        self._nbr = nbr.tolist()
        self._eidx = eidx.tolist()
        self._eu = forest.u.tolist()
        self._ev = forest.v.tolist()
        self._w = forest.weight.tolist()
        n_edges = forest.n_edges
        self.is_cut = [False] * n_edges
        self.cutmin = [_INF] * self.n
        comp = forest.component_labels()
        self._label = comp.tolist()
        k = int(comp.max()) + 1 if self.n else 0
        size = np.bincount(comp, minlength=k)
        disp = np.zeros(k)
        if n_edges:
            np.maximum.at(disp, comp[forest.u], forest.weight)
        first = np.full(k, self.n, dtype=np.int64)
        np.minimum.at(first, comp, np.arange(self.n))
        self.clusters = {
            c: ClusterInfo(int(size[c]), 1.0, float(disp[c]), int(first[c])) for c in range(k)
        }
        self._fixed = {c: to_fixed(self._term(info)) for c, info in self.clusters.items()}
        self._total = sum(self._fixed.values())
        self._next_id = k
        self.cuts = []
        self.trace = []
        # side statistics per edge, valid for edges of scanned clusters
        self._un = [0] * n_edges
        self._ud = [0.0] * n_edges
        self._uc = [_INF] * n_edges
        self._vn = [0] * n_edges
        self._vd = [0.0] * n_edges
        self._vc = [_INF] * n_edges
        self._scanned = set()
        self._cands = {}
        self._dirty = set(self.clusters)

    # basic queries

    def _term(self, info):
        return cluster_term(info.size, self.n, info.sep, info.disp)

    @property
    def dbcvi(self):
        """Score of the current partition (correctly rounded exact sum)."""
        return from_fixed(self._total)

    @property
    def n_clusters(self):
        return len(self.clusters)

    @property
    def assignment(self):
        """Raw cluster id per node."""
        return np.asarray(self._label, dtype=np.int64)

    @property
    def labels(self):
        """Cluster labels ``0..K-1`` numbered by smallest member node."""
        raw = self.assignment
        _, first, inv = np.unique(raw, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.int64)
        rank[np.argsort(first)] = np.arange(len(first))
        return rank[inv]

    def cluster_of_edge(self, e):
        return self._label[self._eu[e]]

    def cluster_terms(self):
        return {c: self._term(info) for c, info in self.clusters.items()}

    def _check_uncut(self, e):
        if not 0 <= e < len(self.is_cut):
            raise InvalidCutError(f"edge index {e} is not in the forest")
        if self.is_cut[e]:
            raise InvalidCutError(f"edge ({self._eu[e]}, {self._ev[e]}) is already cut")

    def _other(self, f, x):
        return self._ev[f] if self._eu[f] == x else self._eu[f]

    # side statistics

    def _bfs_side(self, start, banned):
        """Size, max internal weight, min node cut weight of the side holding ``start``."""
        indptr, nbr, eidx, w, is_cut, cutmin = (
            self._indptr, self._nbr, self._eidx, self._w, self.is_cut, self.cutmin)
        seen = {start}
        stack = [start]
        disp = 0.0
        cmin = cutmin[start]
        while stack:
            x = stack.pop()
            for i in range(indptr[x], indptr[x + 1]):
                f = eidx[i]
                if f == banned or is_cut[f]:
                    continue
                y = nbr[i]
                if y in seen:
                    continue
                seen.add(y)
                stack.append(y)
                if w[f] > disp:
                    disp = w[f]
                if cutmin[y] < cmin:
                    cmin = cutmin[y]
        return seen, disp, cmin

    def _candidate(self, e, nu, du, cu, nv, dv, cv):
        """Exact score change of cutting ``e`` given its two sides."""
        w = self._w[e]
        cid = self._label[self._eu[e]]
        tu = cluster_term(nu, self.n, min(w, cu), du)
        tv = cluster_term(nv, self.n, min(w, cv), dv)
        return to_fixed(tu) + to_fixed(tv) - self._fixed[cid]

    def evaluate_cut(self, e):
        """Score after cutting forest edge ``e`` (edge index), state untouched.

        Only the cluster holding ``e`` is traversed; other clusters' cached
        terms are reused.
        """
        self._check_uncut(e)
        su, du, cu = self._bfs_side(self._eu[e], e)
        sv, dv, cv = self._bfs_side(self._ev[e], e)
        return from_fixed(self._total + self._candidate(e, len(su), du, cu, len(sv), dv, cv))

    # double DFS

    def scan(self, cid):
        """Run the double DFS over cluster ``cid`` and refresh its candidate cache."""
        info = self.clusters[cid]
        start = self._first_edge(info.rep)
        self._scanned.add(cid)
        if start is None:
            self._cands[cid] = []
            return []
        edges = self._double_dfs(start)
        n, w = self.n, self._w
        un, ud, uc, vn, vd, vc = self._un, self._ud, self._uc, self._vn, self._vd, self._vc
        base = self._fixed[cid]
        deltas = []
        for f in edges:
            wf = w[f]
            cu = uc[f]
            cv = vc[f]
            tu = cluster_term(un[f], n, wf if wf < cu else cu, ud[f])
            tv = cluster_term(vn[f], n, wf if wf < cv else cv, vd[f])
            deltas.append(to_fixed(tu) + to_fixed(tv) - base)
        top = max(deltas)
        cands = [(d, f) for d, f in zip(deltas, edges) if d >= top - _MARGIN]
        cands.sort(reverse=True)
        self._cands[cid] = cands
        return edges

    def _first_edge(self, x):
        for i in range(self._indptr[x], self._indptr[x + 1]):
            f = self._eidx[i]
            if not self.is_cut[f]:
                return f
        return None

    def _double_dfs(self, e0):
        """Fill both side statistics of every edge in the cluster containing ``e0``.

        A single deque drives the traversal. Descend entries are pushed to the
        front, so the far side of every edge is finished depth-first before
        its parent's. Near-side entries are pushed to the back and run only
        after all far sides are known, parents before children.
        """
        indptr, nbr, eidx, w, is_cut, cutmin = (
            self._indptr, self._nbr, self._eidx, self._w, self.is_cut, self.cutmin)
        eu = self._eu
        un, ud, uc, vn, vd, vc = self._un, self._ud, self._uc, self._vn, self._vd, self._vc
        s, t = eu[e0], self._ev[e0]
        parent = {s: e0, t: e0}
        summary = {}
        visited = [e0]
        q = deque()
        for x in (s, t):
            q.appendleft((_FAR, e0, x))
            for i in range(indptr[x], indptr[x + 1]):
                f = eidx[i]
                if f != e0 and not is_cut[f]:
                    q.appendleft((_DESCEND, f, nbr[i]))
        while q:
            kind, f, y = q.popleft()
            if kind == _DESCEND:
                # y is the far endpoint of f
                parent[y] = f
                visited.append(f)
                q.append((_NEAR, f, self._other(f, y)))
                q.appendleft((_FAR, f, y))
                for i in range(indptr[y], indptr[y + 1]):
                    g = eidx[i]
                    if g != f and not is_cut[g]:
                        q.appendleft((_DESCEND, g, nbr[i]))
            elif kind == _FAR:
                # side of f holding y: y plus all its child subtrees
                total = 0
                top1 = top2 = 0.0
                top1e = -1
                bot1 = bot2 = _INF
                bot1e = -1
                for i in range(indptr[y], indptr[y + 1]):
                    g = eidx[i]
                    if g == f or is_cut[g]:
                        continue
                    z = nbr[i]
                    if eu[g] == z:
                        sn, sd, sc = un[g], ud[g], uc[g]
                    else:
                        sn, sd, sc = vn[g], vd[g], vc[g]
                    total += sn
                    val = sd if sd > w[g] else w[g]
                    if val > top1:
                        top2, top1, top1e = top1, val, g
                    elif val > top2:
                        top2 = val
                    if sc < bot1:
                        bot2, bot1, bot1e = bot1, sc, g
                    elif sc < bot2:
                        bot2 = sc
                summary[y] = (total, top1, top1e, top2, bot1, bot1e, bot2)
                cm = cutmin[y] if cutmin[y] < bot1 else bot1
                if eu[f] == y:
                    un[f], ud[f], uc[f] = total + 1, top1, cm
                else:
                    vn[f], vd[f], vc[f] = total + 1, top1, cm
            else:
                # side of f holding x: x, its parent side and its other children
                x = y
                total, top1, top1e, top2, bot1, bot1e, bot2 = summary[x]
                far = self._other(f, x)
                if eu[f] == far:
                    fn = un[f]
                else:
                    fn = vn[f]
                p = parent[x]
                pnode = self._other(p, x)
                if eu[p] == pnode:
                    pn, pd, pc = un[p], ud[p], uc[p]
                else:
                    pn, pd, pc = vn[p], vd[p], vc[p]
                size = 1 + total - fn + pn
                disp = top2 if top1e == f else top1
                if pd > disp:
                    disp = pd
                if w[p] > disp:
                    disp = w[p]
                cm = bot2 if bot1e == f else bot1
                if pc < cm:
                    cm = pc
                if cutmin[x] < cm:
                    cm = cutmin[x]
                if eu[f] == x:
                    un[f], ud[f], uc[f] = size, disp, cm
                else:
                    vn[f], vd[f], vc[f] = size, disp, cm
        visited.sort()
        return visited

    def cut_scan(self, e0):
        """Side statistics for every edge of the cluster containing edge ``e0``."""
        self._check_uncut(e0)
        edges = self._double_dfs(e0)
        w = self._w
        cols = [[] for _ in range(6)]
        for f in edges:
            cols[0].append(self._un[f])
            cols[1].append(self._ud[f])
            cols[2].append(min(w[f], self._uc[f]))
            cols[3].append(self._vn[f])
            cols[4].append(self._vd[f])
            cols[5].append(min(w[f], self._vc[f]))
        return CutScan(np.asarray(edges, dtype=np.int64),
                       np.asarray(cols[0], dtype=np.int64), np.asarray(cols[1]), np.asarray(cols[2]),
                       np.asarray(cols[3], dtype=np.int64), np.asarray(cols[4]), np.asarray(cols[5]))

    # cut search

    def find_best_cut(self, floor=-_INF):
        """Best cut over all clusters, or ``None`` if none scores at least ``floor``.

        Among candidates with the same (rounded) score the one with the
        largest edge id wins, as in an ascending scan that keeps the last
        maximum. Only clusters changed since the last search are rescanned.

        Returns
        -------
        (edge index, score) or None
        """
        for cid in sorted(self._dirty):
            if cid in self.clusters:
                self.scan(cid)
        self._dirty.clear()
        best = None
        total = self._total
        for cid in self.clusters:
            for d, f in self._cands.get(cid, ()):
                val = from_fixed(total + d)
                if best is None or val > best[1] or (val == best[1] and f > best[0]):
                    best = (f, val)
        if best is None or best[1] < floor:
            return None
        return best

    def cut(self, e):
        """Cut forest edge ``e`` (edge index) and update clusters and score."""
        self._check_uncut(e)
        u, v, w = self._eu[e], self._ev[e], self._w[e]
        cid = self._label[u]
        before = self.dbcvi
        if cid in self._scanned and cid not in self._dirty:
            nu, du, cu = self._un[e], self._ud[e], self._uc[e]
            nv, dv, cv = self._vn[e], self._vd[e], self._vc[e]
            small = None
        else:
            su, du, cu = self._bfs_side(u, e)
            sv, dv, cv = self._bfs_side(v, e)
            nu, nv = len(su), len(sv)
            small = su if nu <= nv else sv
        old = self.clusters.pop(cid)
        self._total -= self._fixed.pop(cid)
        self._cands.pop(cid, None)
        self._scanned.discard(cid)
        self.is_cut[e] = True
        if w < self.cutmin[u]:
            self.cutmin[u] = w
        if w < self.cutmin[v]:
            self.cutmin[v] = w
        # the smaller side gets a fresh id; the larger keeps the old one
        if nu <= nv:
            moved, kept = (u, nu, du, cu), (v, nv, dv, cv)
        else:
            moved, kept = (v, nv, dv, cv), (u, nu, du, cu)
        new_id = self._next_id
        self._next_id += 1
        if small is None:
            small, _, _ = self._bfs_side(moved[0], -1)
        for x in small:
            self._label[x] = new_id
        for c, (rep, size, disp, cmin) in ((cid, kept), (new_id, moved)):
            info = ClusterInfo(size, min(w, cmin), disp, rep)
            self.clusters[c] = info
            self._fixed[c] = to_fixed(self._term(info))
            self._total += self._fixed[c]
            self._dirty.add(c)
        self.cuts.append(e)
        self.trace.append({
            "edge": [u, v],
            "weight": w,
            "dbcvi_before": before,
            "dbcvi_after": self.dbcvi,
            "split": [old.size, nu, nv],
        })
        return self

    @classmethod
    def from_cuts(cls, forest, cuts):
        """Partition obtained by cutting the given edge indices in order."""
        part = cls(forest)
        for e in cuts:
            part.cut(int(e))
        return part

    def cluster_report(self):
        """Per-cluster statistics keyed by canonical label."""
        labels = self.labels
        raw = self.assignment
        out = []
        seen = {}
        for x in range(self.n):
            seen.setdefault(int(labels[x]), int(raw[x]))
        for lab in sorted(seen):
            info = self.clusters[seen[lab]]
            out.append({"cluster": lab, "size": info.size, "sep": info.sep,
                        "disp": info.disp, "validity": info.validity})
        return out


def double_dfs(partition, cluster, start_edge):
    """Side statistics of every candidate cut in ``cluster``, starting at ``start_edge``.

    Raises
    ------
    InvalidCutError
        If ``start_edge`` is cut or lies outside ``cluster``.
    """
    partition._check_uncut(start_edge)
    if partition.cluster_of_edge(start_edge) != cluster:
        raise InvalidCutError(f"edge {start_edge} is not inside cluster {cluster}")
    return partition.cut_scan(start_edge)


def evaluate_cut(partition, edge):
    return partition.evaluate_cut(edge)


def find_best_cut(partition, floor=-_INF):
    return partition.find_best_cut(floor)


def dbmstclu(forest):
    """Greedy cutting that maximizes the global validity score.

    Starting from a floor of -1, each step takes the cut with the highest
    resulting score if that score is at least the current one, and stops when
    no cut qualifies or the score reaches 1.

    Parameters
    ----------
    forest : SpanningForest

    Returns
    -------
    ClusterPartition
    """
    part = ClusterPartition(forest)
    floor = -1.0
    while floor < 1.0:
        best = part.find_best_cut(floor)
        if best is None:
            break
        e, val = best
        part.cut(e)
        floor = val
    return part


def semst(forest, k):
    """Cut the ``k - 1`` heaviest forest edges (ties by ascending edge id)."""
    k = int(k)
    if not 1 <= k <= forest.n:
        raise ParameterError(f"k must lie in [1, {forest.n}], got {k}")
    if k - 1 > forest.n_edges:
        raise ParameterError(f"forest has only {forest.n_edges} edges, cannot form {k} clusters")
    order = np.lexsort((forest.edge_id, -forest.weight))
    return ClusterPartition.from_cuts(forest, order[: k - 1])

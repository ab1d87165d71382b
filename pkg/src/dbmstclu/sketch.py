"""Linear graph sketch and sketch-only minimum spanning forest recovery.

Every node ``i`` owns the signed incidence vector ``x_i`` over all ``M``
possible edges: ``+1`` at edge ``(i, v)`` for ``v > i`` and ``-1`` at edge
``(u, i)`` for ``u < i``. Summing the vectors of a node set cancels internal
edges and leaves only edges leaving the set, so Borůvka merging can be run on
summed sketches.

For each weight level ``k`` of a :class:`~dbmstclu.stream.WeightGrid` the
sketch summarizes the threshold subgraph of edges whose weight rounds to a
level ``<= k``. Each (node, level) pair holds ``T`` independent L0 samplers of
``L`` cells. Repetitions share their hash seed and fingerprint base across
nodes and weight levels so that sketches stay summable.

Storage keeps the same counters in a differenced layout: slot ``(q, l)``
holds only edges whose weight level is exactly ``q`` and whose sampler level
is exactly ``l``. The usual cells are recovered by a prefix sum over ``q`` and
a suffix sum over ``l``. A stream update therefore touches two slots per
endpoint and repetition, whatever the number of levels it crosses.
"""

import io
import math
import struct

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .exceptions import (
    EdgeRangeError,
    DegenerateEdgeError,
    IncompatibleSketchError,
    IncompleteComponentsError,
    ParameterError,
    StreamDomainError,
)
from .forest import SpanningForest
from .l0 import (
    MERSENNE61,
    PowerTable,
    SampleResult,
    SampleStatus,
    addmod61,
    default_levels,
    default_repetitions,
    levels_of,
    negmod61,
    summod61,
)
from .stream import WEIGHT_TOL, WeightGrid, edges_from_ids, edge_ids, iter_chunks, n_pairs

_MAGIC = b"DBSK"
_FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIIdd")


def _cum_tau(tau, axis, reverse=False):
    """Running sum modulo p along ``axis``."""
    out = np.array(tau, dtype=np.uint64, copy=True)
    out = np.moveaxis(out, axis, 0)
    idx = range(len(out) - 2, -1, -1) if reverse else range(1, len(out))
    step = 1 if reverse else -1
    for i in idx:
        out[i] = addmod61(out[i], out[i + step])
    return np.moveaxis(out, 0, axis)


def _suffix(a, axis):
    return np.flip(np.cumsum(np.flip(a, axis), axis=axis), axis)


def _recover_rows(phi, iota, tau, power, n_coords):
    """First one-sparse cell per row of ``(S, L)`` cell arrays.

    Returns ``(status, index, sign)`` arrays with :class:`SampleStatus` codes.
    """
    n_rows = phi.shape[0]
    status = np.full(n_rows, SampleStatus.FAIL, dtype=np.int8)
    index = np.full(n_rows, -1, dtype=np.int64)
    sign = np.zeros(n_rows, dtype=np.int64)
    empty = (phi[:, 0] == 0) & (iota[:, 0] == 0) & (tau[:, 0] == 0)
    status[empty] = SampleStatus.EMPTY
    unit = (phi == 1) | (phi == -1)
    j = iota * phi
    ok = unit & (j >= 0) & (j < n_coords) & ~empty[:, None]
    if np.any(ok):
        pw = power(np.where(ok, j, 0))
        expect = np.where(phi == 1, pw, negmod61(pw))
        ok &= tau == expect
    found = ok.any(axis=1)
    first = np.argmax(ok, axis=1)
    rows = np.flatnonzero(found)
    status[rows] = SampleStatus.EDGE
    index[rows] = j[rows, first[rows]]
    sign[rows] = phi[rows, first[rows]]
    return status, index, sign


class NodeSketch:
    """Standard (non-differenced) sketch of one vertex set.

    Attributes
    ----------
    phi, iota, tau : ndarray of shape (n_weight_levels, n_repetitions, n_levels)
        Cell counters; ``[k, t, l]`` is cell ``l`` of repetition ``t`` of the
        sampler for weight level ``k``.
    """

    def __init__(self, config, phi, iota, tau):
        self.config = config
        self.phi = phi
        self.iota = iota
        self.tau = tau

    @classmethod
    def zeros(cls, config, shape):
        return cls(config, np.zeros(shape, np.int64), np.zeros(shape, np.int64),
                   np.zeros(shape, np.uint64))

    def merge(self, other):
        """Counter-wise sum; sketches the sum of the two underlying vectors."""
        if self.config != other.config or self.phi.shape != other.phi.shape:
            raise IncompatibleSketchError("node sketches were built with different configurations")
        return NodeSketch(self.config, self.phi + other.phi, self.iota + other.iota,
                          addmod61(self.tau, other.tau))

    __add__ = merge

    def __eq__(self, other):
        if not isinstance(other, NodeSketch):
            return NotImplemented
        return (self.config == other.config and np.array_equal(self.phi, other.phi)
                and np.array_equal(self.iota, other.iota) and np.array_equal(self.tau, other.tau))

    def is_zero(self):
        return not (self.phi.any() or self.iota.any() or self.tau.any())

    def sample(self, level, repetition=0):
        """Sample an edge of the summarized vector in weight level ``level``."""
        n_coords, seeds, zs = self.config[1], self.config[4], self.config[5]
        power = PowerTable(zs[repetition], max(n_coords - 1, 1))
        st, j, s = _recover_rows(self.phi[level, repetition][None], self.iota[level, repetition][None],
                                 self.tau[level, repetition][None], power, n_coords)
        if st[0] == SampleStatus.EDGE:
            return SampleResult(SampleStatus.EDGE, int(j[0]), int(s[0]))
        return SampleResult(SampleStatus(int(st[0])))


class GraphSketch:
    """Linear sketch of a dynamic weighted graph on ``n`` nodes.

    Parameters
    ----------
    n : int
        Number of nodes.
    epsilon : float, default=0.1
        Relative step of the weight grid.
    w_min : float, default=1e-3
        Smallest grid value.
    n_repetitions : int, optional
        Sampler repetitions per (node, level), i.e. the Borůvka round budget.
        Defaults to ``ceil(log2 n) + 3``.
    n_levels : int, optional
        Cells per sampler. Defaults to ``ceil(log2 M) + 3``.
    random_state : int or Generator, optional
        Source of hash seeds and fingerprint bases.
    """

    def __init__(self, n, epsilon=0.1, w_min=1e-3, n_repetitions=None, n_levels=None,
                 random_state=None):
        n = int(n)
        if n < 1:
            raise ParameterError(f"n must be positive, got {n}")
        self.n = n
        self.n_coords = n_pairs(n)
        self.grid = WeightGrid(epsilon, w_min)
        self.n_repetitions = default_repetitions(n) if n_repetitions is None else int(n_repetitions)
        self.n_levels = default_levels(self.n_coords) if n_levels is None else int(n_levels)
        if self.n_repetitions < 1 or self.n_levels < 1:
            raise ParameterError("n_repetitions and n_levels must be positive")
        rng = np.random.default_rng(random_state)
        self.seeds = rng.integers(0, 1 << 63, size=self.n_repetitions, dtype=np.uint64)
        self.z = rng.integers(2, MERSENNE61 - 1, size=self.n_repetitions, dtype=np.uint64)
        shape = (n, self.grid.n_levels, self.n_repetitions, self.n_levels)
        self.phi = np.zeros(shape, dtype=np.int64)
        self.iota = np.zeros(shape, dtype=np.int64)
        self.tau = np.zeros(shape, dtype=np.uint64)
        self.updates_seen = 0
        self._powers = None
        self._mst = None

    @property
    def config(self):
        """Hashable tuple identifying compatible sketches."""
        return (self.n, self.n_coords, self.grid.epsilon, self.grid.w_min,
                tuple(int(s) for s in self.seeds), tuple(int(z) for z in self.z), self.n_levels)

    def counters_per_node(self):
        """Counters per node by formula: ``(r + 1) * T * L * 3``."""
        return self.grid.n_levels * self.n_repetitions * self.n_levels * 3

    def allocated_counters(self):
        return self.phi.size + self.iota.size + self.tau.size

    def _power_tables(self):
        if self._powers is None:
            self._powers = [PowerTable(z, max(self.n_coords - 1, 1)) for z in self.z]
        return self._powers

    # update phase

    def update(self, upd):
        """Apply one :class:`~dbmstclu.stream.EdgeUpdate`."""
        self.update_many([upd.u], [upd.v], [upd.w_old], [upd.delta])
        return self

    def update_many(self, u, v, w_old, delta):
        """Apply a batch of updates given as parallel arrays.

        Edges whose rounded level does not change are no-ops; otherwise the
        edge leaves its old level slot and enters the new one.
        """
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        w_old = np.asarray(w_old, dtype=np.float64)
        delta = np.asarray(delta, dtype=np.float64)
        if u.size == 0:
            return self
        if np.any(u == v):
            raise DegenerateEdgeError("self-loop in update batch")
        if np.any((u < 0) | (v < 0) | (u >= self.n) | (v >= self.n)):
            raise EdgeRangeError(f"node id outside [0, {self.n})")
        if np.any((w_old < 0) | (w_old > 1)):
            raise StreamDomainError("previous weight outside [0, 1]")
        w_new = w_old + delta
        if np.any((w_new < -WEIGHT_TOL) | (w_new > 1 + WEIGHT_TOL)):
            raise StreamDomainError("update drives a weight outside [0, 1]")
        w_new = np.where(np.abs(w_new) <= WEIGHT_TOL, 0.0, np.minimum(w_new, 1.0))
        q_old = self._levels(w_old)
        q_new = self._levels(w_new)
        moved = q_old != q_new
        j = edge_ids(u, v, self.n)
        rem = moved & (q_old >= 0)
        add = moved & (q_new >= 0)
        ev_j = np.concatenate([j[rem], j[add]])
        ev_q = np.concatenate([q_old[rem], q_new[add]])
        ev_s = np.concatenate([-np.ones(rem.sum(), np.int64), np.ones(add.sum(), np.int64)])
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        ev_lo = np.concatenate([lo[rem], lo[add]])
        ev_hi = np.concatenate([hi[rem], hi[add]])
        self._apply_events(ev_j, ev_q, ev_s, ev_lo, ev_hi)
        self.updates_seen += int(u.size)
        self._mst = None
        return self

    def _levels(self, w):
        q = np.full(w.shape, -1, dtype=np.int64)
        pos = w > 0
        q[pos] = np.searchsorted(self.grid.values, w[pos], side="left")
        return q

    def _apply_events(self, j, q, s, lo, hi):
        if j.size == 0:
            return
        R, T, L = self.grid.n_levels, self.n_repetitions, self.n_levels
        nodes = np.concatenate([lo, hi])
        signs = np.concatenate([s, -s])
        jj = np.concatenate([j, j])
        qq = np.concatenate([q, q])
        idx_parts, phi_parts, tau_parts, j_parts = [], [], [], []
        powers = self._power_tables()
        for t in range(T):
            lev = levels_of(j, self.seeds[t], L)
            pw = powers[t](j)
            lev2 = np.concatenate([lev, lev])
            pw2 = np.concatenate([pw, pw])
            idx_parts.append(((nodes * R + qq) * T + t) * L + lev2)
            phi_parts.append(signs)
            j_parts.append(jj)
            tau_parts.append(np.where(signs > 0, pw2, negmod61(pw2)))
        idx = np.concatenate(idx_parts)
        sg = np.concatenate(phi_parts)
        jv = np.concatenate(j_parts)
        tv = np.concatenate(tau_parts)
        order = np.argsort(idx, kind="stable")
        idx, sg, jv, tv = idx[order], sg[order], jv[order], tv[order]
        starts = np.flatnonzero(np.r_[True, idx[1:] != idx[:-1]])
        cells = idx[starts]
        dphi = np.add.reduceat(sg, starts)
        diota = np.add.reduceat(sg * jv, starts)
        dtau = summod61(tv, starts)
        flat_phi = self.phi.reshape(-1)
        flat_iota = self.iota.reshape(-1)
        flat_tau = self.tau.reshape(-1)
        flat_phi[cells] += dphi
        flat_iota[cells] += diota
        flat_tau[cells] = addmod61(flat_tau[cells], dtau)

    def fit_stream(self, updates, chunk_size=20000):
        """Consume an iterable of updates in one pass."""
        for u, v, w_old, delta in iter_chunks(updates, chunk_size):
            self.update_many(u, v, w_old, delta)
        return self

    # query phase

    def is_zero(self):
        return not (self.phi.any() or self.iota.any() or self.tau.any())

    def node_sketch(self, i):
        """Standard cells of node ``i`` for every weight level and repetition."""
        return self.set_sketch([i])

    def set_sketch(self, nodes):
        """Sum of the node sketches of ``nodes``."""
        nodes = np.asarray(nodes, dtype=np.int64)
        phi = self.phi[nodes].sum(axis=0)
        iota = self.iota[nodes].sum(axis=0)
        tau = self.tau[nodes[0]]
        for i in nodes[1:]:
            tau = addmod61(tau, self.tau[i])
        phi = _suffix(np.cumsum(phi, axis=0), 2)
        iota = _suffix(np.cumsum(iota, axis=0), 2)
        tau = _cum_tau(_cum_tau(tau, 0), 2, reverse=True)
        return NodeSketch(self.config, phi, iota, tau)

    def _level_slice(self, k):
        """Exact-level contribution ``(N, T, L)`` of weight level ``k``."""
        return self.phi[:, k], self.iota[:, k], self.tau[:, k]

    def _boruvka(self, cur, ds, level, edges):
        """Merge supernodes of ``ds`` using the threshold-graph counters ``cur``.

        ``cur`` holds ``(phi, iota, tau)`` of shape ``(N, T, L)`` with
        sampler levels still differenced. New forest edges are appended to
        ``edges`` as ``(u, v, level)``.
        """
        phi, iota, tau = cur
        powers = self._power_tables()
        n = self.n
        for t in range(self.n_repetitions):
            labels = np.fromiter((ds[i] for i in range(n)), dtype=np.int64, count=n)
            rows = self._supernode_cells(labels, phi[:, t], iota[:, t], tau[:, t])
            reps, sphi, siota, stau = rows
            status, j, sign = _recover_rows(sphi, siota, stau, powers[t], self.n_coords)
            if np.all(status == SampleStatus.EMPTY):
                return
            hit = np.flatnonzero(status == SampleStatus.EDGE)
            if hit.size == 0:
                continue
            a, b = edges_from_ids(j[hit], n)
            own = reps[hit]
            inside = np.where(sign[hit] > 0, labels[a] == own, labels[b] == own)
            outside = np.where(sign[hit] > 0, labels[b] != own, labels[a] != own)
            valid = inside & outside
            for x, y in zip(a[valid].tolist(), b[valid].tolist()):
                if ds.merge(x, y):
                    edges.append((x, y, level))
        labels = np.fromiter((ds[i] for i in range(n)), dtype=np.int64, count=n)
        _, sphi, siota, stau = self._supernode_cells(labels, phi[:, 0], iota[:, 0], tau[:, 0])
        if np.any((sphi[:, 0] != 0) | (siota[:, 0] != 0) | (stau[:, 0] != 0)):
            raise IncompleteComponentsError(
                f"sampler budget of {self.n_repetitions} rounds exhausted at weight level {level}",
                labels=_canonical_labels(labels), level=level)

    def _supernode_cells(self, labels, phi, iota, tau):
        order = np.argsort(labels, kind="stable")
        sl = labels[order]
        starts = np.flatnonzero(np.r_[True, sl[1:] != sl[:-1]])
        sphi = _suffix(np.add.reduceat(phi[order], starts, axis=0), 1)
        siota = _suffix(np.add.reduceat(iota[order], starts, axis=0), 1)
        t = tau[order]
        stau = np.stack([summod61(t[:, l], starts) for l in range(t.shape[1])], axis=1)
        stau = _cum_tau(stau, 1, reverse=True)
        return sl[starts], sphi, siota, stau

    def connected_components(self, level=None):
        """Component labels of the threshold graph at ``level`` (default: top).

        Labels are consecutive integers numbered by smallest member node.
        """
        level = self.grid.r if level is None else int(level)
        if not 0 <= level <= self.grid.r:
            raise ParameterError(f"level must lie in [0, {self.grid.r}]")
        phi = self.phi[:, : level + 1].sum(axis=1)
        iota = self.iota[:, : level + 1].sum(axis=1)
        tau = self.tau[:, 0].copy()
        for k in range(1, level + 1):
            tau = addmod61(tau, self.tau[:, k])
        ds = DisjointSet(range(self.n))
        self._boruvka((phi, iota, tau), ds, level, [])
        return _canonical_labels(np.fromiter((ds[i] for i in range(self.n)), np.int64, self.n))

    def component_counts(self):
        """Number of connected components of every threshold graph, level 0..r."""
        return self._recover()[1]

    def approx_mst(self):
        """Minimum spanning forest of the level-rounded graph, from the sketch alone.

        Levels are processed in increasing order and each level's Borůvka run
        starts from the components of the previous level, so an edge enters the
        forest at the first level where it joins two components. Its weight is
        reported as that level's grid value, capped at 1, so quantizing a
        forest weight gives back its level.

        Raises
        ------
        IncompleteComponentsError
            If a level does not converge within the sampler budget. The error
            carries the partial forest.
        """
        return self._recover()[0]

    def _recover(self):
        if self._mst is not None:
            return self._mst
        n = self.n
        ds = DisjointSet(range(n))
        phi = np.zeros((n, self.n_repetitions, self.n_levels), np.int64)
        iota = np.zeros_like(phi)
        tau = np.zeros(phi.shape, np.uint64)
        edges = []
        counts = []
        n_comp = n
        for k in range(self.grid.n_levels):
            dphi, diota, dtau = self._level_slice(k)
            if dphi.any() or diota.any() or dtau.any():
                phi += dphi
                iota += diota
                tau = addmod61(tau, dtau)
                try:
                    self._boruvka((phi, iota, tau), ds, k, edges)
                except IncompleteComponentsError as exc:
                    exc.forest = self._forest(edges)
                    raise
                n_comp = n - len(edges)
            counts.append(n_comp)
        self._mst = (self._forest(edges), np.asarray(counts, dtype=np.int64))
        return self._mst

    def _forest(self, edges):
        if edges:
            u, v, k = map(np.asarray, zip(*edges))
        else:
            u = v = k = np.zeros(0, np.int64)
        # the top grid value may overshoot 1; weights never do
        return SpanningForest(self.n, u, v, np.minimum(self.grid.values[k], 1.0))

    def mst_weight_estimate(self):
        """Forest weight estimate from threshold-graph component counts.

        ``w_min * (N - a**(r+1) * cc_r + sum_k (a**(k+1) - a**k) * cc_k)``
        with ``a = 1 + epsilon``.
        """
        counts = self.component_counts()
        if np.any(np.diff(counts) > 0):
            raise AssertionError("component counts must be nonincreasing across levels")
        a = 1.0 + self.grid.epsilon
        r = self.grid.r
        powers = a ** np.arange(r + 2, dtype=np.float64)
        lam = powers[1:] - powers[:-1]
        total = math.fsum([float(self.n), -powers[r + 1] * counts[r]]
                          + (lam * counts).tolist())
        return self.grid.w_min * total

    # persistence

    def to_bytes(self):
        """Versioned little-endian snapshot of configuration and counters."""
        buf = io.BytesIO()
        buf.write(_HEADER.pack(_MAGIC, _FORMAT_VERSION, self.n, self.grid.n_levels,
                               self.n_repetitions, self.n_levels, self.grid.epsilon,
                               self.grid.w_min))
        buf.write(struct.pack("<Q", self.updates_seen))
        buf.write(self.seeds.astype("<u8").tobytes())
        buf.write(self.z.astype("<u8").tobytes())
        buf.write(self.phi.astype("<i8").tobytes())
        buf.write(self.iota.astype("<i8").tobytes())
        buf.write(self.tau.astype("<u8").tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data):
        magic, version, n, R, T, L, eps, w_min = _HEADER.unpack_from(data)
        if magic != _MAGIC or version != _FORMAT_VERSION:
            raise IncompatibleSketchError("not a sketch snapshot of a supported version")
        sk = cls(n, eps, w_min, n_repetitions=T, n_levels=L, random_state=0)
        if sk.grid.n_levels != R:
            raise IncompatibleSketchError("weight grid mismatch in snapshot")
        off = _HEADER.size
        (sk.updates_seen,) = struct.unpack_from("<Q", data, off)
        off += 8

        def take(dtype, count):
            nonlocal off
            arr = np.frombuffer(data, dtype=dtype, count=count, offset=off)
            off += arr.nbytes
            return arr

        sk.seeds = take("<u8", T).astype(np.uint64)
        sk.z = take("<u8", T).astype(np.uint64)
        size = sk.phi.size
        sk.phi = take("<i8", size).astype(np.int64).reshape(sk.phi.shape)
        sk.iota = take("<i8", size).astype(np.int64).reshape(sk.iota.shape)
        sk.tau = take("<u8", size).astype(np.uint64).reshape(sk.tau.shape)
        if off != len(data):
            raise IncompatibleSketchError("trailing bytes in sketch snapshot")
        return sk


def _canonical_labels(roots):
    """Relabel component representatives as 0, 1, ... by smallest member."""
    _, first, inv = np.unique(roots, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first)] = np.arange(len(first))
    return rank[inv]

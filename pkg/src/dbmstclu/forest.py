"""Spanning forests: container, serialization and the exact Kruskal oracle."""

import json
import math

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .exceptions import DegenerateEdgeError, EdgeRangeError, ParameterError, WeightRangeError
from .stream import edge_ids


class SpanningForest:
    """Acyclic weighted edge set over nodes ``0..n-1``.

    Edges are stored with ``u < v`` and sorted by canonical edge id, which is
    the scan order used by the clustering engine.

    Parameters
    ----------
    n : int
        Number of nodes.
    u, v : array-like of int
        Edge endpoints.
    weight : array-like of float
        Edge weights in ``(0, 1]``.
    metadata : dict, optional
        Free-form provenance carried through serialization.
    """

    def __init__(self, n, u, v, weight, metadata=None, validate=True):
        self.n = int(n)
        u = np.asarray(u, dtype=np.int64).reshape(-1)
        v = np.asarray(v, dtype=np.int64).reshape(-1)
        w = np.asarray(weight, dtype=np.float64).reshape(-1)
        if not (len(u) == len(v) == len(w)):
            raise ParameterError("u, v and weight must have equal length")
        if self.n < 1:
            raise ParameterError("a forest needs at least one node")
        if np.any(u == v):
            raise DegenerateEdgeError("self-loop in forest")
        ids = edge_ids(u, v, self.n)
        if np.any(~((w > 0) & (w <= 1))):
            raise WeightRangeError("forest weights must lie in (0, 1]")
        order = np.argsort(ids, kind="stable")
        self.u = np.minimum(u, v)[order]
        self.v = np.maximum(u, v)[order]
        self.weight = w[order]
        self.edge_id = ids[order]
        self.metadata = dict(metadata or {})
        if validate:
            if len(self.edge_id) > 1 and np.any(self.edge_id[1:] == self.edge_id[:-1]):
                raise ParameterError("duplicate edge in forest")
            ds = DisjointSet(range(self.n))
            for a, b in zip(self.u.tolist(), self.v.tolist()):
                if not ds.merge(a, b):
                    raise ParameterError(f"edge ({a}, {b}) closes a cycle")
        self._adj = None
        self._labels = None

    @property
    def n_edges(self):
        return len(self.u)

    @property
    def edges(self):
        """List of ``(u, v, weight)`` tuples in edge-id order."""
        return list(zip(self.u.tolist(), self.v.tolist(), self.weight.tolist()))

    def total_weight(self):
        return math.fsum(self.weight.tolist())

    def adjacency(self):
        """CSR adjacency ``(indptr, neighbor, edge_index)``."""
        if self._adj is None:
            ends = np.concatenate([self.u, self.v])
            other = np.concatenate([self.v, self.u])
            eidx = np.concatenate([np.arange(self.n_edges)] * 2)
            order = np.lexsort((eidx, ends))
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.add.at(indptr, ends + 1, 1)
            self._adj = (np.cumsum(indptr), other[order], eidx[order])
        return self._adj

    def neighbors(self, i):
        """Pairs ``(neighbor, edge_index)`` incident to node ``i``."""
        indptr, nbr, eidx = self.adjacency()
        s, e = indptr[i], indptr[i + 1]
        return list(zip(nbr[s:e].tolist(), eidx[s:e].tolist()))

    def component_labels(self):
        """Component index per node, numbered by smallest member."""
        if self._labels is None:
            ds = DisjointSet(range(self.n))
            for a, b in zip(self.u.tolist(), self.v.tolist()):
                ds.merge(a, b)
            roots = np.fromiter((ds[i] for i in range(self.n)), np.int64, self.n)
            _, first, inv = np.unique(roots, return_index=True, return_inverse=True)
            rank = np.empty(len(first), dtype=np.int64)
            rank[np.argsort(first)] = np.arange(len(first))
            self._labels = rank[inv]
        return self._labels

    @property
    def n_components(self):
        return self.n - self.n_edges

    def edge_index(self, u, v):
        """Position of edge ``(u, v)`` in this forest's edge arrays."""
        j = int(edge_ids([u], [v], self.n)[0])
        pos = int(np.searchsorted(self.edge_id, j))
        if pos >= self.n_edges or self.edge_id[pos] != j:
            raise EdgeRangeError(f"edge ({u}, {v}) is not in the forest")
        return pos

    def __eq__(self, other):
        if not isinstance(other, SpanningForest):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.u, other.u)
                and np.array_equal(self.v, other.v) and np.array_equal(self.weight, other.weight))

    def __repr__(self):
        return f"SpanningForest(n={self.n}, n_edges={self.n_edges})"

    # serialization

    def to_lines(self):
        """Text lines ``u v w`` sorted by ``(w, edge id)``."""
        order = np.lexsort((self.edge_id, self.weight))
        return [f"{int(self.u[i])} {int(self.v[i])} {float(self.weight[i])!r}" for i in order]

    def to_text(self, header=None):
        lines = []
        if header is not None:
            lines.append(f"# dbmstclu {json.dumps(header, sort_keys=True)}")
        lines.append(f"N {self.n}")
        lines.extend(self.to_lines())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        n = None
        metadata = {}
        rows = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if line.startswith("# dbmstclu "):
                metadata = json.loads(line[len("# dbmstclu "):])
                continue
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if n is None:
                if len(parts) != 2 or parts[0] != "N":
                    raise ParameterError(f"line {lineno}: expected header 'N <count>'")
                n = int(parts[1])
                continue
            if len(parts) != 3:
                raise ParameterError(f"line {lineno}: expected 'u v w'")
            rows.append((int(parts[0]), int(parts[1]), float(parts[2])))
        if n is None:
            raise ParameterError("missing header 'N <count>'")
        u, v, w = (np.array(c) for c in zip(*rows)) if rows else ([], [], [])
        return cls(n, u, v, w, metadata=metadata)

    def to_json(self, config=None):
        order = np.lexsort((self.edge_id, self.weight))
        doc = {
            "config": config if config is not None else self.metadata,
            "n": self.n,
            "edges": [[int(self.u[i]), int(self.v[i]), float(self.weight[i])] for i in order],
        }
        return json.dumps(doc, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        edges = doc["edges"]
        u, v, w = (np.array(c) for c in zip(*edges)) if edges else ([], [], [])
        return cls(doc["n"], u, v, w, metadata=doc.get("config", {}))

    def save(self, path, config=None):
        path = str(path)
        with open(path, "w") as fh:
            if path.endswith(".json"):
                fh.write(self.to_json(config))
            else:
                fh.write(self.to_text(config if config is not None else self.metadata or None))

    @classmethod
    def load(cls, path):
        path = str(path)
        with open(path) as fh:
            text = fh.read()
        if path.endswith(".json"):
            return cls.from_json(text)
        return cls.from_text(text)


def exact_mst(u, v, weight, n):
    """Kruskal minimum spanning forest with ties broken by ascending edge id.

    Parameters
    ----------
    u, v : array-like of int
    weight : array-like of float
        Weights in ``(0, 1]``.
    n : int
        Number of nodes.

    Returns
    -------
    SpanningForest
    """
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    w = np.asarray(weight, dtype=np.float64)
    if np.any(~((w > 0) & (w <= 1))):
        raise WeightRangeError("edge weights must lie in (0, 1]")
    ids = edge_ids(u, v, n) if len(u) else np.zeros(0, np.int64)
    order = np.lexsort((ids, w))
    ds = DisjointSet(range(n))
    keep = []
    for i in order.tolist():
        if ds.merge(int(u[i]), int(v[i])):
            keep.append(i)
            if len(keep) == n - 1:
                break
    keep = np.asarray(keep, dtype=np.int64)
    return SpanningForest(n, u[keep], v[keep], w[keep], validate=False)

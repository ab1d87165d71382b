"""Edge indexing, weight quantization and the turnstile update stream.

Nodes are dense integers ``0..n-1``. An undirected edge ``(u, v)`` with
``u < v`` is identified by its lexicographic rank among all ``n(n-1)/2``
unordered pairs. Updates carry the previous weight of the edge so that a
consumer can reconcile threshold-subgraph membership without storing weights.

Text wire format::

    # comment
    N 5
    0 1 0.0 0.5
    0 1 0.5 -0.5

Binary wire format: little-endian ``u32`` node count followed by records of
``(u32 u, u32 v, f64 w_old, f64 delta)``.
"""

from dataclasses import dataclass, field
import math
import struct

import numpy as np

from .exceptions import (
    DegenerateEdgeError,
    EdgeRangeError,
    ParameterError,
    StreamDomainError,
    StreamParseError,
    WeightRangeError,
)

# Accumulated float error tolerated when a weight is driven to 0 or 1.
WEIGHT_TOL = 1e-12

BINARY_RECORD = np.dtype([("u", "<u4"), ("v", "<u4"), ("w_old", "<f8"), ("delta", "<f8")])
_BINARY_HEADER = struct.Struct("<I")


def n_pairs(n):
    """Number of unordered node pairs ``n(n-1)/2``."""
    return n * (n - 1) // 2


def canonical_edge_id(u, v, n):
    """Lexicographic rank of the unordered pair ``{u, v}`` among all pairs of ``n`` nodes.

    >>> canonical_edge_id(2, 1, 4)
    3
    """
    u, v = int(u), int(v)
    if u == v:
        raise DegenerateEdgeError(f"self-loop ({u}, {v}) has no edge id")
    if not (0 <= u < n and 0 <= v < n):
        raise EdgeRangeError(f"edge ({u}, {v}) outside node range [0, {n})")
    if u > v:
        u, v = v, u
    return u * n - u * (u + 1) // 2 + (v - u - 1)


def edge_from_id(j, n):
    """Inverse of :func:`canonical_edge_id`; returns ``(u, v)`` with ``u < v``."""
    j = int(j)
    if not 0 <= j < n_pairs(n):
        raise EdgeRangeError(f"edge id {j} outside [0, {n_pairs(n)})")
    # row u starts at u*n - u(u+1)/2; solve the quadratic then fix rounding
    u = int((2 * n - 1 - math.sqrt((2 * n - 1) ** 2 - 8 * j)) // 2)
    while u > 0 and _row_start(u, n) > j:
        u -= 1
    while _row_start(u + 1, n) <= j:
        u += 1
    return u, j - _row_start(u, n) + u + 1


def _row_start(u, n):
    return u * n - u * (u + 1) // 2


def edge_ids(u, v, n):
    """Vectorized :func:`canonical_edge_id` (inputs need not be ordered)."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if np.any(u == v):
        raise DegenerateEdgeError("self-loops have no edge id")
    if np.any((u < 0) | (v < 0) | (u >= n) | (v >= n)):
        raise EdgeRangeError(f"edge endpoints outside node range [0, {n})")
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    return lo * n - lo * (lo + 1) // 2 + (hi - lo - 1)


def edges_from_ids(j, n):
    """Vectorized :func:`edge_from_id`."""
    j = np.asarray(j, dtype=np.int64)
    if np.any((j < 0) | (j >= n_pairs(n))):
        raise EdgeRangeError(f"edge ids outside [0, {n_pairs(n)})")
    starts = np.arange(n, dtype=np.int64)
    starts = starts * n - starts * (starts + 1) // 2
    u = np.searchsorted(starts, j, side="right") - 1
    return u, j - starts[u] + u + 1


@dataclass(frozen=True)
class WeightGrid:
    """Geometric weight grid ``w_min * (1 + epsilon)**k`` for ``k = 0..r``.

    ``r`` is the first level whose grid value reaches 1, so every weight in
    ``[w_min, 1]`` rounds up to a level in ``0..r`` with at most a
    ``(1 + epsilon)`` relative overestimate. Weights below ``w_min`` clamp to
    level 0.
    """

    epsilon: float = 0.1
    w_min: float = 1e-3
    values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0 < self.w_min <= 1:
            raise ParameterError(f"w_min must lie in (0, 1], got {self.w_min}")
        r = max(0, math.ceil(math.log(1.0 / self.w_min) / math.log1p(self.epsilon)) - 1)
        while self.w_min * (1 + self.epsilon) ** r < 1.0:
            r += 1
        values = self.w_min * (1 + self.epsilon) ** np.arange(r + 1, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def r(self):
        """Index of the top level."""
        return len(self.values) - 1

    @property
    def n_levels(self):
        return len(self.values)

    def value(self, k):
        return float(self.values[k])

    def quantize(self, w):
        """Smallest level whose grid value is at least ``w``."""
        w = float(w)
        if not 0 < w <= 1:
            raise WeightRangeError(f"weight {w} outside (0, 1]")
        return int(np.searchsorted(self.values, w, side="left"))

    def quantize_many(self, w):
        w = np.asarray(w, dtype=np.float64)
        if np.any(~((w > 0) & (w <= 1))):
            raise WeightRangeError("weights must lie in (0, 1]")
        return np.searchsorted(self.values, w, side="left")


@dataclass(frozen=True)
class EdgeUpdate:
    """One turnstile element: edge ``(u, v)`` moves from ``w_old`` to ``w_old + delta``.

    Endpoints are stored in canonical order (``u < v``).
    """

    u: int
    v: int
    w_old: float
    delta: float

    def __post_init__(self):
        u, v = int(self.u), int(self.v)
        if u == v:
            raise DegenerateEdgeError(f"self-loop ({u}, {v}) in update")
        if u < 0 or v < 0:
            raise EdgeRangeError(f"negative node id in ({u}, {v})")
        if u > v:
            u, v = v, u
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w_old", float(self.w_old))
        object.__setattr__(self, "delta", float(self.delta))
        if not 0 <= self.w_old <= 1:
            raise StreamDomainError(f"previous weight {self.w_old} outside [0, 1]")
        w = self.w_old + self.delta
        if w < -WEIGHT_TOL:
            raise StreamDomainError(f"update drives edge ({u}, {v}) to negative weight {w}")
        if w > 1 + WEIGHT_TOL:
            raise StreamDomainError(f"update drives edge ({u}, {v}) above 1 ({w})")

    @property
    def edge(self):
        return (self.u, self.v)

    @property
    def w_new(self):
        """Resulting weight, with float residue around 0 and 1 snapped."""
        w = self.w_old + self.delta
        if abs(w) <= WEIGHT_TOL:
            return 0.0
        return min(w, 1.0)


def parse_stream(lines):
    """Parse text lines into ``(n, iterator of EdgeUpdate)``.

    The header ``N <count>`` must precede the first update. Updates are yielded
    lazily, one line at a time, so a file object can be consumed in one pass.
    """
    it = enumerate(lines, start=1)
    n = None
    for lineno, raw in it:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] != "N":
            raise StreamParseError(f"expected header 'N <count>', got {raw.rstrip()!r}", lineno)
        try:
            n = int(parts[1])
        except ValueError:
            raise StreamParseError(f"bad node count {parts[1]!r}", lineno) from None
        if n < 1:
            raise StreamParseError(f"node count must be positive, got {n}", lineno)
        break
    if n is None:
        raise StreamParseError("missing header 'N <count>'")
    return n, _iter_updates(it, n)


def _iter_updates(it, n):
    for lineno, raw in it:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise StreamParseError(f"expected 'u v w_old delta', got {raw.rstrip()!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
            w_old, delta = float(parts[2]), float(parts[3])
        except ValueError:
            raise StreamParseError(f"non-numeric field in {raw.rstrip()!r}", lineno) from None
        if not (0 <= u < n and 0 <= v < n):
            raise StreamParseError(f"node id outside [0, {n}) in {raw.rstrip()!r}", lineno)
        if u == v:
            raise StreamParseError(f"self-loop in {raw.rstrip()!r}", lineno)
        try:
            yield EdgeUpdate(u, v, w_old, delta)
        except StreamDomainError as exc:
            raise StreamDomainError(str(exc), lineno) from None


def format_update(upd):
    return f"{upd.u} {upd.v} {upd.w_old!r} {upd.delta!r}"


def serialize_stream(n, updates, header_comment=None):
    """Yield text lines (without newline) for ``n`` and ``updates``."""
    if header_comment:
        for line in str(header_comment).splitlines():
            yield f"# {line}"
    yield f"N {n}"
    for upd in updates:
        yield format_update(upd)


def write_stream(path, n, updates, header_comment=None):
    with open(path, "w") as fh:
        for line in serialize_stream(n, updates, header_comment):
            fh.write(line)
            fh.write("\n")


def read_stream(path):
    """Read a whole text stream file into ``(n, list of EdgeUpdate)``."""
    with open(path) as fh:
        n, updates = parse_stream(fh)
        return n, list(updates)


def updates_from_arrays(u, v, w_old, delta):
    for a, b, wo, d in zip(np.asarray(u).tolist(), np.asarray(v).tolist(),
                           np.asarray(w_old).tolist(), np.asarray(delta).tolist()):
        yield EdgeUpdate(a, b, wo, d)


def updates_to_arrays(updates):
    """Collect updates into ``(u, v, w_old, delta)`` numpy arrays."""
    updates = list(updates)
    u = np.fromiter((x.u for x in updates), dtype=np.int64, count=len(updates))
    v = np.fromiter((x.v for x in updates), dtype=np.int64, count=len(updates))
    w_old = np.fromiter((x.w_old for x in updates), dtype=np.float64, count=len(updates))
    delta = np.fromiter((x.delta for x in updates), dtype=np.float64, count=len(updates))
    return u, v, w_old, delta


def iter_chunks(updates, size):
    """Group an update iterator into array chunks of at most ``size`` updates."""
    buf = []
    for upd in updates:
        buf.append(upd)
        if len(buf) >= size:
            yield updates_to_arrays(buf)
            buf = []
    if buf:
        yield updates_to_arrays(buf)


def encode_binary(n, u, v, w_old, delta):
    rec = np.empty(len(u), dtype=BINARY_RECORD)
    rec["u"], rec["v"], rec["w_old"], rec["delta"] = u, v, w_old, delta
    return _BINARY_HEADER.pack(n) + rec.tobytes()


def decode_binary(data):
    """Decode the binary wire format into ``(n, u, v, w_old, delta)`` arrays."""
    if len(data) < _BINARY_HEADER.size:
        raise StreamParseError("binary stream shorter than its header")
    (n,) = _BINARY_HEADER.unpack_from(data)
    body = memoryview(data)[_BINARY_HEADER.size:]
    if len(body) % BINARY_RECORD.itemsize:
        raise StreamParseError("binary stream has a truncated record")
    rec = np.frombuffer(body, dtype=BINARY_RECORD)
    u = rec["u"].astype(np.int64)
    v = rec["v"].astype(np.int64)
    if np.any((u >= n) | (v >= n)):
        raise StreamParseError(f"node id outside [0, {n})")
    if np.any(u == v):
        raise StreamParseError("self-loop in binary stream")
    return n, u, v, rec["w_old"].astype(np.float64), rec["delta"].astype(np.float64)


def write_binary_stream(path, n, u, v, w_old, delta):
    with open(path, "wb") as fh:
        fh.write(encode_binary(n, u, v, w_old, delta))


def read_binary_stream(path):
    with open(path, "rb") as fh:
        return decode_binary(fh.read())

"""One-sparse recovery cells and multi-level L0 samplers.

A cell keeps three linear counters of a signed integer vector ``x``::

    phi  = sum_j x_j
    iota = sum_j j * x_j
    tau  = sum_j x_j * z**j  (mod p)

A sampler keeps ``L`` cells. Coordinate ``j`` lands in cells ``0..level(j)``
where ``level(j)`` is the number of trailing zero bits of a seeded 64-bit
hash of ``j``, so cell ``l`` sees each coordinate with probability ``2**-l``.

Besides the scalar reference types, this module provides the vectorized
modular arithmetic used by :mod:`dbmstclu.sketch`.
"""

from enum import IntEnum
from typing import NamedTuple

import numpy as np

MERSENNE61 = (1 << 61) - 1
MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_P = np.uint64(MERSENNE61)
_LOW29 = np.uint64((1 << 29) - 1)
_LOW32 = np.uint64((1 << 32) - 1)


class Recovery(IntEnum):
    ZERO = 0
    ONE_SPARSE = 1
    NOT_ONE_SPARSE = 2


class SampleStatus(IntEnum):
    EMPTY = 0
    EDGE = 1
    FAIL = 2


class RecoveryResult(NamedTuple):
    status: Recovery
    index: int = -1
    sign: int = 0


class SampleResult(NamedTuple):
    status: SampleStatus
    index: int = -1
    sign: int = 0


def mix64(x):
    """Seeded-counter avalanche mixer (splitmix64 output function)."""
    z = (int(x) + _GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def mix64_many(x):
    """Vectorized :func:`mix64` on an array of non-negative integers."""
    z = np.asarray(x).astype(np.uint64) + np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def level_of(j, seed, n_levels):
    """Geometric level of coordinate ``j``: trailing zeros of its hash, capped."""
    h = mix64((int(j) + int(seed)) & MASK64)
    if h == 0:
        return n_levels - 1
    return min((h & -h).bit_length() - 1, n_levels - 1)


def levels_of(j, seed, n_levels):
    """Vectorized :func:`level_of`."""
    h = mix64_many(np.asarray(j, dtype=np.uint64) + np.uint64(int(seed) & MASK64))
    low = h & (~h + np.uint64(1))
    # powers of two up to 2**63 are exact in float64
    tz = np.where(h == 0, n_levels - 1, np.log2(low.astype(np.float64)).astype(np.int64))
    return np.minimum(tz, n_levels - 1)


def mulmod61(a, b):
    """Elementwise ``a * b mod (2**61 - 1)`` for uint64 arrays with entries below p."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    s32 = np.uint64(32)
    ah, al = a >> s32, a & _LOW32
    bh, bl = b >> s32, b & _LOW32
    hh = ah * bh
    mid = ah * bl + al * bh
    ll = al * bl
    # 2**64 = 8 and 2**61 = 1 modulo p
    s = (hh << np.uint64(3)) + (mid >> np.uint64(29)) + ((mid & _LOW29) << s32)
    s = s + (ll & _P) + (ll >> np.uint64(61))
    return _reduce61(s)


def _reduce61(s):
    s = (s & _P) + (s >> np.uint64(61))
    return np.where(s >= _P, s - _P, s)


def addmod61(a, b):
    """Elementwise ``a + b mod p`` for operands already reduced."""
    return _reduce61(np.asarray(a, dtype=np.uint64) + np.asarray(b, dtype=np.uint64))


def negmod61(a):
    a = np.asarray(a, dtype=np.uint64)
    return np.where(a == 0, a, _P - a)


def powmod61(base, exp):
    """Elementwise ``base**exp mod p`` by square-and-multiply."""
    base = np.asarray(base, dtype=np.uint64)
    exp = np.asarray(exp, dtype=np.uint64)
    base, exp = np.broadcast_arrays(base, exp)
    result = np.ones(exp.shape, dtype=np.uint64)
    b = base.copy()
    e = exp.copy()
    one = np.uint64(1)
    while np.any(e):
        odd = (e & one).astype(bool)
        result = np.where(odd, mulmod61(result, b), result)
        b = mulmod61(b, b)
        e = e >> one
    return result


def summod61(values, starts):
    """Segment sums modulo p of ``values`` split at ``starts`` (see ``np.add.reduceat``).

    Values are split in 31-bit halves so plain uint64 sums stay exact for
    segments of up to 2**32 entries.
    """
    values = np.asarray(values, dtype=np.uint64)
    s31 = np.uint64(31)
    hi = np.add.reduceat(values >> s31, starts)
    lo = np.add.reduceat(values & np.uint64((1 << 31) - 1), starts)
    return addmod61(mulmod61(_reduce61(hi), np.uint64(1 << 31)), _reduce61(lo))


class PowerTable:
    """Fast ``z**j mod p`` for one fixed base via per-digit lookup tables.

    Exponents are cut into ``bits``-wide digits; each digit indexes a
    precomputed table of ``z**(d * 2**(bits*c))``.
    """

    def __init__(self, z, max_exp, bits=11):
        self.z = int(z) % MERSENNE61
        self.bits = bits
        n_digits = max(1, -(-max(int(max_exp), 1).bit_length() // bits))
        self.tables = []
        base = self.z
        for _ in range(n_digits):
            table = np.ones(1, dtype=np.uint64)
            step = base
            while len(table) < (1 << bits):
                table = np.concatenate([table, mulmod61(table, np.uint64(step))])
                step = step * step % MERSENNE61
            self.tables.append(table)
            base = step  # base ** (2**bits)
        self.max_exp = (1 << (bits * n_digits)) - 1

    def __call__(self, exp):
        exp = np.asarray(exp, dtype=np.int64)
        if exp.size and (exp.min() < 0 or exp.max() > self.max_exp):
            raise ValueError("exponent outside the table range")
        mask = (1 << self.bits) - 1
        out = self.tables[0][exp & mask]
        for c, table in enumerate(self.tables[1:], start=1):
            out = mulmod61(out, table[(exp >> (self.bits * c)) & mask])
        return out


class OneSparseCell:
    """Three linear counters over a signed vector, modulo prime ``p`` for ``tau``."""

    __slots__ = ("phi", "iota", "tau", "z", "p")

    def __init__(self, z, p=MERSENNE61, phi=0, iota=0, tau=0):
        self.z = int(z)
        self.p = int(p)
        self.phi = int(phi)
        self.iota = int(iota)
        self.tau = int(tau) % self.p

    def update(self, j, sign):
        cell_update(self, j, sign)
        return self

    def recover(self, n_coords=None):
        return recover_one_sparse(self, n_coords)

    def is_zero(self):
        return self.phi == 0 and self.iota == 0 and self.tau == 0

    def __eq__(self, other):
        if not isinstance(other, OneSparseCell):
            return NotImplemented
        return (self.phi, self.iota, self.tau, self.z, self.p) == (
            other.phi, other.iota, other.tau, other.z, other.p)

    def __repr__(self):
        return f"OneSparseCell(phi={self.phi}, iota={self.iota}, tau={self.tau})"


def cell_update(cell, j, sign):
    """Add ``sign`` to coordinate ``j`` of the vector summarized by ``cell``."""
    sign = int(sign)
    cell.phi += sign
    cell.iota += sign * int(j)
    cell.tau = (cell.tau + sign * pow(cell.z, int(j), cell.p)) % cell.p
    return cell


def recover_one_sparse(cell, n_coords=None):
    """Decide whether the cell's vector is zero, one-sparse with entry ±1, or neither.

    Parameters
    ----------
    cell : OneSparseCell
    n_coords : int, optional
        Dimension of the vector. Recovered indices outside ``[0, n_coords)``
        are rejected.

    Returns
    -------
    RecoveryResult
    """
    if cell.phi == 0 and cell.iota == 0 and cell.tau == 0:
        return RecoveryResult(Recovery.ZERO)
    if cell.phi not in (1, -1):
        return RecoveryResult(Recovery.NOT_ONE_SPARSE)
    j = cell.iota * cell.phi
    if j < 0 or (n_coords is not None and j >= n_coords):
        return RecoveryResult(Recovery.NOT_ONE_SPARSE)
    if cell.tau != (cell.phi * pow(cell.z, j, cell.p)) % cell.p:
        return RecoveryResult(Recovery.NOT_ONE_SPARSE)
    return RecoveryResult(Recovery.ONE_SPARSE, j, cell.phi)


class L0Sampler:
    """Scalar L0 sampler over a vector of dimension ``n_coords``.

    Parameters
    ----------
    n_coords : int
        Vector dimension ``M``.
    seed : int
        Level-hash seed.
    z : int
        Fingerprint base in ``[2, p - 1)``.
    n_levels : int, optional
        Number of cells; defaults to ``ceil(log2 M) + 3``.
    """

    def __init__(self, n_coords, seed, z, n_levels=None, p=MERSENNE61):
        self.n_coords = int(n_coords)
        self.seed = int(seed)
        self.z = int(z)
        self.p = int(p)
        self.n_levels = default_levels(n_coords) if n_levels is None else int(n_levels)
        self.cells = [OneSparseCell(z, p) for _ in range(self.n_levels)]

    @classmethod
    def random(cls, n_coords, rng, n_levels=None):
        rng = np.random.default_rng(rng)
        seed = int(rng.integers(0, 1 << 63))
        z = int(rng.integers(2, MERSENNE61 - 1))
        return cls(n_coords, seed, z, n_levels)

    def update(self, j, sign):
        if not 0 <= j < self.n_coords:
            raise IndexError(f"coordinate {j} outside [0, {self.n_coords})")
        top = level_of(j, self.seed, self.n_levels)
        for cell in self.cells[: top + 1]:
            cell_update(cell, j, sign)
        return self

    def sample(self):
        """Scan cells bottom-up and return the first one-sparse recovery."""
        if self.cells[0].is_zero():
            return SampleResult(SampleStatus.EMPTY)
        for cell in self.cells:
            res = recover_one_sparse(cell, self.n_coords)
            if res.status == Recovery.ONE_SPARSE:
                return SampleResult(SampleStatus.EDGE, res.index, res.sign)
        return SampleResult(SampleStatus.FAIL)


def default_levels(n_coords):
    """Cells per sampler: ``ceil(log2 M) + 3``."""
    return max(1, int(n_coords) - 1).bit_length() + 3


def default_repetitions(n_nodes):
    """Independent sampler repetitions: ``ceil(log2 N) + 3``."""
    return max(1, int(n_nodes) - 1).bit_length() + 3

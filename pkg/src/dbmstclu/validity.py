"""Separation/dispersion validity index and its exact accumulation.

A cluster's validity is ``(SEP - DISP) / max(SEP, DISP)``. The global score is
the size-weighted sum of per-cluster validities. The canonical float value
of that sum is the correctly rounded exact sum of the per-cluster terms
(``math.fsum``), which makes it independent of summation order.

The incremental engine tracks the same sum exactly as an integer multiple of
``2**-1074`` (the smallest subnormal), so adding or removing a term never
accumulates rounding error and always agrees bit for bit with ``fsum``.
"""

import math

import numpy as np

from .exceptions import InvalidPartitionError, ParameterError

FIXED_SHIFT = 1074
_FIXED_ONE = 1 << FIXED_SHIFT


def cluster_validity(sep, disp):
    """``(sep - disp) / max(sep, disp)``; requires ``sep > 0``."""
    return (sep - disp) / max(sep, disp)


def cluster_term(size, n, sep, disp):
    """Contribution ``size / n * validity`` of one cluster."""
    return size / n * cluster_validity(sep, disp)


def to_fixed(x):
    """Exact integer ``x * 2**1074`` of a finite float."""
    num, den = float(x).as_integer_ratio()
    return num << (FIXED_SHIFT - (den.bit_length() - 1))


def from_fixed(s):
    """Correctly rounded float of ``s * 2**-1074``."""
    return s / _FIXED_ONE


def score_terms(terms):
    """Canonical global score from per-cluster terms."""
    return math.fsum(terms)


def partition_stats(forest, labels):
    """Per-cluster ``(size, sep, disp)`` for a labelling of forest nodes.

    Forest edges joining two clusters act as cut edges. A cluster without
    incident cut edges gets ``sep = 1``.

    Returns
    -------
    ids : ndarray
        Sorted cluster labels.
    size, sep, disp : ndarray
        Statistics aligned with ``ids``.
    """
    labels = np.asarray(labels)
    if labels.shape != (forest.n,):
        raise ParameterError(f"labels must have shape ({forest.n},)")
    ids, lab = np.unique(labels, return_inverse=True)
    k = len(ids)
    size = np.bincount(lab, minlength=k)
    lu = lab[forest.u]
    lv = lab[forest.v]
    internal = lu == lv
    disp = np.zeros(k)
    np.maximum.at(disp, lu[internal], forest.weight[internal])
    sep = np.full(k, np.inf)
    cut_w = forest.weight[~internal]
    np.minimum.at(sep, lu[~internal], cut_w)
    np.minimum.at(sep, lv[~internal], cut_w)
    sep[np.isinf(sep)] = 1.0
    return ids, size, sep, disp, internal


def dbcvi_score(forest, labels):
    """Score an arbitrary partition of a spanning forest.

    Parameters
    ----------
    forest : SpanningForest
    labels : array-like of shape (n,)
        Cluster label per node. Each cluster must induce a connected subtree.

    Returns
    -------
    float
        Size-weighted mean validity in ``[-1, 1]``.

    Raises
    ------
    InvalidPartitionError
        If some cluster is not connected within the forest.
    """
    ids, size, sep, disp, internal = partition_stats(forest, labels)
    # a cluster is connected iff its internal edges number size - 1
    lab = np.searchsorted(ids, np.asarray(labels))
    n_internal = np.bincount(lab[forest.u[internal]], minlength=len(ids))
    if np.any(n_internal != size - 1):
        raise InvalidPartitionError("a cluster does not induce a connected subtree")
    n = forest.n
    return score_terms(cluster_term(int(s), n, float(a), float(d))
                       for s, a, d in zip(size, sep, disp))

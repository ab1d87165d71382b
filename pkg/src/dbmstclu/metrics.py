"""External clustering metrics and validity re-scoring of arbitrary partitions."""

import numpy as np
from sklearn.metrics import adjusted_rand_score, silhouette_score

from .exceptions import ParameterError, UndefinedMetricError
from .validity import dbcvi_score

__all__ = ["silhouette", "adjusted_rand_index", "dbcvi_score"]


def silhouette(labels, X=None, dissimilarity=None, metric="euclidean"):
    """Mean silhouette coefficient.

    Singleton clusters contribute 0, so points flagged as noise by being
    isolated do not inflate the score.

    Parameters
    ----------
    labels : array-like of shape (n,)
    X : array-like of shape (n, d), optional
        Points; distances computed with ``metric``.
    dissimilarity : array-like of shape (n, n), optional
        Precomputed symmetric dissimilarities with zero diagonal.

    Returns
    -------
    float

    Raises
    ------
    UndefinedMetricError
        If there is a single cluster.
    """
    labels = np.asarray(labels)
    if (X is None) == (dissimilarity is None):
        raise ParameterError("pass exactly one of X or dissimilarity")
    n = len(labels)
    k = len(np.unique(labels))
    if k < 2:
        raise UndefinedMetricError("silhouette needs at least two clusters")
    if k == n:
        # every point is a singleton
        return 0.0
    if dissimilarity is not None:
        D = np.asarray(dissimilarity, dtype=np.float64)
        if D.shape != (n, n):
            raise ParameterError("dissimilarity must be square and match labels")
        return float(silhouette_score(D, labels, metric="precomputed"))
    X = np.asarray(X, dtype=np.float64)
    if len(X) != n:
        raise ParameterError("X and labels differ in length")
    return float(silhouette_score(X, labels, metric=metric))


def adjusted_rand_index(labels, truth):
    """Pair-counting adjusted Rand index (not clamped; may be negative)."""
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    if labels.shape != truth.shape:
        raise ParameterError("labelings must cover the same nodes")
    return float(adjusted_rand_score(truth, labels))

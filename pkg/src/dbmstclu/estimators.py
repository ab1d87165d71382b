"""scikit-learn style estimators wrapping the forest clustering algorithms."""

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .clustering import dbmstclu, semst
from .datagen import build_dissimilarity_stream
from .exceptions import ParameterError
from .forest import SpanningForest, exact_mst
from .sketch import GraphSketch


def _forest_from_points(X, mst, metric, epsilon, w_min, n_repetitions, random_state):
    graph = build_dissimilarity_stream(X, metric=metric, w_min=w_min)
    if mst == "exact":
        return exact_mst(graph.u, graph.v, graph.weight, graph.n)
    if mst == "sketch":
        sk = GraphSketch(graph.n, epsilon=epsilon, w_min=w_min, n_repetitions=n_repetitions,
                         random_state=random_state)
        sk.update_many(*graph.update_arrays())
        return sk.approx_mst()
    raise ParameterError(f"mst must be 'exact' or 'sketch', got {mst!r}")


class _ForestClusterer(ClusterMixin, BaseEstimator):

    def _validate_common(self):
        if self.mst not in ("exact", "sketch"):
            raise ParameterError(f"mst must be 'exact' or 'sketch', got {self.mst!r}")
        if self.metric not in ("euclidean", "hamming"):
            raise ParameterError(f"metric must be 'euclidean' or 'hamming', got {self.metric!r}")

    def _build_forest(self, X):
        if isinstance(X, SpanningForest):
            return X
        X = check_array(X, ensure_min_samples=2)
        self.n_features_in_ = X.shape[1]
        return _forest_from_points(X, self.mst, self.metric, self.epsilon, self.w_min,
                                   self.n_repetitions, self.random_state)

    def _finish(self, forest, part):
        self.forest_ = forest
        self.partition_ = part
        self.dbcvi_ = part.dbcvi
        labels = part.labels
        if self.noise_max_size is not None:
            sizes = np.bincount(labels)
            labels = np.where(sizes[labels] <= self.noise_max_size, -1, labels)
        self.labels_ = labels
        self.n_clusters_ = part.n_clusters
        return self


class DBMSTClu(_ForestClusterer):
    """Parameter-free clustering by greedy cuts of a minimum spanning tree.

    Parameters
    ----------
    mst : {"exact", "sketch"}, default="exact"
        Build the tree with Kruskal on the full dissimilarity graph, or recover
        it from a linear graph sketch fed with the same edges.
    metric : {"euclidean", "hamming"}, default="euclidean"
    epsilon : float, default=0.1
        Weight grid step of the sketch.
    w_min : float, default=1e-3
        Smallest normalized dissimilarity.
    n_repetitions : int, optional
        Sampler repetitions of the sketch.
    random_state : int, optional
        Seed of the sketch.
    noise_max_size : int, optional
        Clusters of at most this size are labelled -1 in ``labels_``.

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
    forest_ : SpanningForest
    partition_ : ClusterPartition
    dbcvi_ : float
    n_clusters_ : int
    """

    def __init__(self, mst="exact", metric="euclidean", epsilon=0.1, w_min=1e-3,
                 n_repetitions=None, random_state=None, noise_max_size=None):
        self.mst = mst
        self.metric = metric
        self.epsilon = epsilon
        self.w_min = w_min
        self.n_repetitions = n_repetitions
        self.random_state = random_state
        self.noise_max_size = noise_max_size

    def fit(self, X, y=None):
        """Cluster points ``X`` or a prebuilt :class:`SpanningForest`."""
        self._validate_common()
        forest = self._build_forest(X)
        return self._finish(forest, dbmstclu(forest))

    def predict(self, X=None):
        """Labels of the fitted samples (the model is transductive)."""
        check_is_fitted(self, "labels_")
        return self.labels_


class SEMST(_ForestClusterer):
    """Baseline removing the ``n_clusters - 1`` heaviest spanning tree edges.

    Parameters
    ----------
    n_clusters : int, default=2
    mst, metric, epsilon, w_min, n_repetitions, random_state, noise_max_size
        As in :class:`DBMSTClu`.
    """

    def __init__(self, n_clusters=2, mst="exact", metric="euclidean", epsilon=0.1, w_min=1e-3,
                 n_repetitions=None, random_state=None, noise_max_size=None):
        self.n_clusters = n_clusters
        self.mst = mst
        self.metric = metric
        self.epsilon = epsilon
        self.w_min = w_min
        self.n_repetitions = n_repetitions
        self.random_state = random_state
        self.noise_max_size = noise_max_size

    def fit(self, X, y=None):
        self._validate_common()
        forest = self._build_forest(X)
        return self._finish(forest, semst(forest, self.n_clusters))

    def predict(self, X=None):
        check_is_fitted(self, "labels_")
        return self.labels_

"""Exception hierarchy shared by all modules."""


class DBMSTCluError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(DBMSTCluError, ValueError):
    """An argument is outside its admissible range."""


class DegenerateEdgeError(DBMSTCluError, ValueError):
    """Self-loop passed where an edge between two distinct nodes is required."""


class EdgeRangeError(DBMSTCluError, IndexError):
    """Edge index or node id outside the declared graph size."""


class WeightRangeError(DBMSTCluError, ValueError):
    """Weight outside (0, 1]."""


class StreamParseError(DBMSTCluError, ValueError):
    """Malformed line in an update stream."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class StreamDomainError(DBMSTCluError, ValueError):
    """Update would drive an edge weight negative or above 1."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class IncompatibleSketchError(DBMSTCluError, ValueError):
    """Two sketches built with different seeds or dimensions were combined."""


class IncompleteComponentsError(DBMSTCluError, RuntimeError):
    """All sampler repetitions were consumed before Borůvka converged.

    ``labels`` holds the partial node partition reached so far and, when the
    failure happened during forest recovery, ``forest`` the partial forest.
    """

    def __init__(self, message, labels=None, level=None, forest=None):
        super().__init__(message)
        self.labels = labels
        self.level = level
        self.forest = forest


class InvalidCutError(DBMSTCluError, ValueError):
    """Cut requested on an edge that is already cut or not in the forest."""


class InvalidPartitionError(DBMSTCluError, ValueError):
    """A labelling does not split the forest into connected subtrees."""


class UndefinedMetricError(DBMSTCluError, ValueError):
    """A clustering metric is undefined for the given labelling."""


class DegenerateDatasetError(DBMSTCluError, ValueError):
    """Dataset has no usable pairwise spread (e.g. all points identical)."""

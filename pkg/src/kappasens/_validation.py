"""Input validation helpers used by the estimators and the functional API."""

import numpy as np
from sklearn.utils import check_array

from .exceptions import GraphError


def check_adjacency(A, copy=True):
    """Validate a dense signed adjacency matrix and return it as float64.

    Entry ``A[i, j]`` is the weight of the directed edge ``j -> i``.
    Raises :class:`GraphError` on non-square input, ``n < 2`` or a
    nonzero diagonal.
    """
    if hasattr(A, "adjacency"):
        A = A.adjacency
    try:
        A = check_array(A, dtype=np.float64, copy=copy, ensure_2d=True,
                        ensure_all_finite=True)
    except ValueError as exc:
        raise GraphError(str(exc)) from exc
    n, m = A.shape
    if n != m:
        raise GraphError(f"adjacency must be square, got {A.shape}")
    if n < 2:
        raise GraphError(f"graph needs at least 2 vertices, got {n}")
    if np.any(np.diag(A) != 0.0):
        raise GraphError("adjacency has nonzero diagonal (self-loops)")
    return A


def check_edge(edge, n):
    src, dst = int(edge[0]), int(edge[1])
    if src == dst:
        raise GraphError(f"self-loop edge {src}->{dst}")
    if not (0 <= src < n and 0 <= dst < n):
        raise GraphError(f"edge {src}->{dst} out of range for n={n}")
    return src, dst


def check_positive(name, value, strict=True):
    if not np.isfinite(value) or (value <= 0 if strict else value < 0):
        bound = "> 0" if strict else ">= 0"
        raise ValueError(f"{name} must be {bound}, got {value!r}")
    return value

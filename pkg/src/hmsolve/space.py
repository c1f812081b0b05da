"""Vectors in the finite-dimensional model space R^n.

The model space is plain R^n with the Euclidean inner product. Vectors are
1-d float64 arrays, made read-only on construction so they can be shared
freely across concurrent solver runs.
"""

import numpy as np

__all__ = ["DimensionMismatchError", "as_vector", "inner", "norm", "combine"]


class DimensionMismatchError(ValueError):
    """Two vectors of different dimensions were combined."""


def as_vector(entries):
    """Coerce ``entries`` to an immutable 1-d float64 array.

    Scalars become 1-d vectors of dimension one. Non-finite entries are
    rejected.
    """
    v = np.atleast_1d(np.asarray(entries, dtype=float)).copy()
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a scalar or a non-empty 1-d sequence of reals")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    v.setflags(write=False)
    return v


def _check_same_dim(a, b):
    if a.shape != b.shape:
        raise DimensionMismatchError(
            "dimension mismatch: %d vs %d" % (a.shape[0], b.shape[0])
        )


def inner(a, b):
    """Euclidean inner product sum_i a_i b_i."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    _check_same_dim(a, b)
    return float(np.dot(a, b))


def norm(a):
    """Euclidean norm sqrt(inner(a, a))."""
    return float(np.linalg.norm(np.atleast_1d(np.asarray(a, dtype=float))))


def combine(alpha, a, beta, b):
    """Componentwise linear combination alpha*a + beta*b."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    _check_same_dim(a, b)
    out = alpha * a + beta * b
    out.setflags(write=False)
    return out

"""Distances between probability vectors on a finite domain.

The root-sine distance is ``sqrt(1 - C(a, b)**2)`` where ``C`` is the
Bhattacharyya coefficient ``sum(sqrt(a * b))``. It equals the sine of the
angle between the coordinatewise square roots of ``a`` and ``b``, and the
Hellinger and Bhattacharyya distances are monotone functions of it.

All functions accept array-likes and validate them with :func:`prob_vector`.
"""

import math

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "NORMALIZATION_TOL",
    "INFINITE_DISTANCE",
    "prob_vector",
    "bhattacharyya_coeff",
    "root_sine",
    "root_sine_double_sum",
    "hellinger",
    "bhattacharyya_dist",
    "total_variation",
    "euclidean",
    "pairwise_root_sine",
    "all_distances",
]

NORMALIZATION_TOL = 1e-12

#: Value returned by :func:`bhattacharyya_dist` for disjoint supports.
#: Serialized as the string ``"inf"``.
INFINITE_DISTANCE = math.inf


def prob_vector(weights, tol=NORMALIZATION_TOL):
    """Validate ``weights`` as a point on the probability simplex.

    Returns a read-only float64 copy. Vectors that are not normalized to
    within ``tol`` are rejected rather than renormalized.

    Raises
    ------
    DomainError
        If any entry is negative or non-finite, or the sum is off by more
        than ``tol``.
    """
    a = np.array(weights, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise DimensionError(f"expected a non-empty 1-D vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("probability vector has non-finite entries")
    if np.any(a < 0):
        raise DomainError("probability vector has negative entries")
    total = math.fsum(a)
    if abs(total - 1.0) > tol:
        raise DomainError(f"probability vector sums to {total!r}, not 1")
    a.setflags(write=False)
    return a


def _pair(a, b):
    a = prob_vector(a)
    b = prob_vector(b)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    return a, b


def bhattacharyya_coeff(a, b):
    """Return ``C(a, b) = sum_i sqrt(a_i b_i)``, clipped into [0, 1]."""
    a, b = _pair(a, b)
    return min(1.0, math.fsum(np.sqrt(a * b)))


def root_sine(a, b):
    """Root-sine distance ``sqrt(1 - C(a, b)**2)``.

    ``1 - C**2`` is clamped into [0, 1] before the square root since
    rounding can make it slightly negative when ``a`` is close to ``b``.
    """
    c = bhattacharyya_coeff(a, b)
    return math.sqrt(min(1.0, max(0.0, 1.0 - c * c)))


def root_sine_double_sum(a, b):
    """Root-sine distance from its pairwise form.

    ``sqrt(1/2 * sum_{i,j} (sqrt(a_i b_j) - sqrt(a_j b_i))**2)``. Costs
    O(s**2); used as an independent check of :func:`root_sine`.
    """
    a, b = _pair(a, b)
    ra, rb = np.sqrt(a), np.sqrt(b)
    # outer(ra, rb)[i, j] = sqrt(a_i b_j); its transpose gives sqrt(a_j b_i)
    diff = np.outer(ra, rb) - np.outer(ra, rb).T
    return math.sqrt(0.5 * math.fsum((diff * diff).ravel()))


def hellinger(a, b):
    """Hellinger distance, computed as ``sqrt(1 - sqrt(1 - d_RS**2))``."""
    d = root_sine(a, b)
    return math.sqrt(max(0.0, 1.0 - math.sqrt(max(0.0, 1.0 - d * d))))


def bhattacharyya_dist(a, b):
    """Bhattacharyya distance ``-1/2 ln(1 - d_RS**2)``.

    Returns :data:`INFINITE_DISTANCE` when the supports are disjoint.
    """
    d = root_sine(a, b)
    one_minus = 1.0 - d * d
    if one_minus <= 0.0:
        return INFINITE_DISTANCE
    return abs(0.5 * math.log(one_minus))


def total_variation(a, b):
    """Half the l1 distance."""
    a, b = _pair(a, b)
    return 0.5 * math.fsum(np.abs(a - b))


def euclidean(a, b):
    """l2 distance."""
    a, b = _pair(a, b)
    return math.sqrt(math.fsum((a - b) ** 2))


def pairwise_root_sine(columns):
    """Root-sine distances between all columns of an (s, n) table.

    Columns are assumed to be valid probability vectors; no validation is
    done here. Returns a symmetric (n, n) matrix with a zero diagonal.
    """
    r = np.sqrt(np.asarray(columns, dtype=np.float64))
    c = np.clip(r.T @ r, 0.0, 1.0)
    d = np.sqrt(np.clip(1.0 - c * c, 0.0, 1.0))
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d


def all_distances(a, b):
    """All distances between ``a`` and ``b`` as a dict, keyed by short name."""
    return {
        "C": bhattacharyya_coeff(a, b),
        "d_RS": root_sine(a, b),
        "d_H": hellinger(a, b),
        "d_B": bhattacharyya_dist(a, b),
        "d_TV": total_variation(a, b),
        "d_E": euclidean(a, b),
    }

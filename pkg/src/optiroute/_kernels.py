"""Hot numeric kernels: cosine scan, min-max normalization, weighted scoring.

Each kernel exists twice: a pure-numpy implementation and a numba @njit
one compiled from explicit loops. The active backend is chosen once at
import time from the OPTIROUTE_KERNELS environment variable:

    unset / "auto"  -> numba when importable, numpy otherwise
    "numpy"         -> force the numpy path (numba never imported)
    "numba"         -> require numba; ImportError propagates if missing

Both paths produce the same anchor values exactly (0.0 / 0.5 / 1.0 after
normalization, 0.0 similarity for disjoint supports) because they perform
the same per-element operations. Within one backend, bit-identical rows
always get bit-identical dot products (required by the ascending-id tie
break); across backends, dot products may differ in the last ulp.

``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

from __future__ import annotations

import os

import numpy as np

_VALID_BACKENDS = ("auto", "numpy", "numba")


def _pick_backend() -> str:
    requested = os.environ.get("OPTIROUTE_KERNELS", "auto").strip().lower() or "auto"
    if requested not in _VALID_BACKENDS:
        raise ValueError(
            f"OPTIROUTE_KERNELS must be one of {_VALID_BACKENDS}, got {requested!r}"
        )
    if requested == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if requested == "numba":
            raise
        return "numpy"
    return "numba"


_BACKEND = _pick_backend()


# --- numpy implementations (always defined; the oracle for the benchmark) ---

def _cosine_scores_np(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Cosine similarity of every row of `matrix` against `query`.

    Rows with zero magnitude get similarity 0.0 (a zero-magnitude query is
    the caller's error and is rejected before we get here).
    """
    qnorm = float(np.sqrt(np.dot(query, query)))
    # einsum, not @: BLAS matvec accumulation varies with row position, so
    # bit-identical rows could come back a ulp apart and defeat the id
    # tie-break; einsum reduces every row through the same scalar loop.
    dots = np.einsum("ij,j->i", matrix, query)
    norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix))
    out = np.zeros(matrix.shape[0], dtype=np.float64)
    nonzero = norms > 0.0
    out[nonzero] = dots[nonzero] / (norms[nonzero] * qnorm)
    return out


def _minmax_normalize_np(raw: np.ndarray, invert: np.ndarray) -> np.ndarray:
    """Column-wise min-max to [0, 1]; constant columns map to 0.5.

    Columns flagged in `invert` are lower-is-better: the raw minimum maps
    to 1.0 via (max - x) / (max - min).
    """
    lo = raw.min(axis=0)
    hi = raw.max(axis=0)
    span = hi - lo
    out = np.empty_like(raw)
    for j in range(raw.shape[1]):
        if span[j] == 0.0:
            out[:, j] = 0.5
        elif invert[j]:
            out[:, j] = (hi[j] - raw[:, j]) / span[j]
        else:
            out[:, j] = (raw[:, j] - lo[j]) / span[j]
    return out


def _weighted_scores_np(vectors: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted mean of the first len(weights) columns of each row.

    Zero total weight degrades to the plain mean (uniform weights).
    """
    d = weights.shape[0]
    total = float(weights.sum())
    if total == 0.0:
        return vectors[:, :d].mean(axis=1)
    # same reasoning as the cosine kernel: keep equal rows bit-equal
    return np.einsum("ij,j->i", vectors[:, :d], weights) / total


if _BACKEND == "numba":
    from numba import njit

    @njit(cache=True)
    def _cosine_scores_nb(matrix, query):  # pragma: no cover - numba path
        n, d = matrix.shape
        qsq = 0.0
        for j in range(d):
            qsq += query[j] * query[j]
        qnorm = np.sqrt(qsq)
        out = np.zeros(n, dtype=np.float64)
        for i in range(n):
            dot = 0.0
            msq = 0.0
            for j in range(d):
                dot += matrix[i, j] * query[j]
                msq += matrix[i, j] * matrix[i, j]
            if msq > 0.0:
                out[i] = dot / (np.sqrt(msq) * qnorm)
        return out

    @njit(cache=True)
    def _minmax_normalize_nb(raw, invert):  # pragma: no cover - numba path
        n, m = raw.shape
        out = np.empty((n, m), dtype=np.float64)
        for j in range(m):
            lo = raw[0, j]
            hi = raw[0, j]
            for i in range(1, n):
                v = raw[i, j]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            span = hi - lo
            if span == 0.0:
                for i in range(n):
                    out[i, j] = 0.5
            elif invert[j]:
                for i in range(n):
                    out[i, j] = (hi - raw[i, j]) / span
            else:
                for i in range(n):
                    out[i, j] = (raw[i, j] - lo) / span
        return out

    @njit(cache=True)
    def _weighted_scores_nb(vectors, weights):  # pragma: no cover - numba path
        n = vectors.shape[0]
        d = weights.shape[0]
        total = 0.0
        for j in range(d):
            total += weights[j]
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            acc = 0.0
            if total == 0.0:
                for j in range(d):
                    acc += vectors[i, j]
                out[i] = acc / d
            else:
                for j in range(d):
                    acc += vectors[i, j] * weights[j]
                out[i] = acc / total
        return out

    cosine_scores = _cosine_scores_nb
    minmax_normalize = _minmax_normalize_nb
    weighted_scores = _weighted_scores_nb
else:
    cosine_scores = _cosine_scores_np
    minmax_normalize = _minmax_normalize_np
    weighted_scores = _weighted_scores_np


def backend_name() -> str:
    """Which kernel path is active: "numba" or "numpy"."""
    return _BACKEND


def warmup() -> None:
    """Trigger JIT compilation so it never lands inside a timed section."""
    m = np.ones((2, 9), dtype=np.float64)
    q = np.ones(9, dtype=np.float64)
    cosine_scores(m, q)
    minmax_normalize(m, np.zeros(9, dtype=np.bool_))
    weighted_scores(m, np.ones(8, dtype=np.float64))

"""Evaluation of sums of tensor-product univariate bases at many points."""

from __future__ import annotations

import numpy as np

_CHUNK_ENTRIES = 2_000_000


def product_basis(tables, idx: np.ndarray) -> np.ndarray:
    """Matrix ``B[q, k] = prod_n tables[n][q, idx[k, n]]``."""
    out = tables[0][:, idx[:, 0]].copy()
    for n in range(1, idx.shape[1]):
        out *= tables[n][:, idx[:, n]]
    return out


def evaluate_expansion(univariate, idx: np.ndarray, coeffs: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``sum_k coeffs[k] * prod_n f_n^{idx[k, n]}(y[:, n])`` for every row of ``y``.

    ``univariate(n, values, degree)`` must return the table of basis
    functions ``0..degree`` of dimension ``n`` at ``values`` (shape ``(Q, degree + 1)``).
    """
    y = np.asarray(y, dtype=float)
    q_total, dim = y.shape
    degrees = idx.max(axis=0) if idx.size else np.zeros(dim, dtype=int)
    out = np.empty(q_total)
    step = max(1, _CHUNK_ENTRIES // max(1, idx.shape[0]))
    for start in range(0, q_total, step):
        block = y[start : start + step]
        tables = [univariate(n, block[:, n], int(degrees[n])) for n in range(dim)]
        out[start : start + step] = product_basis(tables, idx) @ coeffs
    return out


def as_points(y, dim: int) -> tuple[np.ndarray, bool]:
    """Coerce ``y`` to shape ``(Q, dim)``; also report whether a single point was given."""
    arr = np.asarray(y, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got array of shape {np.shape(y)}")
    return arr, single

"""Nested weighted Leja sequences.

Node ``j`` maximizes ``sqrt(pdf(y)) * prod_{k<j} |y - y_k|`` over the
effective support of the law. The search runs in log space on a dense
equispaced grid and polishes the winning cell with a golden-section search.
Ties on the grid go to the smallest ``y``. The first node is the median.
"""

from __future__ import annotations

import threading

import numpy as np
from scipy.optimize import minimize_scalar

from .distributions import Distribution
from .exceptions import NumericalError

GRID_POINTS = 100_001
_TIE_RTOL = 1e-12
_POLISH_XTOL = 1e-12


def initial_node(dist: Distribution) -> float:
    """First Leja node: the median of ``dist``."""
    return float(dist.median())


def log_objective(dist: Distribution, nodes, y):
    """``0.5 * log pdf(y) + sum_k log|y - y_k|`` (``-inf`` where the product vanishes)."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        out = 0.5 * np.log(dist.pdf(y))
        for node in nodes:
            out = out + np.log(np.abs(y - node))
    return out


class LejaSequence:
    """Growing weighted Leja sequence of one distribution.

    Parameters
    ----------
    dist : Distribution
        The weight law.
    grid_points : int
        Size of the candidate grid on the effective support.

    Notes
    -----
    :meth:`extend` mutates the sequence in place; existing entries never
    change. Use :meth:`snapshot` to hand a fixed prefix to readers.
    """

    def __init__(self, dist: Distribution, grid_points: int = GRID_POINTS):
        self.dist = dist
        lo, hi = dist.effective_support()
        self._lo, self._hi = lo, hi
        self._grid = np.linspace(lo, hi, grid_points)
        with np.errstate(divide="ignore"):
            self._score = 0.5 * np.log(dist.pdf(self._grid))
        self._nodes: list[float] = []
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._nodes)

    def __getitem__(self, j):
        return self._nodes[j]

    def __repr__(self):
        return f"LejaSequence({self.dist!r}, n={len(self)})"

    @property
    def nodes(self) -> np.ndarray:
        return np.array(self._nodes)

    def snapshot(self, length: int | None = None) -> tuple[float, ...]:
        n = len(self._nodes) if length is None else length
        if n > len(self._nodes):
            self.extend(n)
        return tuple(self._nodes[:n])

    def _accept(self, y: float):
        self._nodes.append(y)
        with np.errstate(divide="ignore"):
            self._score = self._score + np.log(np.abs(self._grid - y))

    def _next_node(self) -> float:
        score = self._score
        best = np.max(score)
        if not np.isfinite(best):
            raise NumericalError(
                f"weighted Leja objective vanishes on the whole search grid for {self.dist!r}"
            )
        # In log space a relative tie of 1e-12 on the objective is an absolute one here.
        i = int(np.flatnonzero(score >= best - _TIE_RTOL)[0])
        grid = self._grid
        a = grid[max(i - 1, 0)]
        b = grid[min(i + 1, grid.size - 1)]
        y_best, f_best = float(grid[i]), float(best)

        nodes = tuple(self._nodes)

        def neg(y):
            v = log_objective(self.dist, nodes, y)
            return np.inf if not np.isfinite(v) else -float(v)

        res = minimize_scalar(
            neg,
            bracket=None,
            bounds=(a, b),
            method="bounded",
            options={"xatol": _POLISH_XTOL * max(1.0, self._hi - self._lo)},
        )
        if res.success and np.isfinite(res.fun) and -res.fun > f_best:
            y_best = float(res.x)
        return y_best

    def extend(self, new_length: int) -> LejaSequence:
        """Append nodes until the sequence holds ``new_length`` entries."""
        with self._lock:
            if not self._nodes and new_length > 0:
                self._accept(initial_node(self.dist))
            while len(self._nodes) < new_length:
                self._accept(self._next_node())
        return self


_CACHE: dict[Distribution, LejaSequence] = {}
_CACHE_LOCK = threading.Lock()


def leja_sequence(dist: Distribution, length: int = 1) -> LejaSequence:
    """Shared sequence for ``dist``, extended to at least ``length`` nodes."""
    with _CACHE_LOCK:
        seq = _CACHE.get(dist)
        if seq is None:
            seq = _CACHE[dist] = LejaSequence(dist)
    if len(seq) < length:
        seq.extend(length)
    return seq


def leja_nodes(dist: Distribution, count: int) -> np.ndarray:
    """First ``count`` weighted Leja nodes of ``dist``."""
    return np.array(leja_sequence(dist, count).snapshot(count))


class LejaGrid:
    """Per-dimension Leja sequences of a product law; maps multi-indices to nodes."""

    def __init__(self, pdist):
        self.pdist = pdist
        self.sequences = [leja_sequence(d) for d in pdist.dims]

    @property
    def dim(self) -> int:
        return len(self.sequences)

    def points(self, indices) -> np.ndarray:
        """Nodes of the given multi-indices as an array of shape ``(K, N)``."""
        idx = np.asarray(indices, dtype=int).reshape(-1, self.dim)
        out = np.empty(idx.shape, dtype=float)
        for n, seq in enumerate(self.sequences):
            if idx.shape[0]:
                nodes = np.array(seq.snapshot(max(len(seq), int(idx[:, n].max()) + 1)))
                out[:, n] = nodes[idx[:, n]]
        return out

    def node_lists(self, degrees) -> list[np.ndarray]:
        """First ``degrees[n] + 1`` nodes of every dimension."""
        return [np.array(seq.snapshot(int(d) + 1)) for seq, d in zip(self.sequences, degrees)]

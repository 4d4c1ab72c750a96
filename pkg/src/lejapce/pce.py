"""Interpolating polynomial chaos expansions on weighted Leja grids.

An interpolating PCE has exactly one orthonormal basis term per grid node,
``Psi_i(y) = prod_n psi_n^{i_n}(y_n)``, and its coefficients solve the square
collocation system ``A c = g`` with ``A[m, k] = Psi_{i_k}(y^(i_m))``.
It can be obtained from a hierarchical interpolant by a change of basis
(:func:`transform_to_pce`) or built adaptively, selecting new terms by
coefficient magnitude (:func:`adapt_pce`).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from ._tensor import as_points, evaluate_expansion, product_basis
from .distributions import ProductDistribution
from .exceptions import ConfigurationError, NumericalError
from .hierarchical import HierSurrogate, _select
from .leja import LejaGrid
from .models import evaluate_points
from .multiindex import MultiIndexSet
from .orthopoly import MAX_DEGREE, RecurrenceTable, build_recurrence, orthonormal_table

logger = logging.getLogger(__name__)

#: Relative residual above which a solve is flagged in the diagnostics.
RESIDUAL_WARN = 1e-6


@dataclass
class PceSurrogate:
    """Interpolating PCE: one orthonormal term per Leja node.

    Attributes
    ----------
    pdist : ProductDistribution
    indices : list of tuple
        Multi-indices (polynomial degrees and node positions).
    coefficients : ndarray
        Orthonormal-basis coefficients, aligned with ``indices``.
    recurrences : list of RecurrenceTable
        Per-dimension families, truncated to the degrees in use.
    nodes : list of ndarray
        Per-dimension Leja nodes defining the grid.
    values : ndarray
        Model values at the grid nodes.
    diagnostics : dict
        ``residual`` (max-norm of ``A c - g``), ``residual_warning`` and,
        for adaptive builds, the promotion order and per-step history.
    """

    pdist: ProductDistribution
    indices: list
    coefficients: np.ndarray
    recurrences: list
    nodes: list
    values: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.pdist.dim

    @property
    def n_evaluations(self) -> int:
        return len(self.indices)

    @property
    def active(self) -> list:
        return list(self.diagnostics.get("active", self.indices))

    def index_array(self) -> np.ndarray:
        return np.array(self.indices, dtype=int).reshape(len(self.indices), self.dim)

    def grid_points(self) -> np.ndarray:
        idx = self.index_array()
        return np.column_stack([self.nodes[n][idx[:, n]] for n in range(self.dim)])

    def coefficient(self, index) -> float:
        return float(self.coefficients[self.indices.index(tuple(index))])

    def __call__(self, y):
        return eval_pce(self, y)


def _recurrences(pdist: ProductDistribution, degrees) -> list[RecurrenceTable]:
    return [build_recurrence(d, int(p)) for d, p in zip(pdist.dims, degrees)]


def eval_basis(recurrences, index, y):
    """Product basis ``Psi_index(y) = prod_n psi_n^{index_n}(y_n)``."""
    y = np.asarray(y, dtype=float)
    if len(index) != len(recurrences) or y.shape[-1] != len(recurrences):
        raise ValueError("index, point and recurrence dimensions differ")
    out = np.ones(y.shape[:-1])
    for n, (rec, p) in enumerate(zip(recurrences, index)):
        out = out * orthonormal_table(rec, y[..., n], int(p))[..., int(p)]
    return float(out) if out.ndim == 0 else out


def _node_tables(recurrences, nodes):
    # P_n[m, k] = psi_n^k(y_n^(m))
    return [orthonormal_table(rec, x, rec.max_degree) for rec, x in zip(recurrences, nodes)]


def system_matrix(recurrences, nodes, indices) -> np.ndarray:
    """Collocation matrix ``A[m, k] = Psi_{i_k}(y^(i_m))`` for grid indices."""
    idx = np.asarray(indices, dtype=int).reshape(len(indices), len(recurrences))
    tables = _node_tables(recurrences, nodes)
    rows = [tables[n][idx[:, n]] for n in range(len(tables))]
    return product_basis(rows, idx)


def _solve(matrix: np.ndarray, rhs: np.ndarray, indices=None):
    """Dense LU solve with a pivot check; returns (coefficients, residual, warning)."""
    k = matrix.shape[0]
    if k == 0:
        return np.empty(0), 0.0, False
    # Columns are equilibrated first: high-degree orthonormal columns can be
    # orders of magnitude larger than low-degree ones, which would make a
    # global-scale pivot test flag well-posed systems.
    col = np.max(np.abs(matrix), axis=0)
    col[col == 0] = 1.0
    with warnings.catch_warnings():
        # Exact zero pivots are reported below with more context.
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(matrix / col, check_finite=True)
    pivots = np.abs(np.diag(lu))
    bad = np.flatnonzero(pivots <= k * np.finfo(float).eps)
    if bad.size:
        where = f" (column of multi-index {indices[bad[0]]})" if indices is not None else ""
        raise NumericalError(
            f"collocation matrix is singular to working precision at pivot {bad[0]}{where}: "
            f"|u|={pivots[bad[0]]:.3e}"
        )
    coeffs = lu_solve((lu, piv), rhs) / col
    residual = float(np.max(np.abs(matrix @ coeffs - rhs)))
    warn = residual > RESIDUAL_WARN * max(1.0, float(np.max(np.abs(rhs))))
    if warn:
        logger.warning("interpolation residual %.3e exceeds %.0e relative", residual, RESIDUAL_WARN)
    return coeffs, residual, warn


def assemble_and_solve(indices, nodes, values, recurrences):
    """Solve the interpolation system on a Leja grid.

    Parameters
    ----------
    indices : sequence of multi-indices
    nodes : list of ndarray
        Per-dimension node sequences covering every index.
    values : array_like
        Model values at the grid nodes, aligned with ``indices``.
    recurrences : list of RecurrenceTable

    Returns
    -------
    coefficients : ndarray
    diagnostics : dict
        ``residual`` and ``residual_warning``.
    """
    values = np.asarray(values, dtype=float)
    if len(indices) != values.size:
        raise ValueError("need exactly one model value per multi-index")
    matrix = system_matrix(recurrences, nodes, indices)
    coeffs, residual, warn = _solve(matrix, values, list(indices))
    return coeffs, {"residual": residual, "residual_warning": warn}


def transform_to_pce(h: HierSurrogate) -> PceSurrogate:
    """Re-express a hierarchical interpolant in the orthonormal basis."""
    idx = h.index_array()
    degrees = idx.max(axis=0) if idx.size else np.zeros(h.dim, dtype=int)
    recs = _recurrences(h.pdist, degrees)
    nodes = [np.asarray(x)[: int(d) + 1] for x, d in zip(h.nodes, degrees)]
    coeffs, diag = assemble_and_solve(h.indices, nodes, h.values, recs)
    diag["active"] = list(h.active)
    return PceSurrogate(h.pdist, list(h.indices), coeffs, recs, nodes, np.array(h.values), diag)


def pce_from_set(model, pdist: ProductDistribution, indices, cache=None, n_jobs: int = 1) -> PceSurrogate:
    """Interpolating PCE on a fixed downward-closed set (direct solve)."""
    mset = MultiIndexSet(pdist.dim, indices)
    order = mset.sorted()
    grid = LejaGrid(pdist)
    cache = {} if cache is None else cache
    missing = [i for i in order if i not in cache]
    if missing:
        cache.update(zip(missing, evaluate_points(model, grid.points(missing), n_jobs).tolist()))
    values = np.array([cache[i] for i in order])
    degrees = mset.max_degrees()
    recs = _recurrences(pdist, degrees)
    nodes = grid.node_lists(degrees)
    coeffs, diag = assemble_and_solve(order, nodes, values, recs)
    diag["active"] = list(order)
    return PceSurrogate(pdist, order, coeffs, recs, nodes, values, diag)


class _GrowingSystem:
    """Collocation system that grows by appending rows and columns."""

    def __init__(self, pdist, grid):
        self.pdist = pdist
        self.grid = grid
        self.indices: list = []
        self.values: list = []
        self._a = np.empty((0, 0))
        self._degree = np.full(pdist.dim, -1)
        self._tables: list = []

    def _ensure(self, degrees):
        if np.all(degrees <= self._degree):
            return
        if np.any(degrees > MAX_DEGREE):
            n = int(np.argmax(degrees))
            raise NumericalError(
                f"adaptive refinement reached degree {int(degrees[n])} in dimension {n}, "
                f"beyond the supported cap {MAX_DEGREE}"
            )
        self._degree = np.maximum(self._degree, degrees)
        # Build with some headroom so tables are rebuilt rarely.
        cap = np.minimum(self._degree + 4, MAX_DEGREE)
        recs = _recurrences(self.pdist, cap)
        nodes = self.grid.node_lists(cap)
        self._tables = _node_tables(recs, nodes)

    def append(self, new, values):
        if not new:
            return
        old = np.array(self.indices, dtype=int).reshape(len(self.indices), self.pdist.dim)
        add = np.array(new, dtype=int)
        self._ensure(add.max(axis=0))
        k0, k1 = old.shape[0], old.shape[0] + add.shape[0]
        full = np.vstack([old, add])
        a = np.empty((k1, k1))
        a[:k0, :k0] = self._a
        new_rows = [self._tables[n][add[:, n]] for n in range(self.pdist.dim)]
        a[k0:, :] = product_basis(new_rows, full)
        old_rows = [self._tables[n][old[:, n]] for n in range(self.pdist.dim)]
        if k0:
            a[:k0, k0:] = product_basis(old_rows, add)
        self._a = a
        self.indices.extend(new)
        self.values.extend(values)

    def solve(self):
        return _solve(self._a, np.array(self.values), self.indices)


def adapt_pce(
    model,
    pdist: ProductDistribution,
    init_set=None,
    tol: float = 0.0,
    budget: int = 100,
    cache: dict | None = None,
    n_jobs: int = 1,
) -> PceSurrogate:
    """Dimension-adaptive interpolating PCE.

    Each step solves the collocation system on the active set plus its
    admissible frontier, stops once ``#active + #frontier >= budget`` or the
    frontier's summed ``|c_i|`` is ``<= tol``, and otherwise promotes the
    frontier index with the largest ``|c_i|``. The returned coefficients are
    those of the last solve, on the active set plus the final frontier.

    Parameters are as for :func:`lejapce.hierarchical.adapt_hier`.
    """
    dim = pdist.dim
    if init_set is None:
        init_set = [(0,) * dim]
    active = MultiIndexSet(dim, init_set)
    if tol < 0:
        raise ConfigurationError("tolerance must be >= 0")
    needed = len(active) + len(active.admissible())
    if budget < max(len(active) + 1, needed):
        raise ConfigurationError(
            f"budget {budget} is smaller than the initial set plus its frontier ({needed})"
        )
    grid = LejaGrid(pdist)
    cache = {} if cache is None else cache
    system = _GrowingSystem(pdist, grid)
    in_system: set = set()

    def attach(batch):
        batch = [i for i in batch if i not in in_system]
        if not batch:
            return
        missing = [i for i in batch if i not in cache]
        if missing:
            cache.update(zip(missing, evaluate_points(model, grid.points(missing), n_jobs).tolist()))
        system.append(batch, [cache[i] for i in batch])
        in_system.update(batch)

    attach(active.sorted())
    history = []
    while True:
        frontier = active.admissible()
        attach(frontier)
        coeffs, residual, warn = system.solve()
        pos = {i: k for k, i in enumerate(system.indices)}
        mags = [abs(coeffs[pos[i]]) for i in frontier]
        total = len(active) + len(frontier)
        contribution = float(sum(mags))
        history.append((total, contribution))
        if total >= budget or contribution <= tol:
            break
        active.add(_select(frontier, mags))

    idx = np.array(system.indices, dtype=int)
    degrees = idx.max(axis=0)
    recs = _recurrences(pdist, degrees)
    nodes = grid.node_lists(degrees)
    diag = {
        "residual": residual,
        "residual_warning": warn,
        "active": active.indices,
        "history": history,
    }
    return PceSurrogate(pdist, list(system.indices), coeffs, recs, nodes, np.array(system.values), diag)


def eval_pce(p: PceSurrogate, y):
    """``sum_k c_k Psi_k(y)`` at one point (shape ``(N,)``) or many (``(Q, N)``)."""
    pts, single = as_points(y, p.dim)
    out = evaluate_expansion(
        lambda n, v, deg: orthonormal_table(p.recurrences[n], v, deg),
        p.index_array(),
        np.asarray(p.coefficients, dtype=float),
        pts,
    )
    return float(out[0]) if single else out

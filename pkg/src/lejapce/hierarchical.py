"""Hierarchical (Newton-form) sparse interpolation on weighted Leja grids.

Each multi-index ``i`` contributes one node ``y^(i)`` and one product basis
function ``N_i(y) = prod_n nu^{i_n}(y_n)``, where the modified Newton
polynomial ``nu^k`` equals 1 at the k-th Leja node and vanishes at the
earlier ones. Surpluses ``s_i = g(y^(i)) - I[g](y^(i))`` are computed once:
indices added later never touch the value of ``I`` at an existing node.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._tensor import as_points, evaluate_expansion, product_basis
from .distributions import ProductDistribution
from .exceptions import ConfigurationError
from .leja import LejaGrid
from .models import evaluate_points
from .multiindex import MultiIndexSet, graded_key

logger = logging.getLogger(__name__)

_TIE_RTOL = 1e-14


def newton_table(nodes, y, degree: int) -> np.ndarray:
    """Values ``nu^0(y) .. nu^degree(y)`` for the node sequence ``nodes``.

    Returns an array of shape ``y.shape + (degree + 1,)``.
    """
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size < degree + 1:
        raise ValueError(f"need {degree + 1} nodes for degree {degree}, have {nodes.size}")
    y = np.asarray(y, dtype=float)
    out = np.empty(y.shape + (degree + 1,))
    out[..., 0] = 1.0
    for k in range(1, degree + 1):
        diffs = nodes[k] - nodes[:k]
        out[..., k] = np.prod((y[..., None] - nodes[:k]) / diffs, axis=-1)
    return out


def newton_eval(nodes, degree: int, y):
    """Modified Newton polynomial of the given degree on ``nodes`` at ``y``."""
    out = newton_table(nodes, y, degree)[..., degree]
    return float(out) if np.ndim(y) == 0 else out


def _select(indices, scores):
    """Index with the largest score; near-ties go to the lexicographically smallest."""
    scores = np.asarray(scores)
    top = scores.max()
    cands = [i for i, s in zip(indices, scores) if s >= top * (1.0 - _TIE_RTOL)]
    return min(cands)


@dataclass
class HierSurrogate:
    """Sparse interpolant in modified Newton form.

    Attributes
    ----------
    pdist : ProductDistribution
    indices : list of tuple
        Multi-indices in growth order; every prefix is downward closed.
    surpluses : ndarray
        One hierarchical surplus per multi-index.
    values : ndarray
        Model values at the nodes of ``indices``.
    nodes : list of ndarray
        Leja nodes per dimension, long enough for every index.
    active : list of tuple
        The refined set (``Lambda_k``) in promotion order; the remaining
        indices are the final admissible frontier.
    """

    pdist: ProductDistribution
    indices: list
    surpluses: np.ndarray
    values: np.ndarray
    nodes: list
    active: list = field(default_factory=list)
    history: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.pdist.dim

    @property
    def n_evaluations(self) -> int:
        return len(self.indices)

    def index_array(self) -> np.ndarray:
        return np.array(self.indices, dtype=int).reshape(len(self.indices), self.dim)

    def grid_points(self) -> np.ndarray:
        idx = self.index_array()
        return np.column_stack([self.nodes[n][idx[:, n]] for n in range(self.dim)])

    def __call__(self, y):
        return eval_hier(self, y)


def eval_hier(s: HierSurrogate, y):
    """``sum_i s_i N_i(y)`` at one point (shape ``(N,)``) or many (``(Q, N)``)."""
    pts, single = as_points(y, s.dim)
    out = evaluate_expansion(
        lambda n, v, deg: newton_table(s.nodes[n], v, deg),
        s.index_array(),
        np.asarray(s.surpluses, dtype=float),
        pts,
    )
    return float(out[0]) if single else out


class _Hierarchy:
    """Mutable state shared by the fixed-set and adaptive builders."""

    def __init__(self, model, pdist, cache=None, n_jobs=1):
        self.model = model
        self.pdist = pdist
        self.grid = LejaGrid(pdist)
        self.cache = {} if cache is None else cache
        self.n_jobs = n_jobs
        self.order: list = []
        self.surplus: dict = {}
        self.value: dict = {}
        self._tables = [np.ones((1, 1)) for _ in range(pdist.dim)]

    def _newton_at_nodes(self, n, degree):
        # T[m, k] = nu^k(y^(m)) restricted to m, k <= degree; lower triangular.
        if self._tables[n].shape[0] <= degree:
            nodes = np.array(self.grid.sequences[n].snapshot(degree + 1))
            self._tables[n] = newton_table(nodes, nodes, degree)
        return self._tables[n]

    def add_batch(self, batch):
        """Evaluate and attach indices that are mutually non-interacting.

        Every index in ``batch`` must be admissible for the current order and
        no index of the batch may dominate another componentwise.
        """
        if not batch:
            return
        idx_new = np.array(batch, dtype=int)
        missing = [i for i in batch if i not in self.cache]
        if missing:
            vals = evaluate_points(self.model, self.grid.points(missing), self.n_jobs)
            self.cache.update(zip(missing, vals.tolist()))
        g = np.array([self.cache[i] for i in batch])
        if self.order:
            idx_old = np.array(self.order, dtype=int)
            degree = np.maximum(idx_new.max(axis=0), idx_old.max(axis=0))
            tables = [self._newton_at_nodes(n, int(degree[n]))[idx_new[:, n]] for n in range(self.pdist.dim)]
            interp = product_basis(tables, idx_old) @ np.array([self.surplus[i] for i in self.order])
        else:
            interp = np.zeros(len(batch))
        for i, gi, si in zip(batch, g, g - interp):
            self.order.append(i)
            self.value[i] = float(gi)
            self.surplus[i] = float(si)

    def add_layered(self, indices):
        """Attach a downward-closed collection layer by layer (by total degree)."""
        layers: dict = {}
        for i in indices:
            layers.setdefault(sum(i), []).append(i)
        for level in sorted(layers):
            self.add_batch(sorted(layers[level]))

    def surrogate(self, active=(), history=()) -> HierSurrogate:
        idx = np.array(self.order, dtype=int).reshape(len(self.order), self.pdist.dim)
        degrees = idx.max(axis=0) if idx.size else np.zeros(self.pdist.dim, dtype=int)
        return HierSurrogate(
            pdist=self.pdist,
            indices=list(self.order),
            surpluses=np.array([self.surplus[i] for i in self.order]),
            values=np.array([self.value[i] for i in self.order]),
            nodes=self.grid.node_lists(degrees),
            active=list(active),
            history=list(history),
        )


def surplus(model, s: HierSurrogate, i) -> float:
    """Hierarchical surplus of an admissible index ``i`` w.r.t. surrogate ``s``."""
    i = tuple(int(v) for v in i)
    members = set(s.indices)
    if i in members or any(
        i[:n] + (i[n] - 1,) + i[n + 1 :] not in members for n in range(len(i)) if i[n] > 0
    ):
        raise ValueError(f"{i} is not admissible for the surrogate's index set")
    grid = LejaGrid(s.pdist)
    y = grid.points([i])
    g = evaluate_points(model, y)[0]
    return float(g - eval_hier(s, y[0]))


def hier_from_set(model, pdist: ProductDistribution, indices, cache=None, n_jobs: int = 1) -> HierSurrogate:
    """Hierarchical interpolant on a fixed downward-closed set."""
    mset = MultiIndexSet(pdist.dim, indices)
    h = _Hierarchy(model, pdist, cache, n_jobs)
    h.add_layered(mset.sorted())
    return h.surrogate(active=mset.sorted())


def adapt_hier(
    model,
    pdist: ProductDistribution,
    init_set=None,
    tol: float = 0.0,
    budget: int = 100,
    cache: dict | None = None,
    n_jobs: int = 1,
) -> HierSurrogate:
    """Dimension-adaptive hierarchical Leja interpolation.

    Each step computes the surpluses of the admissible frontier, stops once
    ``#active + #frontier >= budget`` or the frontier's summed absolute
    surplus is ``<= tol``, and otherwise promotes the frontier index with the
    largest ``|s_i|``. The result keeps every evaluated index (active set and
    final frontier).

    Parameters
    ----------
    model : callable or Model
        ``g(y) -> float`` or an object with a batch ``evaluate`` method.
    pdist : ProductDistribution
    init_set : iterable of multi-indices, optional
        Downward-closed starting set, ``{0}`` by default.
    tol : float
        Tolerance on the frontier's total surplus.
    budget : int
        Simulation budget.
    cache : dict, optional
        Multi-index to model value; reused and filled in place.
    n_jobs : int
        Threads for frontier evaluations of plain callables.
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
    h = _Hierarchy(model, pdist, cache, n_jobs)
    h.add_layered(active.sorted())
    history = []
    while True:
        frontier = active.admissible()
        h.add_batch([i for i in frontier if i not in h.surplus])
        total = len(active) + len(frontier)
        contribution = sum(abs(h.surplus[i]) for i in frontier)
        history.append((total, contribution))
        if total >= budget or contribution <= tol:
            break
        best = _select(frontier, [abs(h.surplus[i]) for i in frontier])
        active.add(best)
    logger.debug("adapt_hier finished with %d active, %d evaluations", len(active), len(h.order))
    return h.surrogate(active=active.indices, history=history)

"""Downward-closed multi-index sets.

A multi-index is a tuple of non-negative ints. It doubles as a multivariate
polynomial degree and as the tuple of per-dimension Leja node positions.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

from .exceptions import ContractError

MultiIndex = tuple[int, ...]


def graded_key(index: MultiIndex):
    """Sort key for graded-lexicographic order (total degree, then lexicographic)."""
    return (sum(index), index)


def _backward(index: MultiIndex):
    for n, v in enumerate(index):
        if v > 0:
            yield index[:n] + (v - 1,) + index[n + 1 :]


def _forward(index: MultiIndex):
    for n in range(len(index)):
        yield index[:n] + (index[n] + 1,) + index[n + 1 :]


def is_downward_closed(indices: Iterable[Sequence[int]]) -> bool:
    """True iff every backward neighbour of every member is also a member."""
    members = {tuple(int(v) for v in i) for i in indices}
    return all(b in members for i in members for b in _backward(i))


class MultiIndexSet:
    """Downward-closed set of N-dimensional multi-indices kept in insertion order.

    The admissible frontier is maintained incrementally: inserting an index
    only needs to inspect its ``N`` forward neighbours.

    Parameters
    ----------
    dim : int
        Number of dimensions ``N``.
    indices : iterable of sequences of int, optional
        Initial members. They must form a downward-closed set; they are
        inserted in graded-lexicographic order unless ``ordered=True``.
    """

    def __init__(self, dim: int, indices: Iterable[Sequence[int]] = (), ordered: bool = False):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = dim
        self._order: list[MultiIndex] = []
        self._members: set[MultiIndex] = set()
        self._frontier: set[MultiIndex] = {(0,) * dim}
        items = [self._coerce(i) for i in indices]
        if len(set(items)) != len(items):
            raise ContractError("duplicate multi-indices")
        if not is_downward_closed(items):
            raise ContractError("initial multi-index set is not downward closed")
        if not ordered:
            items.sort(key=graded_key)
        for i in items:
            self.add(i)

    def _coerce(self, index) -> MultiIndex:
        t = tuple(int(v) for v in index)
        if len(t) != self.dim or any(v < 0 for v in t):
            raise ValueError(f"{index!r} is not a multi-index of dimension {self.dim}")
        return t

    def __len__(self):
        return len(self._order)

    def __iter__(self):
        return iter(self._order)

    def __contains__(self, index):
        return tuple(index) in self._members

    def __getitem__(self, k):
        return self._order[k]

    def __repr__(self):
        return f"MultiIndexSet(dim={self.dim}, size={len(self)})"

    @property
    def indices(self) -> list[MultiIndex]:
        """Members in insertion (growth) order."""
        return list(self._order)

    def as_array(self) -> np.ndarray:
        return np.array(self._order, dtype=int).reshape(len(self._order), self.dim)

    def sorted(self) -> list[MultiIndex]:
        """Members in graded-lexicographic order, for reports."""
        return sorted(self._order, key=graded_key)

    def admissible(self) -> list[MultiIndex]:
        """Indices whose insertion keeps the set downward closed, lexicographically sorted."""
        return sorted(self._frontier)

    def is_admissible(self, index) -> bool:
        return tuple(index) in self._frontier

    def add(self, index) -> None:
        """Insert an admissible index."""
        i = self._coerce(index)
        if i not in self._frontier:
            if i in self._members:
                raise ContractError(f"{i} is already in the set")
            raise ContractError(f"{i} is not admissible; insertion would break downward closure")
        self._frontier.discard(i)
        self._members.add(i)
        self._order.append(i)
        for f in _forward(i):
            if f not in self._members and all(b in self._members for b in _backward(f)):
                self._frontier.add(f)

    def copy(self) -> MultiIndexSet:
        out = MultiIndexSet.__new__(MultiIndexSet)
        out.dim = self.dim
        out._order = list(self._order)
        out._members = set(self._members)
        out._frontier = set(self._frontier)
        return out

    def max_degrees(self) -> tuple[int, ...]:
        if not self._order:
            return (0,) * self.dim
        return tuple(int(v) for v in self.as_array().max(axis=0))


def _bounded_tuples(dim: int, budget: int):
    if dim == 1:
        for v in range(budget + 1):
            yield (v,)
        return
    for v in range(budget + 1):
        for rest in _bounded_tuples(dim - 1, budget - v):
            yield (v,) + rest


def td_set(dim: int, p_max: int) -> MultiIndexSet:
    """Total-degree set ``{p : sum(p) <= p_max}`` in graded-lexicographic order."""
    if dim < 1 or p_max < 0:
        raise ValueError("td_set needs dim >= 1 and p_max >= 0")
    members = sorted(_bounded_tuples(dim, p_max), key=graded_key)
    return MultiIndexSet(dim, members, ordered=True)


def node_for(index: Sequence[int], sequences) -> np.ndarray:
    """Multivariate Leja node ``(y_1^(i_1), ..., y_N^(i_N))`` of a multi-index.

    ``sequences`` holds one indexable node sequence per dimension; each must
    already contain at least ``i_n + 1`` nodes.
    """
    if len(index) != len(sequences):
        raise ValueError("multi-index and sequences differ in dimension")
    out = np.empty(len(index))
    for n, (i, seq) in enumerate(zip(index, sequences)):
        if i >= len(seq):
            raise ContractError(
                f"sequence for dimension {n} has {len(seq)} nodes, index needs {i + 1}"
            )
        out[n] = seq[i]
    return out


def admissible(indices: Iterable[Sequence[int]], dim: int | None = None) -> list[MultiIndex]:
    """Admissible frontier of a downward-closed collection of multi-indices.

    Raises
    ------
    ContractError
        If ``indices`` is not downward closed.
    """
    items = [tuple(int(v) for v in i) for i in indices]
    if dim is None:
        if not items:
            raise ValueError("dim is required for an empty set")
        dim = len(items[0])
    if not is_downward_closed(items):
        raise ContractError("admissible() requires a downward-closed set")
    return MultiIndexSet(dim, items).admissible()

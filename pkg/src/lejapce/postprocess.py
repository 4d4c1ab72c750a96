"""Moments and Sobol indices read off an orthonormal PCE.

With an orthonormal basis the mean is the constant coefficient and every
other coefficient contributes ``c_p**2`` to the variance. Grouping those
contributions by which dimensions a multi-index touches gives the Sobol
decomposition.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractError, NumericalError

#: Sobol indices below this are reported as negligible.
NEGLIGIBLE = 0.01


def _terms(p):
    """(index array, coefficient array) of a PCE-like object."""
    idx = np.array(p.indices, dtype=int).reshape(len(p.indices), -1)
    return idx, np.asarray(p.coefficients, dtype=float)


def mean(p) -> float:
    """Expected value: the coefficient of the zero multi-index."""
    idx, c = _terms(p)
    zero = np.flatnonzero(~idx.any(axis=1))
    if zero.size != 1:
        raise ContractError("the zero multi-index is not part of the expansion")
    return float(c[zero[0]])


def variance(p) -> float:
    """Sum of squared coefficients over all non-constant terms."""
    idx, c = _terms(p)
    return float(np.sum(c[idx.any(axis=1)] ** 2))


@dataclass
class SensitivityReport:
    """Mean, variance and first/total-order Sobol indices.

    ``interactions`` maps a support set (tuple of 0-based dimensions) to its
    share of the variance; it is only filled on request.
    """

    mean: float
    variance: float
    first_order: np.ndarray
    total_order: np.ndarray
    names: tuple = ()
    interactions: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.first_order)

    def _labels(self):
        return list(self.names) if self.names else [f"y{n + 1}" for n in range(self.dim)]

    def significant(self, threshold: float = NEGLIGIBLE) -> list[int]:
        """Dimensions whose total-order index reaches ``threshold``."""
        return [n for n in range(self.dim) if self.total_order[n] >= threshold]

    def to_dict(self) -> dict:
        labels = self._labels()
        out = {
            "mean": self.mean,
            "variance": self.variance,
            "dimensions": [
                {"name": labels[n], "S_f": float(self.first_order[n]), "S_t": float(self.total_order[n])}
                for n in range(self.dim)
            ],
            "negligible": [labels[n] for n in range(self.dim) if n not in self.significant()],
        }
        if self.interactions:
            out["interactions"] = [
                {"support": [labels[n] for n in k], "share": v} for k, v in sorted(self.interactions.items())
            ]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dimension", "S_f", "S_t"])
        for name, sf, st in zip(self._labels(), self.first_order, self.total_order):
            w.writerow([name, repr(float(sf)), repr(float(st))])
        return buf.getvalue()


def sobol_indices(p, interactions: bool = False, names=None) -> SensitivityReport:
    """First- and total-order Sobol indices of a PCE.

    Parameters
    ----------
    p : PceSurrogate
        Any object with ``indices`` and orthonormal ``coefficients``.
    interactions : bool
        Also report the variance share of every interaction support set.
    names : sequence of str, optional
        Labels for the dimensions in the report.

    Raises
    ------
    NumericalError
        If the expansion has zero variance, where the indices are undefined.
    """
    idx, c = _terms(p)
    nz = idx != 0
    sq = c**2
    var = float(np.sum(sq[nz.any(axis=1)]))
    if not var > 0.0:
        raise NumericalError("Sobol indices are undefined for a model with zero variance")
    only = nz.sum(axis=1) == 1
    first = np.array([sq[only & nz[:, n]].sum() for n in range(idx.shape[1])]) / var
    total = np.array([sq[nz[:, n]].sum() for n in range(idx.shape[1])]) / var
    groups: dict = {}
    if interactions:
        for row, s in zip(nz, sq):
            if row.any():
                key = tuple(int(n) for n in np.flatnonzero(row))
                groups[key] = groups.get(key, 0.0) + float(s)
        groups = {k: v / var for k, v in groups.items()}
    return SensitivityReport(mean(p), var, first, total, tuple(names or ()), groups)

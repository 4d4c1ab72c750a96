"""Orthonormal polynomial families for the input laws.

Each family is stored through the recurrence coefficients of its *monic*
version, ``pi_{k+1}(y) = (y - alpha_k) pi_k(y) - beta_k pi_{k-1}(y)``, with
``beta_0`` the total mass of the measure. Orthonormal values come from the
normalized recurrence

    sqrt(beta_{k+1}) psi_{k+1} = (y - alpha_k) psi_k - sqrt(beta_k) psi_{k-1}.

Uniform and normal laws use the Legendre and Hermite coefficients in closed
form. Every other law goes through a discretized Stieltjes procedure.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .distributions import Distribution, Normal, Uniform
from .exceptions import NumericalError

logger = logging.getLogger(__name__)

#: Hard cap on the polynomial degree a recurrence table may carry.
MAX_DEGREE = 60

_STIELTJES_RTOL = 1e-12
_GL_POINTS = 32


@dataclass(frozen=True, eq=False)
class RecurrenceTable:
    """Monic three-term recurrence coefficients of one orthogonal family.

    ``alpha`` and ``beta`` both have length ``max_degree + 1``, which is
    enough to evaluate ``psi_0 .. psi_max_degree`` and to build Gauss rules
    with up to ``max_degree + 1`` points.
    """

    alpha: np.ndarray
    beta: np.ndarray
    source: str = "analytic"

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float).copy()
        beta = np.asarray(self.beta, dtype=float).copy()
        if alpha.shape != beta.shape or alpha.ndim != 1 or alpha.size == 0:
            raise ValueError("alpha and beta must be non-empty 1-D arrays of equal length")
        if not np.all(np.isfinite(alpha)) or not np.all(np.isfinite(beta)) or np.any(beta <= 0):
            raise NumericalError("recurrence coefficients must be finite with beta > 0")
        alpha.flags.writeable = False
        beta.flags.writeable = False
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def max_degree(self) -> int:
        return self.alpha.size - 1

    def truncate(self, max_degree: int) -> RecurrenceTable:
        if max_degree > self.max_degree:
            raise ValueError(f"table holds degree {self.max_degree}, asked for {max_degree}")
        return RecurrenceTable(
            self.alpha[: max_degree + 1], self.beta[: max_degree + 1], self.source
        )

    def to_dict(self) -> dict:
        return {"alpha": self.alpha.tolist(), "beta": self.beta.tolist(), "source": self.source}

    @classmethod
    def from_dict(cls, d: dict) -> RecurrenceTable:
        return cls(np.array(d["alpha"], dtype=float), np.array(d["beta"], dtype=float), d["source"])


def composite_gauss_legendre(lo: float, hi: float, panels: int, points: int = _GL_POINTS):
    """Nodes and weights of a composite Gauss-Legendre rule on ``[lo, hi]``."""
    x, w = np.polynomial.legendre.leggauss(points)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _stieltjes(nodes, weights, max_degree):
    """Discretized Stieltjes procedure on a discrete measure (orthonormal variant)."""
    alpha = np.empty(max_degree + 1)
    beta = np.empty(max_degree + 1)
    beta[0] = weights.sum()
    p_prev = np.zeros_like(nodes)
    p = np.full_like(nodes, 1.0 / np.sqrt(beta[0]))
    for k in range(max_degree + 1):
        alpha[k] = np.dot(weights, nodes * p * p)
        if k == max_degree:
            break
        q = (nodes - alpha[k]) * p - (np.sqrt(beta[k]) * p_prev if k > 0 else 0.0)
        b = np.dot(weights, q * q)
        if not (np.isfinite(b) and b > 0):
            raise NumericalError(f"Stieltjes procedure broke down at degree {k + 1} (beta={b})")
        beta[k + 1] = b
        p_prev, p = p, q / np.sqrt(b)
    return alpha, beta


def _standardized(dist: Distribution):
    """Unit-scale version of ``dist`` as (pdf, lo, hi) plus the affine map back."""
    loc, scale = dist.loc_scale
    lo, hi = dist.quadrature_interval()
    zlo, zhi = (lo - loc) / scale, (hi - loc) / scale
    return (lambda z: scale * dist.pdf(loc + scale * z)), zlo, zhi, loc, scale


def _stieltjes_recurrence(dist: Distribution, max_degree: int):
    pdf, zlo, zhi, loc, scale = _standardized(dist)
    previous = None
    panels = 8
    while True:
        z, w = composite_gauss_legendre(zlo, zhi, panels)
        w = w * pdf(z)
        # Renormalize away the quadrature error in the total mass.
        w = w / w.sum()
        alpha, beta = _stieltjes(z, w, max_degree)
        if previous is not None:
            pa, pb = previous
            da = np.max(np.abs(alpha - pa) / np.maximum(np.abs(alpha), np.sqrt(beta)))
            db = np.max(np.abs(beta - pb) / beta)
            if max(da, db) < _STIELTJES_RTOL:
                break
            if panels >= 1024:
                logger.warning(
                    "Stieltjes discretization for %r stalled at relative change %.2e",
                    dist, max(da, db),
                )
                break
        previous = alpha, beta
        panels *= 2
    alpha = loc + scale * alpha
    beta = beta * scale**2
    beta[0] = 1.0
    return alpha, beta


@functools.lru_cache(maxsize=None)
def _full_recurrence(dist: Distribution) -> RecurrenceTable:
    k = np.arange(MAX_DEGREE + 1, dtype=float)
    if isinstance(dist, Uniform):
        loc, half = dist.loc_scale
        alpha = np.full(k.size, loc)
        beta = np.empty(k.size)
        beta[0] = 1.0
        beta[1:] = half**2 * k[1:] ** 2 / (4.0 * k[1:] ** 2 - 1.0)
        return RecurrenceTable(alpha, beta, "analytic")
    if isinstance(dist, Normal):
        alpha = np.full(k.size, float(dist.mu))
        beta = np.empty(k.size)
        beta[0] = 1.0
        beta[1:] = dist.var * k[1:]
        return RecurrenceTable(alpha, beta, "analytic")
    if isinstance(dist, Distribution):
        alpha, beta = _stieltjes_recurrence(dist, MAX_DEGREE)
        return RecurrenceTable(alpha, beta, "stieltjes")
    raise TypeError(f"not a Distribution: {dist!r}")


def build_recurrence(dist: Distribution, max_degree: int = MAX_DEGREE) -> RecurrenceTable:
    """Recurrence table of the orthonormal family of ``dist`` up to ``max_degree``.

    Tables are computed once per distribution at the degree cap and sliced.
    """
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    if max_degree > MAX_DEGREE:
        raise ValueError(f"max_degree {max_degree} exceeds the supported cap {MAX_DEGREE}")
    return _full_recurrence(dist).truncate(max_degree)


def orthonormal_table(rec: RecurrenceTable, y, degree: int) -> np.ndarray:
    """Values ``psi_0(y) .. psi_degree(y)``, shape ``y.shape + (degree + 1,)``."""
    if degree > rec.max_degree:
        raise ValueError(f"degree {degree} exceeds table capacity {rec.max_degree}")
    y = np.asarray(y, dtype=float)
    sb = np.sqrt(rec.beta)
    out = np.empty(y.shape + (degree + 1,))
    out[..., 0] = 1.0 / sb[0]
    if degree >= 1:
        out[..., 1] = (y - rec.alpha[0]) * out[..., 0] / sb[1]
    for k in range(1, degree):
        out[..., k + 1] = ((y - rec.alpha[k]) * out[..., k] - sb[k] * out[..., k - 1]) / sb[k + 1]
    return out


def eval_orthonormal(rec: RecurrenceTable, degree: int, y):
    """Orthonormal polynomial of the given degree evaluated at ``y``."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    out = orthonormal_table(rec, y, degree)[..., degree]
    return float(out) if np.ndim(y) == 0 else out


def gauss_rule(rec: RecurrenceTable, n: int):
    """n-point Gauss rule of the measure via Golub-Welsch.

    Returns
    -------
    nodes, weights : ndarray
        Nodes in increasing order; weights sum to ``beta[0]``.
    """
    if not 1 <= n <= rec.max_degree + 1:
        raise ValueError(f"Gauss rule size must be in [1, {rec.max_degree + 1}], got {n}")
    if n == 1:
        return np.array([rec.alpha[0]]), np.array([rec.beta[0]])
    try:
        nodes = eigh_tridiagonal(rec.alpha[:n], np.sqrt(rec.beta[1:n]), eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"tridiagonal eigensolver failed: {exc}") from exc
    # Christoffel numbers keep full relative accuracy for the tiny tail weights,
    # where squared eigenvector components only carry absolute accuracy.
    weights = 1.0 / np.sum(orthonormal_table(rec, nodes, n - 1) ** 2, axis=1)
    return nodes, weights


def orthonormality_defect(rec: RecurrenceTable, up_to: int, nodes=None, weights=None) -> float:
    """Max entry of ``|G - I|`` with ``G_pq = E[psi_p psi_q]`` for ``p, q <= up_to``.

    By default the Gram matrix is integrated with the family's own Gauss rule
    of ``up_to + 1`` points, which is exact for these integrands. Pass an
    external quadrature of the pdf (``nodes``, ``weights``) for an independent check.
    """
    if up_to > rec.max_degree:
        raise ValueError(f"up_to {up_to} exceeds table capacity {rec.max_degree}")
    if nodes is None:
        nodes, weights = gauss_rule(rec, up_to + 1)
    vals = orthonormal_table(rec, np.asarray(nodes, dtype=float), up_to)
    gram = vals.T @ (np.asarray(weights, dtype=float)[:, None] * vals)
    return float(np.max(np.abs(gram - np.eye(up_to + 1))))

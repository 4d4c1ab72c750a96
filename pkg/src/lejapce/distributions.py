"""Univariate input laws and their independent product.

All distributions are immutable and hashable so they can key caches
(Leja sequences and recurrence tables are shared between dimensions that
use the same law). Densities, CDFs and quantiles accept scalars or arrays.

Normal laws are parametrized by their *variance*, like ``N(mu, sigma^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy.special import ndtr, ndtri

from .exceptions import ConfigurationError

#: Tail mass cut off on each side of an unbounded law for node searches.
TAIL_MASS = 1e-8

EULER_GAMMA = 0.5772156649015329


def _check_prob(q):
    q = np.asarray(q, dtype=float)
    if np.any(~(q > 0.0)) or np.any(~(q < 1.0)):
        raise ValueError("quantile level must lie in the open interval (0, 1)")
    return q


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


class Distribution:
    """Base class for a continuous univariate law."""

    kind: ClassVar[str] = ""

    def pdf(self, y):
        raise NotImplementedError

    def cdf(self, y):
        raise NotImplementedError

    def quantile(self, q):
        raise NotImplementedError

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def loc_scale(self) -> tuple[float, float]:
        """Affine map ``y = loc + scale * z`` to a unit-scale version of the law."""
        raise NotImplementedError

    def median(self) -> float:
        return float(self.quantile(0.5))

    def effective_support(self) -> tuple[float, float]:
        """Bounded search interval: exact support, or quantile tails at ``TAIL_MASS``."""
        lo, hi = self.support
        if not math.isfinite(lo):
            lo = float(self.quantile(TAIL_MASS))
        if not math.isfinite(hi):
            hi = float(self.upper_quantile(TAIL_MASS))
        return lo, hi

    def quadrature_interval(self) -> tuple[float, float]:
        """Interval outside which ``pdf`` underflows; used to integrate polynomial moments."""
        return self.effective_support()

    def upper_quantile(self, tail):
        """Point with survival probability ``tail``, i.e. ``quantile(1 - tail)``."""
        return self.quantile(1.0 - np.asarray(tail, dtype=float))

    def to_dict(self) -> dict:
        raise NotImplementedError

    @property
    def bounded(self) -> bool:
        lo, hi = self.support
        return math.isfinite(lo) and math.isfinite(hi)


@dataclass(frozen=True)
class Uniform(Distribution):
    a: float = -1.0
    b: float = 1.0

    kind: ClassVar[str] = "uniform"

    def __post_init__(self):
        if not self.a < self.b:
            raise ConfigurationError(f"Uniform requires a < b, got a={self.a}, b={self.b}")

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where((y >= self.a) & (y <= self.b), 1.0 / (self.b - self.a), 0.0)
        return _scalar_or_array(out, y)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.clip((y - self.a) / (self.b - self.a), 0.0, 1.0)
        return _scalar_or_array(out, y)

    def quantile(self, q):
        q = _check_prob(q)
        out = self.a + q * (self.b - self.a)
        return _scalar_or_array(out, q)

    def median(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def support(self):
        return float(self.a), float(self.b)

    @property
    def mean(self):
        return 0.5 * (self.a + self.b)

    @property
    def loc_scale(self):
        return 0.5 * (self.a + self.b), 0.5 * (self.b - self.a)

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Normal(Distribution):
    mu: float = 0.0
    var: float = 1.0

    kind: ClassVar[str] = "normal"

    def __post_init__(self):
        if not self.var > 0:
            raise ConfigurationError(f"Normal requires var > 0, got {self.var}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.var)

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        z = (y - self.mu) / self.sigma
        out = np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))
        return _scalar_or_array(out, y)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        return _scalar_or_array(ndtr((y - self.mu) / self.sigma), y)

    def quantile(self, q):
        q = _check_prob(q)
        return _scalar_or_array(self.mu + self.sigma * ndtri(q), q)

    def upper_quantile(self, tail):
        tail = _check_prob(tail)
        return _scalar_or_array(self.mu - self.sigma * ndtri(tail), tail)

    def median(self) -> float:
        return float(self.mu)

    @property
    def support(self):
        return -math.inf, math.inf

    @property
    def mean(self):
        return float(self.mu)

    @property
    def loc_scale(self):
        return float(self.mu), self.sigma

    def to_dict(self):
        return {"kind": self.kind, "mu": self.mu, "var": self.var}


@dataclass(frozen=True)
class TruncatedNormal(Distribution):
    """Normal law ``N(mu, var)`` restricted to ``[lo, hi]`` and renormalized."""

    mu: float = 0.0
    var: float = 1.0
    lo: float = -1.0
    hi: float = 1.0

    kind: ClassVar[str] = "truncated_normal"

    def __post_init__(self):
        if not self.var > 0:
            raise ConfigurationError(f"TruncatedNormal requires var > 0, got {self.var}")
        if not self.lo < self.hi:
            raise ConfigurationError(
                f"TruncatedNormal requires lo < hi, got lo={self.lo}, hi={self.hi}"
            )
        sigma = math.sqrt(self.var)
        a = (self.lo - self.mu) / sigma
        b = (self.hi - self.mu) / sigma
        # Work on the lower tail of the normal for accuracy; reflect if needed.
        flip = a > 0
        if flip:
            mass = float(ndtr(-a) - ndtr(-b))
        else:
            mass = float(ndtr(b) - ndtr(a))
        if not mass > 0:
            raise ConfigurationError("TruncatedNormal truncation interval has zero mass")
        object.__setattr__(self, "_sigma", sigma)
        object.__setattr__(self, "_a", a)
        object.__setattr__(self, "_b", b)
        object.__setattr__(self, "_flip", flip)
        object.__setattr__(self, "_mass", mass)

    @property
    def sigma(self) -> float:
        return self._sigma

    def _z(self, y):
        return (np.asarray(y, dtype=float) - self.mu) / self._sigma

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        z = self._z(y)
        dens = np.exp(-0.5 * z * z) / (self._sigma * self._mass * math.sqrt(2.0 * math.pi))
        out = np.where((y >= self.lo) & (y <= self.hi), dens, 0.0)
        return _scalar_or_array(out, y)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        z = np.clip(self._z(y), self._a, self._b)
        if self._flip:
            out = (ndtr(-self._a) - ndtr(-z)) / self._mass
        else:
            out = (ndtr(z) - ndtr(self._a)) / self._mass
        return _scalar_or_array(np.clip(out, 0.0, 1.0), y)

    def quantile(self, q):
        q = _check_prob(q)
        if self._flip:
            z = -ndtri(ndtr(-self._a) - q * self._mass)
        else:
            z = ndtri(ndtr(self._a) + q * self._mass)
        y = np.clip(self.mu + self._sigma * z, self.lo, self.hi)
        return _scalar_or_array(y, q)

    @property
    def support(self):
        return float(self.lo), float(self.hi)

    @property
    def mean(self):
        phi = lambda t: math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)  # noqa: E731
        return self.mu + self._sigma * (phi(self._a) - phi(self._b)) / self._mass

    @property
    def loc_scale(self):
        return float(self.mu), self._sigma

    def to_dict(self):
        return {"kind": self.kind, "mu": self.mu, "var": self.var, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Gumbel(Distribution):
    """Gumbel law for maxima, ``F(y) = exp(-exp(-(y - loc) / scale))``."""

    loc: float = 0.0
    scale: float = 1.0

    kind: ClassVar[str] = "gumbel"

    def __post_init__(self):
        if not self.scale > 0:
            raise ConfigurationError(f"Gumbel requires scale > 0, got {self.scale}")

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        z = (y - self.loc) / self.scale
        with np.errstate(over="ignore"):
            out = np.exp(-(z + np.exp(-z))) / self.scale
        return _scalar_or_array(out, y)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        z = (y - self.loc) / self.scale
        with np.errstate(over="ignore"):
            out = np.exp(-np.exp(-z))
        return _scalar_or_array(out, y)

    def quantile(self, q):
        q = _check_prob(q)
        return _scalar_or_array(self.loc - self.scale * np.log(-np.log(q)), q)

    def upper_quantile(self, tail):
        tail = _check_prob(tail)
        return _scalar_or_array(self.loc - self.scale * np.log(-np.log1p(-tail)), tail)

    def median(self) -> float:
        return self.loc - self.scale * math.log(math.log(2.0))

    def quadrature_interval(self):
        # exp(-(z + e^-z)) underflows double precision below z = -6.6 and above z = 745.
        return self.loc - 6.6 * self.scale, self.loc + 745.0 * self.scale

    @property
    def support(self):
        return -math.inf, math.inf

    @property
    def mean(self):
        return self.loc + self.scale * EULER_GAMMA

    @property
    def loc_scale(self):
        return float(self.loc), float(self.scale)

    def to_dict(self):
        return {"kind": self.kind, "loc": self.loc, "scale": self.scale}


_KINDS = {
    "uniform": (Uniform, ("a", "b")),
    "normal": (Normal, ("mu", "var")),
    "truncated_normal": (TruncatedNormal, ("mu", "var", "lo", "hi")),
    "gumbel": (Gumbel, ("loc", "scale")),
}


def distribution_from_dict(spec: dict) -> Distribution:
    """Build a distribution from its JSON form, e.g. ``{"kind": "gumbel", "loc": 0, "scale": 1}``."""
    try:
        cls, fields = _KINDS[spec["kind"]]
    except KeyError:
        raise ConfigurationError(f"unknown or missing distribution kind in {spec!r}") from None
    missing = [f for f in fields if f not in spec]
    extra = set(spec) - set(fields) - {"kind"}
    if missing or extra:
        raise ConfigurationError(
            f"{spec['kind']} expects fields {fields}; missing={missing}, unexpected={sorted(extra)}"
        )
    return cls(*(float(spec[f]) for f in fields))


@dataclass(frozen=True)
class ProductDistribution:
    """Joint law of independent inputs, one marginal per dimension."""

    dims: tuple[Distribution, ...]

    def __post_init__(self):
        dims = tuple(self.dims)
        if not dims:
            raise ConfigurationError("ProductDistribution needs at least one dimension")
        object.__setattr__(self, "dims", dims)

    def __len__(self):
        return len(self.dims)

    def __getitem__(self, n):
        return self.dims[n]

    def __iter__(self):
        return iter(self.dims)

    @property
    def dim(self) -> int:
        return len(self.dims)

    def pdf(self, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        out = np.ones(y.shape[0])
        for n, d in enumerate(self.dims):
            out *= d.pdf(y[:, n])
        return out

    def to_list(self) -> list[dict]:
        return [d.to_dict() for d in self.dims]

    @classmethod
    def from_list(cls, specs) -> ProductDistribution:
        return cls(tuple(distribution_from_dict(s) for s in specs))


def make_rng(seed: int) -> np.random.Generator:
    """The library's reproducible generator: numpy ``PCG64`` seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def sample(pdist: ProductDistribution, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` i.i.d. realizations by inverse transform.

    Returns an array of shape ``(count, N)``. Uniform levels are built from
    53 random bits offset by half a unit, so they lie strictly inside (0, 1).
    """
    if count < 1:
        raise ValueError(f"sample count must be >= 1, got {count}")
    rng = make_rng(seed)
    bits = rng.integers(0, 2**53, size=(count, pdist.dim), dtype=np.int64)
    u = (bits.astype(float) + 0.5) / 2.0**53
    out = np.empty_like(u)
    for n, d in enumerate(pdist.dims):
        out[:, n] = d.quantile(u[:, n])
    return out

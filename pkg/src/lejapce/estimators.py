"""scikit-learn style wrappers around the adaptive builders.

Unlike a regression estimator these do not learn from a fixed data set:
the collocation nodes are chosen by the algorithm, so :meth:`fit` takes the
model to be sampled. Prediction, ``get_params``/``set_params``, cloning and
``score`` (R^2) behave as usual.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .distributions import ProductDistribution
from .hierarchical import adapt_hier
from .pce import adapt_pce, transform_to_pce
from .postprocess import sobol_indices


class _AdaptiveSurrogate(RegressorMixin, BaseEstimator):
    def __init__(self, distributions=None, budget=100, tol=0.0, init_set=None, n_jobs=1):
        self.distributions = distributions
        self.budget = budget
        self.tol = tol
        self.init_set = init_set
        self.n_jobs = n_jobs

    def _pdist(self, model) -> ProductDistribution:
        d = self.distributions
        if d is None:
            if not hasattr(model, "input_spec"):
                raise ValueError("distributions must be given for a plain callable model")
            return model.input_spec
        if isinstance(d, ProductDistribution):
            return d
        return ProductDistribution(tuple(d))

    def fit(self, model, y=None):
        """Sample ``model`` adaptively and build the surrogate.

        Parameters
        ----------
        model : callable or Model
            ``g(y) -> float`` or an object with a batch ``evaluate`` method.
        y : None
            Ignored; present for API compatibility.
        """
        if not callable(model) and not hasattr(model, "evaluate"):
            raise TypeError("fit expects the model to sample, not a data matrix")
        pdist = self._pdist(model)
        self.surrogate_ = self._build(model, pdist)
        self.n_features_in_ = pdist.dim
        self.n_evaluations_ = self.surrogate_.n_evaluations
        return self

    def predict(self, X):
        check_is_fitted(self, "surrogate_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self.surrogate_(X)

    @property
    def pce_(self):
        check_is_fitted(self, "surrogate_")
        return self.surrogate_

    @property
    def mean_(self) -> float:
        return self.sobol_.mean

    @property
    def variance_(self) -> float:
        return self.sobol_.variance

    @property
    def sobol_(self):
        """:class:`~lejapce.postprocess.SensitivityReport` of the fitted expansion."""
        return sobol_indices(self.pce_)


class LejaInterpolator(_AdaptiveSurrogate):
    """Dimension-adaptive hierarchical Leja interpolation (surplus-driven).

    Parameters
    ----------
    distributions : ProductDistribution or sequence of Distribution, optional
        Input laws; taken from ``model.input_spec`` when omitted.
    budget : int
        Simulation budget.
    tol : float
        Stop once the frontier's summed absolute surplus is below this.
    init_set : iterable of multi-indices, optional
        Downward-closed starting set.
    n_jobs : int
        Threads for model evaluations of plain callables.
    """

    def _build(self, model, pdist):
        return adapt_hier(model, pdist, self.init_set, self.tol, self.budget, n_jobs=self.n_jobs)

    @property
    def pce_(self):
        check_is_fitted(self, "surrogate_")
        if getattr(self, "_pce_cache", None) is None or self._pce_cache[0] is not self.surrogate_:
            self._pce_cache = (self.surrogate_, transform_to_pce(self.surrogate_))
        return self._pce_cache[1]


class InterpolatingPCE(_AdaptiveSurrogate):
    """Dimension-adaptive interpolating PCE (coefficient-driven).

    Parameters are as for :class:`LejaInterpolator`; ``tol`` bounds the
    frontier's summed absolute orthonormal coefficients.
    """

    def _build(self, model, pdist):
        return adapt_pce(model, pdist, self.init_set, self.tol, self.budget, n_jobs=self.n_jobs)


__all__ = ["LejaInterpolator", "InterpolatingPCE"]

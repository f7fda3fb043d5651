"""scikit-learn style wrappers.

:class:`CausalFraction` is a stateless transformer turning behaviours into
their causal fraction, so it can sit in a :class:`sklearn.pipeline.Pipeline`
or be cloned and grid-searched like any other estimator.  The two other
classes fit causal models to a single set of statistics.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import StructureError
from .fraction import causal_fraction, frugal_decomposition
from .models import Structure, construct, eval_statistics, sample_trials
from .simulator import run_frugal
from .statistics import EPS_FILE
from .validation import check_behaviours, check_generator, check_statistics


class CausalFraction(TransformerMixin, BaseEstimator):
    """Map each behaviour to its causal fraction ``q``.

    Parameters
    ----------
    tol : float
        Tolerance for normalisation and ``a _|_ y | x`` checks.
    pivot_rule : {"devex", "dantzig", "bland"}
        Entering-variable rule of the simplex solver.

    Attributes
    ----------
    dims_ : Cardinalities
        Cardinalities seen during ``fit``; ``transform`` requires the same.
    result_ : FractionResult
        Decomposition of the first behaviour passed to ``fit``.
    q_ : float
        ``result_.q``.
    """

    def __init__(self, tol=EPS_FILE, pivot_rule="devex"):
        self.tol = tol
        self.pivot_rule = pivot_rule

    def _solve(self, behaviour):
        return causal_fraction(behaviour, self.tol, pivot_rule=self.pivot_rule)

    def fit(self, X, y=None):
        behaviours = check_behaviours(X)
        if not behaviours:
            raise ValueError("fit needs at least one behaviour")
        self.dims_ = behaviours[0].dims
        if any(b.dims != self.dims_ for b in behaviours):
            raise StructureError("all behaviours must share the same cardinalities")
        self.result_ = self._solve(behaviours[0])
        self.q_ = self.result_.q
        return self

    def transform(self, X):
        """Column vector of causal fractions, one row per behaviour."""
        check_is_fitted(self, "dims_")
        behaviours = check_behaviours(X)
        for b in behaviours:
            if b.dims != self.dims_:
                raise StructureError(f"expected cardinalities {self.dims_.shape}, got {b.dims.shape}")
        return np.array([[self._solve(b).q] for b in behaviours])


class CausalModelEstimator(BaseEstimator):
    """Fit a single-arrow causal model (``"nl"``, ``"r"`` or ``"nf"``) to statistics."""

    def __init__(self, structure="nl", tol=EPS_FILE):
        self.structure = structure
        self.tol = tol

    def fit(self, X, y=None, settings=None):
        stats = check_statistics(X, settings)
        self.model_ = construct(Structure.parse(self.structure), stats, self.tol)
        return self

    def predict(self, X=None):
        """Statistics generated by the fitted model (``X`` is ignored)."""
        check_is_fitted(self, "model_")
        return eval_statistics(self.model_)

    def sample(self, n, random_state=None):
        """``(n, 5)`` array of trials ``a, b, x, y, lambda``."""
        check_is_fitted(self, "model_")
        return sample_trials(self.model_, n, check_generator(random_state))


class FrugalSimulator(BaseEstimator):
    """Split statistics into baseline and extra-arrow parts and simulate them.

    ``random_state`` must be an integer (or ``None`` for 0) so that reports
    are reproducible.
    """

    def __init__(self, target="nl", n_trials=100_000, random_state=None, tol=EPS_FILE):
        self.target = target
        self.n_trials = n_trials
        self.random_state = random_state
        self.tol = tol

    def fit(self, X, y=None, settings=None):
        self.statistics_ = check_statistics(X, settings)
        self.decomposition_ = frugal_decomposition(self.statistics_, self.target, self.tol)
        self.q_ = self.decomposition_.q
        return self

    def predict(self, X=None):
        """Statistics of the exact ``q``-weighted mixture of the two models."""
        check_is_fitted(self, "decomposition_")
        return self.decomposition_.mixture()

    def simulate(self, n_trials=None):
        check_is_fitted(self, "decomposition_")
        seed = 0 if self.random_state is None else int(self.random_state)
        return run_frugal(
            self.statistics_,
            self.target,
            n_trials or self.n_trials,
            seed,
            self.tol,
            decomposition=self.decomposition_,
        )

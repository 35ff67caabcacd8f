"""scikit-learn style wrappers.

``X`` is always a square adjacency matrix (or a :class:`DirectedWeightedGraph`)
with ``X[i, j]`` the weight of the edge ``j -> i``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_adjacency
from .baselines import BaselineConfig, baseline_modify
from .exceptions import StaleFactorizationError
from .graph import DirectedWeightedGraph
from .modify import (
    BudgetConfig,
    DiscreteConfig,
    WeakenConfig,
    budget_strengthening,
    discrete_modify,
    iterative_weakening,
)
from .sensitivity import sensitivity_matrix
from .spectral import gamma_value, spectral_state


def _as_graph(X):
    if isinstance(X, DirectedWeightedGraph):
        return X
    return DirectedWeightedGraph(check_adjacency(X))


class GeneralizedConnectivity(BaseEstimator):
    """Spectral analysis of one directed weighted graph.

    Parameters
    ----------
    require_assumptions : bool, default=True
        Raise :class:`AssumptionError` unless A1-A3 hold.
    compute_gamma : bool, default=True
        Also compute the Laplacian algebraic connectivity ``gamma_``.

    Attributes
    ----------
    kappa_, xi_, v_, y_, gamma_, report_, state_
    """

    def __init__(self, require_assumptions=True, compute_gamma=True):
        self.require_assumptions = require_assumptions
        self.compute_gamma = compute_gamma

    def fit(self, X, y=None):
        g = _as_graph(X)
        st = spectral_state(g, require=self.require_assumptions)
        self.state_ = st
        self.kappa_ = st.kappa
        self.xi_ = st.xi
        self.v_ = st.v
        self.y_ = st.y
        self.report_ = st.report
        self.gamma_ = gamma_value(st.laplacian) if self.compute_gamma else None
        self.n_nodes_ = g.n
        return self

    def score(self, X=None, y=None):
        """kappa of the fitted graph (or of ``X`` if given)."""
        if X is not None:
            return spectral_state(_as_graph(X), require=False).kappa
        check_is_fitted(self, "kappa_")
        return self.kappa_


class KappaSensitivity(TransformerMixin, BaseEstimator):
    """Edge sensitivities of kappa; ``transform`` returns ``S`` with ``S[i, j] = d kappa / d a_ij``."""

    def __init__(self, threads=1):
        self.threads = threads

    def fit(self, X, y=None):
        g = _as_graph(X)
        self.state_ = spectral_state(g)
        self.sensitivity_ = sensitivity_matrix(self.state_, threads=self.threads)
        self.graph_sha256_ = g.sha256()
        return self

    def transform(self, X):
        check_is_fitted(self, "sensitivity_")
        if _as_graph(X).sha256() != self.graph_sha256_:
            raise StaleFactorizationError("transform called on a graph other than the fitted one")
        return self.sensitivity_.copy()


class _ModifierBase(TransformerMixin, BaseEstimator):
    # subclasses implement _run(graph) -> ModificationTrace

    def fit(self, X, y=None):
        g = _as_graph(X)
        self.trace_ = self._run(g)
        self.graph_sha256_ = g.sha256()
        self.kappas_ = np.array(self.trace_.kappas())
        self.final_graph_ = self.trace_.final_graph
        return self

    def transform(self, X):
        """Modified adjacency; ``X`` must be the graph passed to ``fit``."""
        check_is_fitted(self, "trace_")
        if _as_graph(X).sha256() != self.graph_sha256_:
            raise StaleFactorizationError("transform called on a graph other than the fitted one")
        return np.array(self.final_graph_.adjacency)


class SensitivityWeakening(_ModifierBase):
    """Iterative sensitivity-guided edge weakening (fixed decrement with ``fixed_step=True``)."""

    def __init__(self, step=0.2, derivative_fraction=0.1, batch=10, choose_mode="topk",
                 tau_w=1e-4, tol=1e-12, t_max=40, seed=0, fixed_step=False, threads=1):
        self.step = step
        self.derivative_fraction = derivative_fraction
        self.batch = batch
        self.choose_mode = choose_mode
        self.tau_w = tau_w
        self.tol = tol
        self.t_max = t_max
        self.seed = seed
        self.fixed_step = fixed_step
        self.threads = threads

    def _run(self, g):
        return iterative_weakening(g, WeakenConfig(**self.get_params()))


class DiscreteEdgeModifier(_ModifierBase):
    """Edge deletion (``op="delete"``) or negative-edge insertion (``op="addneg"``)."""

    def __init__(self, op="delete", choose_mode="sortrandomk", batch=10, tau_w=1e-4,
                 tol=1e-12, t_max=10, omega_neg=None, seed=0, threads=1):
        self.op = op
        self.choose_mode = choose_mode
        self.batch = batch
        self.tau_w = tau_w
        self.tol = tol
        self.t_max = t_max
        self.omega_neg = omega_neg
        self.seed = seed
        self.threads = threads

    def _run(self, g):
        return discrete_modify(g, DiscreteConfig(**self.get_params()))


class BudgetStrengthening(_ModifierBase):
    def __init__(self, budget=10.0, step=0.1, batch=10, choose_mode="topk", tol=1e-12,
                 alloc="guided", seed=0, threads=1):
        self.budget = budget
        self.step = step
        self.batch = batch
        self.choose_mode = choose_mode
        self.tol = tol
        self.alloc = alloc
        self.seed = seed
        self.threads = threads

    def _run(self, g):
        return budget_strengthening(g, BudgetConfig(**self.get_params()))


class BaselineStrengthening(_ModifierBase):
    """Structural baselines: ``dir_ebc``, ``dir_dac``, ``random`` or ``uniform``."""

    def __init__(self, strategy="dir_ebc", budget=10.0, step=0.1, batch=10, tol=1e-12, seed=0):
        self.strategy = strategy
        self.budget = budget
        self.step = step
        self.batch = batch
        self.tol = tol
        self.seed = seed

    def _run(self, g):
        params = self.get_params()
        strategy = params.pop("strategy")
        return baseline_modify(g, strategy, BaselineConfig(**params))

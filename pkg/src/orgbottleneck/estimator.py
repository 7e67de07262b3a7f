"""Scikit-learn style front end for the bottleneck solver.

The estimator treats the solve as a soft clustering of the source
alphabet: ``fit`` takes an exact joint pmf table p(x, y) of shape
(n_source_symbols, n_relevance_symbols), ``transform`` maps source
symbol indices to soft cluster assignments and ``predict`` to hard
cluster labels.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .bottleneck import SolverConfig, solve_ib
from .exceptions import ValidationError
from .info_theory import as_joint


class DiscreteInformationBottleneck(BaseEstimator, TransformerMixin):
    """Compressive soft clustering of a finite source against a relevance variable.

    Parameters mirror the functional solver: ``beta`` trades compression
    against retained relevance, ``n_clusters`` fixes the bottleneck
    alphabet size, and ``random_state`` seeds the restarts. After ``fit``
    the learned maps are available as ``encoder_`` (p(cluster | x)),
    ``cluster_weights_`` (p(cluster)) and ``decoder_`` (p(y | cluster)).
    """

    def __init__(
        self,
        n_clusters: int = 2,
        beta: float = 1.0,
        max_iter: int = 10_000,
        tol: float = 1e-10,
        n_restarts: int = 10,
        random_state: int = 0,
        anneal_schedule=None,
    ):
        self.n_clusters = n_clusters
        self.beta = beta
        self.max_iter = max_iter
        self.tol = tol
        self.n_restarts = n_restarts
        self.random_state = random_state
        self.anneal_schedule = anneal_schedule

    def _config(self) -> SolverConfig:
        schedule = None
        if self.anneal_schedule is not None:
            schedule = tuple(float(b) for b in self.anneal_schedule)
        return SolverConfig(
            beta=self.beta,
            bottleneck_cardinality=self.n_clusters,
            max_iterations=self.max_iter,
            convergence_tol=self.tol,
            restarts=self.n_restarts,
            rng_seed=self.random_state,
            anneal=schedule,
        )

    def fit(self, X, y=None):
        """Fit the encoder to an exact joint pmf table of shape (n_x, n_y)."""
        joint = as_joint(X)
        solution = solve_ib(joint, self._config())
        self.n_source_symbols_ = joint.x_size
        self.n_relevance_symbols_ = joint.y_size
        self.encoder_ = np.asarray(solution.encoder.probs)
        self.decoder_ = np.asarray(solution.decoder.probs)
        self.cluster_weights_ = np.asarray(solution.marginal.probs)
        self.compression_bits_ = solution.i_x_xhat
        self.relevance_bits_ = solution.i_y_xhat
        self.objective_ = solution.lagrangian
        self.n_iter_ = solution.iterations_used
        self.converged_ = solution.converged
        return self

    def _symbol_indices(self, X) -> np.ndarray:
        arr = np.asarray(X)
        if arr.ndim == 2 and arr.shape[1] == 1:
            arr = arr[:, 0]
        if arr.ndim != 1:
            raise ValidationError(
                f"expected a 1-d array of source symbol indices, got shape {arr.shape}"
            )
        idx = arr.astype(np.int64)
        if np.any(idx != arr):
            raise ValidationError("source symbol indices must be integers")
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_source_symbols_):
            raise ValidationError(
                f"symbol indices must lie in [0, {self.n_source_symbols_})"
            )
        return idx

    def transform(self, X) -> np.ndarray:
        """Soft cluster assignments, one encoder row per input symbol index."""
        check_is_fitted(self, "encoder_")
        return self.encoder_[self._symbol_indices(X)]

    def predict(self, X) -> np.ndarray:
        """Most likely cluster per input symbol index."""
        check_is_fitted(self, "encoder_")
        return self.encoder_[self._symbol_indices(X)].argmax(axis=1)

    def score(self, X=None, y=None) -> float:
        """Negative objective value; higher is better, as sklearn expects."""
        check_is_fitted(self, "objective_")
        return -self.objective_

"""Scikit-learn style wrappers around the affinity core.

``ConstraintSiameseEmbedder`` learns the constraint-driven embedding as a
transformer; ``LineAffinityClusterer`` turns latents plus line structure
into word clusters. Both compose with the usual get_params / set_params /
clone machinery.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import clustering, siamese
from .constraints import Constraint, ConstraintKind, ConstraintSet, ConstraintSource
from .features import Representation
from .model import BBox, ContextualLine
from .validation import check_index_pairs, check_matrix


class ConstraintSiameseEmbedder(BaseEstimator, TransformerMixin):
    """Maps row vectors to a low-dimensional affinity space.

    Training pulls must-linked rows together and pushes cannot-linked rows
    apart; ``transform`` returns the EVAL-mode latents jointly usable with
    :func:`wordaff.siamese.affinity`.
    """

    def __init__(
        self,
        latent_dim: int = 20,
        hidden_dims: tuple[int, ...] = (50, 2000),
        epochs: int = 100,
        batch_size: int = 32,
        learning_rate: float = 1e-4,
        dropout: float = 0.2,
        grad_clip_norm: float = 5.0,
        init_std: float = 0.01,
        warm_start: bool = False,
        random_state: int = 0,
    ):
        self.latent_dim = latent_dim
        self.hidden_dims = hidden_dims
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.dropout = dropout
        self.grad_clip_norm = grad_clip_norm
        self.init_std = init_std
        self.warm_start = warm_start
        self.random_state = random_state

    def _train_config(self, epochs: Optional[int] = None) -> siamese.TrainConfig:
        return siamese.TrainConfig(
            epochs=self.epochs if epochs is None else epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            dropout_p=self.dropout,
            grad_clip_norm=self.grad_clip_norm,
            init_std=self.init_std,
            rng_seed=self.random_state,
        )

    def fit(self, X, y=None, must_links=(), cannot_links=(), epochs: Optional[int] = None):
        """Fit on row vectors plus row-index constraint pairs.

        With ``warm_start`` and a previous fit, training continues from the
        current weights instead of re-initializing.
        """
        X = check_matrix(X, "X")
        must = check_index_pairs(must_links, X.shape[0], "must_links")
        cannot = check_index_pairs(cannot_links, X.shape[0], "cannot_links")
        reps = [Representation(i, X[i]) for i in range(X.shape[0])]
        cons = [
            Constraint(int(a), int(b), ConstraintKind.MUST_LINK, ConstraintSource.USER)
            for a, b in must
        ] + [
            Constraint(int(a), int(b), ConstraintKind.CANNOT_LINK, ConstraintSource.USER)
            for a, b in cannot
        ]
        if not (self.warm_start and hasattr(self, "model_")):
            self.model_ = siamese.init_model(
                X.shape[1],
                self.latent_dim,
                hidden_dims=self.hidden_dims,
                init_std=self.init_std,
                seed=self.random_state,
            )
        elif X.shape[1] != self.model_.input_dim:
            raise ValueError(
                f"warm start with {X.shape[1]} features, model expects {self.model_.input_dim}"
            )
        self.model_, self.report_ = siamese.train(
            self.model_, reps, ConstraintSet(constraints=cons), self._train_config(epochs)
        )
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise NotFittedError("ConstraintSiameseEmbedder is not fitted")
        X = check_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        reps = [Representation(i, X[i]) for i in range(X.shape[0])]
        return siamese.embed_all(self.model_, reps)

    def affinity_matrix(self, X) -> np.ndarray:
        """Pairwise affinities of the embedded rows."""
        return clustering.affinity_matrix(self.transform(X))


class LineAffinityClusterer(BaseEstimator, ClusterMixin):
    """Clusters rows by voting between their lines in the latent space.

    ``fit`` needs the latent matrix plus per-row line ids and per-line
    heights; ``labels_`` gives one cluster id per row.
    """

    def __init__(self, likelihood_min: float = 0.75, height_ratio_max: float = 1.25):
        self.likelihood_min = likelihood_min
        self.height_ratio_max = height_ratio_max

    def fit(self, X, y=None, line_ids: Sequence[int] = (), line_heights=None, word_ids=None):
        X = check_matrix(X, "X")
        n = X.shape[0]
        line_ids = np.asarray(list(line_ids), dtype=int)
        if line_ids.shape != (n,):
            raise ValueError(f"line_ids must have one entry per row, got {line_ids.shape}")
        if line_heights is None:
            raise ValueError("line_heights mapping is required")
        if word_ids is None:
            word_ids = np.arange(n)
        word_ids = np.asarray(list(word_ids), dtype=int)
        if word_ids.shape != (n,):
            raise ValueError("word_ids must have one entry per row")

        rows_by_line: dict[int, list[int]] = {}
        for row, lid in enumerate(line_ids):
            rows_by_line.setdefault(int(lid), []).append(row)
        lines = []
        for lid, rows in sorted(rows_by_line.items()):
            h = float(line_heights[lid])
            if h <= 0:
                raise ValueError(f"line {lid} height must be > 0")
            lines.append(ContextualLine(
                id=lid,
                word_ids=[int(word_ids[r]) for r in rows],
                bbox=BBox(0.0, 0.0, 1.0, min(h, 1.0)),
            ))
        cfg = clustering.ClusterConfig(
            likelihood_min=self.likelihood_min, height_ratio_max=self.height_ratio_max
        )
        self.graph_ = clustering.build_line_graph(lines, X, rows_by_line, cfg)
        self.assignment_ = clustering.connected_components(self.graph_, lines)
        self.labels_ = np.array(
            [self.assignment_.word_to_cluster[int(w)] for w in word_ids], dtype=int
        )
        self.n_features_in_ = X.shape[1]
        return self

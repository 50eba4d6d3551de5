"""End-to-end document pipeline: lines, features, constraints, training, clusters."""

from __future__ import annotations

from typing import Optional

from . import clustering, siamese
from .config import PipelineConfig
from .constraints import (
    consolidate_and_balance,
    generate_inter_constraints,
    generate_intra_constraints,
    semantic_tag,
)
from .estimators import ConstraintSiameseEmbedder
from .features import assemble_representations, representation_matrix, style_vectors
from .model import DocumentModel, build_contextual_lines
from .refine import RefineSession


def run_pipeline(doc: DocumentModel, config: Optional[PipelineConfig] = None) -> RefineSession:
    """Run the full pipeline on a document and return a refineable session.

    Empty documents flow through as no-ops with an empty cluster assignment.
    """
    config = (config or PipelineConfig()).validate()
    build_contextual_lines(doc, config.lines.threshold, config.lines.overlap_min)
    reps = assemble_representations(doc, config.features)
    X = representation_matrix(reps)

    svecs = style_vectors(doc, config.features)
    tags = {w.id: semantic_tag(w.text) for w in doc.words}
    intra = generate_intra_constraints(doc.lines)
    inter = generate_inter_constraints(doc, svecs, tags, config.constraints)
    auto = consolidate_and_balance(intra, inter, config.constraints)

    input_dim = X.shape[1] if reps else 1
    embedder = ConstraintSiameseEmbedder(
        latent_dim=config.model.latent_dim,
        hidden_dims=config.model.hidden_dims,
        epochs=config.train.epochs,
        batch_size=config.train.batch_size,
        learning_rate=config.train.learning_rate,
        dropout=config.train.dropout_p,
        grad_clip_norm=config.train.grad_clip_norm,
        init_std=config.train.init_std,
        random_state=config.train.rng_seed,
    )
    if reps:
        rows = {r.word_id: k for k, r in enumerate(reps)}
        must = [(rows[c.i], rows[c.j]) for c in auto.must()]
        cannot = [(rows[c.i], rows[c.j]) for c in auto.cannot()]
        embedder.fit(X, must_links=must, cannot_links=cannot)
        model, report = embedder.model_, embedder.report_
    else:
        model = siamese.init_model(
            input_dim,
            config.model.latent_dim,
            hidden_dims=config.model.hidden_dims,
            init_std=config.train.init_std,
            seed=config.train.rng_seed,
        )
        report = siamese.TrainReport()

    session = RefineSession(
        doc=doc,
        config=config,
        representations=reps,
        model=model,
        auto_constraints=auto,
        report=report,
    )
    session.recluster()
    return session

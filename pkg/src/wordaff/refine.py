"""Interactive refinement: user selections, constraint merging, warm retrain.

User constraints are never sub-sampled and never dropped; automatic
constraints that contradict them are removed before each refine run. A
refine run re-trains only the embedding network, then re-clusters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import combinations, product
from typing import Iterable, Optional

import numpy as np

from . import clustering, siamese
from .config import PipelineConfig
from .constraints import Constraint, ConstraintKind, ConstraintSet, ConstraintSource
from .features import Representation
from .model import DocumentModel, document_from_payload


class SelectionError(ValueError):
    """User selection violates its own invariants."""


class ConstraintConflictError(ValueError):
    """Two user constraints contradict each other."""

    def __init__(self, pairs: list[tuple[int, int]]):
        self.pairs = pairs
        super().__init__(f"contradictory user constraints on pairs: {pairs}")


class SelectionKind(Enum):
    MUST_GROUP = "must_group"
    CANNOT_GROUP = "cannot_group"


@dataclass(frozen=True)
class UserSelection:
    kind: SelectionKind
    word_ids: tuple[int, ...] = ()
    group_a: tuple[int, ...] = ()
    group_b: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind is SelectionKind.MUST_GROUP:
            if len(set(self.word_ids)) < 2:
                raise SelectionError("MUST_GROUP needs at least 2 distinct words")
        else:
            a, b = set(self.group_a), set(self.group_b)
            if not a or not b:
                raise SelectionError("CANNOT_GROUP needs two non-empty groups")
            if a & b:
                raise SelectionError(f"CANNOT_GROUP groups overlap on {sorted(a & b)}")

    @classmethod
    def from_payload(cls, payload: dict) -> "UserSelection":
        try:
            kind = SelectionKind(payload["kind"])
        except (KeyError, ValueError):
            raise SelectionError(f"selection kind must be one of "
                                 f"{[k.value for k in SelectionKind]}") from None
        if kind is SelectionKind.MUST_GROUP:
            return cls(kind=kind, word_ids=tuple(int(w) for w in payload.get("word_ids", ())))
        return cls(
            kind=kind,
            group_a=tuple(int(w) for w in payload.get("group_a", ())),
            group_b=tuple(int(w) for w in payload.get("group_b", ())),
        )

    def to_payload(self) -> dict:
        if self.kind is SelectionKind.MUST_GROUP:
            return {"kind": self.kind.value, "word_ids": list(self.word_ids)}
        return {"kind": self.kind.value, "group_a": list(self.group_a), "group_b": list(self.group_b)}


def selection_to_constraints(sel: UserSelection) -> list[Constraint]:
    """All pairwise constraints implied by one selection, source USER."""
    if sel.kind is SelectionKind.MUST_GROUP:
        return [
            Constraint(a, b, ConstraintKind.MUST_LINK, ConstraintSource.USER)
            for a, b in combinations(sorted(set(sel.word_ids)), 2)
        ]
    return [
        Constraint(a, b, ConstraintKind.CANNOT_LINK, ConstraintSource.USER)
        for a, b in product(sorted(set(sel.group_a)), sorted(set(sel.group_b)))
    ]


def merge_constraints(auto: ConstraintSet, user: Iterable[Constraint]) -> ConstraintSet:
    """Drop autos violated by user constraints, then append the user set verbatim.

    User constraints are exempt from balancing and capping. Contradictions
    within the user set are surfaced as :class:`ConstraintConflictError`.
    """
    user = list(user)
    user_kind: dict[tuple[int, int], Constraint] = {}
    conflicts = []
    for c in user:
        prev = user_kind.get(c.pair)
        if prev is not None and prev.kind is not c.kind:
            conflicts.append(c.pair)
        user_kind.setdefault(c.pair, c)
    if conflicts:
        raise ConstraintConflictError(sorted(set(conflicts)))

    kept_auto = [c for c in auto.constraints if c.pair not in user_kind]
    removed = len(auto.constraints) - len(kept_auto)
    merged = sorted(kept_auto + list(user_kind.values()), key=lambda c: c.pair)
    stats = dict(auto.stats)
    stats.update({
        "user": len(user_kind),
        "user_must": sum(1 for c in user_kind.values() if c.kind is ConstraintKind.MUST_LINK),
        "user_cannot": sum(1 for c in user_kind.values() if c.kind is ConstraintKind.CANNOT_LINK),
        "auto_removed_by_user": removed,
        "must": sum(1 for c in merged if c.kind is ConstraintKind.MUST_LINK),
        "cannot": sum(1 for c in merged if c.kind is ConstraintKind.CANNOT_LINK),
    })
    return ConstraintSet(constraints=merged, stats=stats)


@dataclass
class RefineSession:
    """Full pipeline state for one document, refineable in place."""

    doc: DocumentModel
    config: PipelineConfig
    representations: list[Representation]
    model: siamese.EmbeddingModel
    auto_constraints: ConstraintSet
    user_constraints: list[Constraint] = field(default_factory=list)
    latents: Optional[np.ndarray] = None
    graph: Optional[clustering.LineAffinityGraph] = None
    assignment: Optional[clustering.ClusterAssignment] = None
    projection: Optional[np.ndarray] = None
    report: siamese.TrainReport = field(default_factory=siamese.TrainReport)
    history: list[dict] = field(default_factory=list)
    edit_log: list = field(default_factory=list)

    def add_selections(self, selections: Iterable[UserSelection]) -> ConstraintSet:
        """Convert selections to constraints, keep them, return merged stats."""
        new = [c for sel in selections for c in selection_to_constraints(sel)]
        merged = merge_constraints(self.auto_constraints, self.user_constraints + new)
        self.user_constraints.extend(new)
        return merged

    def recluster(self):
        self.latents = siamese.embed_all(self.model, self.representations)
        rows = {r.word_id: k for k, r in enumerate(self.representations)}
        rows_by_line = {
            ln.id: [rows[wid] for wid in ln.word_ids] for ln in self.doc.lines
        }
        self.graph = clustering.build_line_graph(
            self.doc.lines, self.latents, rows_by_line, self.config.cluster
        )
        self.assignment = clustering.connected_components(self.graph, self.doc.lines)
        self.projection = clustering.project_2d(self.latents)


def refine(session: RefineSession, epochs: int = 10) -> RefineSession:
    """Warm-start retrain on merged constraints, then re-embed and re-cluster."""
    merged = merge_constraints(session.auto_constraints, session.user_constraints)
    cfg = replace(session.config.train, epochs=epochs)
    session.model, session.report = siamese.train(
        session.model, session.representations, merged, cfg
    )
    session.recluster()
    session.history.append({
        "epochs": epochs,
        "constraints": {k: merged.stats.get(k) for k in ("must", "cannot", "user")},
        "n_clusters": session.assignment.n_clusters,
    })
    return session


def session_to_payload(session: RefineSession) -> dict:
    return {
        "doc": session.doc.to_payload(),
        "lines": [
            {"id": ln.id, "word_ids": list(ln.word_ids), "bbox": ln.bbox.as_list()}
            for ln in session.doc.lines
        ],
        "config": session.config.to_dict(),
        "checkpoint": siamese.checkpoint_bytes(session.model).decode("ascii"),
        "auto_constraints": session.auto_constraints.to_payload(),
        "user_constraints": [c.to_payload() for c in session.user_constraints],
        "assignment": session.assignment.to_payload() if session.assignment else None,
        "projection": [[float(v) for v in row] for row in session.projection]
        if session.projection is not None
        else None,
        "report": session.report.to_payload(),
        "history": session.history,
        "edit_log": [e.to_payload() for e in session.edit_log],
    }


def session_from_payload(payload: dict) -> RefineSession:
    from .edits import EditLogEntry
    from .features import assemble_representations
    from .model import BBox, ContextualLine

    doc = document_from_payload(payload["doc"])
    doc.lines = [
        ContextualLine(id=int(p["id"]), word_ids=[int(w) for w in p["word_ids"]],
                       bbox=BBox(*p["bbox"]))
        for p in payload.get("lines", [])
    ]
    line_of = {wid: ln.id for ln in doc.lines for wid in ln.word_ids}
    for w in doc.words:
        w.line_id = line_of.get(w.id)
    config = PipelineConfig.from_dict(payload["config"])
    session = RefineSession(
        doc=doc,
        config=config,
        representations=assemble_representations(doc, config.features),
        model=siamese.model_from_checkpoint_bytes(payload["checkpoint"].encode("ascii")),
        auto_constraints=ConstraintSet.from_payload(payload["auto_constraints"]),
        user_constraints=[Constraint.from_payload(p) for p in payload.get("user_constraints", [])],
        report=siamese.TrainReport.from_payload(payload["report"]),
        history=list(payload.get("history", [])),
        edit_log=[EditLogEntry.from_payload(p) for p in payload.get("edit_log", [])],
    )
    if payload.get("assignment"):
        session.assignment = clustering.ClusterAssignment.from_payload(payload["assignment"])
    if payload.get("projection") is not None:
        session.projection = np.asarray(payload["projection"], dtype=float)
    session.latents = siamese.embed_all(session.model, session.representations)
    return session

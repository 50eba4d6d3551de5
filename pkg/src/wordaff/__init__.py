"""Learn multimodal word affinities in document images, cluster, and edit."""

from .clustering import ClusterAssignment, ClusterConfig, LineAffinityGraph, project_2d
from .config import PipelineConfig
from .constraints import (
    Constraint,
    ConstraintConfig,
    ConstraintKind,
    ConstraintSet,
    ConstraintSource,
    SemanticTag,
    SyntaxBin,
)
from .edits import EditKind, EditLogEntry, EditSpec, apply_edit, render_svg
from .estimators import ConstraintSiameseEmbedder, LineAffinityClusterer
from .features import FeatureConfig, Representation, assemble_representations
from .model import (
    BBox,
    ContextualLine,
    DocumentModel,
    DocumentValidationError,
    StyleAttrs,
    WordUnit,
    build_contextual_lines,
    ingest_document,
)
from .pipeline import run_pipeline
from .refine import RefineSession, UserSelection, merge_constraints, refine
from .siamese import EmbeddingModel, TrainConfig, TrainReport, affinity, init_model, train
from .synthgen import GroundTruth, SynthSpec, generate_document, purity, run_benchmark

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "ClusterAssignment",
    "ClusterConfig",
    "Constraint",
    "ConstraintConfig",
    "ConstraintKind",
    "ConstraintSet",
    "ConstraintSiameseEmbedder",
    "ConstraintSource",
    "ContextualLine",
    "DocumentModel",
    "DocumentValidationError",
    "EditKind",
    "EditLogEntry",
    "EditSpec",
    "EmbeddingModel",
    "FeatureConfig",
    "GroundTruth",
    "LineAffinityClusterer",
    "LineAffinityGraph",
    "PipelineConfig",
    "RefineSession",
    "Representation",
    "SemanticTag",
    "StyleAttrs",
    "SynthSpec",
    "SyntaxBin",
    "TrainConfig",
    "TrainReport",
    "UserSelection",
    "WordUnit",
    "affinity",
    "apply_edit",
    "assemble_representations",
    "build_contextual_lines",
    "generate_document",
    "ingest_document",
    "init_model",
    "merge_constraints",
    "project_2d",
    "purity",
    "refine",
    "render_svg",
    "run_benchmark",
    "run_pipeline",
    "train",
]

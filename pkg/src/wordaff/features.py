"""Multimodal word representations: style, content, and geometry blocks.

Each word gets a vector ``z = [style, content, geometry]``. The style and
content encoders here are deterministic built-ins; callers with real
embeddings can bypass both by supplying per-word external feature vectors,
which replace the style and content blocks verbatim (geometry is always
appended).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .model import ContextualLine, DocumentModel, DocumentValidationError, StyleAttrs, WordUnit

CURRENCY_CHARS = "$€£¥₪¢"

# token-shape coordinates, in order
SHAPE_ALL_DIGITS = 0
SHAPE_NUMERIC_SEP = 1
SHAPE_CAPITALIZED = 2
SHAPE_ALL_CAPS = 3
SHAPE_ALL_LOWER = 4
SHAPE_MIXED = 5

_STYLE_TAIL = 6  # bold, italic, log(size), r, g, b
_CONTENT_FIXED = 24  # histogram(6) + shape(6) + context(12)


@dataclass
class FeatureConfig:
    style_dim: int = 32
    content_dim: int = 64
    noise_std: float = 0.05
    noise_seed: int = 0
    use_external_features: bool = True

    def validate(self):
        if self.style_dim < _STYLE_TAIL + 2:
            raise ValueError(f"style_dim must be >= {_STYLE_TAIL + 2}")
        if self.content_dim < _CONTENT_FIXED + 1:
            raise ValueError(f"content_dim must be >= {_CONTENT_FIXED + 1}")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")


@dataclass
class Representation:
    """Aggregated multimodal vector for one word."""

    word_id: int
    z: np.ndarray


def _unit(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    return v / norm if norm > 0 else v


def _stable_rng(*key) -> np.random.Generator:
    digest = hashlib.blake2b(repr(key).encode("utf-8"), digest_size=16).digest()
    return np.random.default_rng(int.from_bytes(digest, "big"))


def encode_geometry(word: WordUnit) -> np.ndarray:
    return np.array([word.bbox.x, word.bbox.y, word.bbox.w, word.bbox.h], dtype=float)


def encode_style(
    word: WordUnit,
    attrs: Optional[StyleAttrs],
    config: FeatureConfig,
    doc_id: str = "",
) -> np.ndarray:
    """Deterministic style embedding, L2-normalized.

    With attrs: a one-hot font-family slot plus bold/italic flags, log font
    size and RGB, perturbed by seeded Gaussian noise keyed by
    ``(noise_seed, doc_id, word.id)``. Without attrs: glyph-geometry
    statistics of the bounding box and text.
    """
    S = config.style_dim
    v = np.zeros(S, dtype=float)
    if attrs is not None:
        family_slots = S - _STYLE_TAIL
        v[attrs.font_family_id % family_slots] = 1.0
        v[family_slots] = 1.0 if attrs.bold else 0.0
        v[family_slots + 1] = 1.0 if attrs.italic else 0.0
        v[family_slots + 2] = math.log(attrs.font_size)
        v[family_slots + 3: family_slots + 6] = [c / 255.0 for c in attrs.color_rgb]
        if config.noise_std > 0:
            rng = _stable_rng(config.noise_seed, doc_id, word.id)
            v = v + rng.normal(0.0, config.noise_std, S)
    else:
        n_chars = max(len(word.text), 1)
        v[0] = word.bbox.h
        v[1] = word.bbox.w / (word.bbox.h * n_chars)
        v[2] = sum(1 for c in word.text if c.isupper()) / n_chars
    return _unit(v)


def char_class_histogram(text: str) -> np.ndarray:
    """Frequency-normalized counts over six character classes."""
    counts = np.zeros(6, dtype=float)
    for c in text:
        if c in CURRENCY_CHARS:
            counts[3] += 1
        elif c.isalpha() and c.islower():
            counts[0] += 1
        elif c.isalpha() and c.isupper():
            counts[1] += 1
        elif c.isdigit():
            counts[2] += 1
        elif not c.isalnum() and not c.isspace():
            counts[4] += 1
        else:
            counts[5] += 1
    if len(text):
        counts /= len(text)
    return counts


def token_shape_index(text: str) -> int:
    has_digit = any(c.isdigit() for c in text)
    alphas = [c for c in text if c.isalpha()]
    if text and all(c.isdigit() for c in text):
        return SHAPE_ALL_DIGITS
    if has_digit and not alphas:
        return SHAPE_NUMERIC_SEP
    if alphas and not has_digit:
        if all(c.isupper() for c in alphas):
            return SHAPE_ALL_CAPS
        if all(c.islower() for c in alphas):
            return SHAPE_ALL_LOWER
        if alphas[0].isupper() and all(c.islower() for c in alphas[1:]):
            return SHAPE_CAPITALIZED
    return SHAPE_MIXED


def _word_profile(text: str) -> np.ndarray:
    """Histogram plus shape one-hot; the 12 dims shared with the context block."""
    shape = np.zeros(6, dtype=float)
    shape[token_shape_index(text)] = 1.0
    return np.concatenate([char_class_histogram(text), shape])


def _trigram_bag(text: str, dims: int) -> np.ndarray:
    v = np.zeros(dims, dtype=float)
    lowered = text.lower()
    grams = [lowered[i: i + 3] for i in range(len(lowered) - 2)] or [lowered]
    for g in grams:
        slot = int.from_bytes(hashlib.blake2b(g.encode("utf-8"), digest_size=8).digest(), "big") % dims
        v[slot] += 1.0
    return v / len(grams)


def encode_content(
    word: WordUnit,
    line: ContextualLine,
    words_by_id: Mapping[int, WordUnit],
    config: FeatureConfig,
) -> np.ndarray:
    """Content embedding of a word in the context of its line, L2-normalized."""
    if word.id not in line.word_ids:
        raise ValueError(f"word {word.id} does not belong to line {line.id}")
    own = _word_profile(word.text)
    trig = _trigram_bag(word.text, config.content_dim - _CONTENT_FIXED)
    others = [words_by_id[i] for i in line.word_ids if i != word.id]
    if others:
        context = np.mean([_word_profile(o.text) for o in others], axis=0)
    else:
        context = np.zeros(12, dtype=float)
    return _unit(np.concatenate([own, trig, context]))


def style_vectors(doc: DocumentModel, config: FeatureConfig) -> dict[int, np.ndarray]:
    """Per-word style vectors; external features take over when present."""
    config.validate()
    if doc.external_features and config.use_external_features:
        _check_external(doc)
        return {w.id: np.asarray(doc.external_features[w.id], dtype=float) for w in doc.words}
    return {
        w.id: encode_style(w, doc.style_attrs.get(w.id), config, doc_id=doc.doc_id)
        for w in doc.words
    }


def _check_external(doc: DocumentModel):
    lengths = {len(v) for v in doc.external_features.values()}
    if len(lengths) > 1:
        raise DocumentValidationError(f"external feature vectors have inconsistent lengths: {sorted(lengths)}")
    missing = [w.id for w in doc.words if w.id not in doc.external_features]
    if missing:
        raise DocumentValidationError(f"external features missing for word ids {missing[:5]}")


def assemble_representations(
    doc: DocumentModel,
    config: FeatureConfig,
    style: Optional[Mapping[int, np.ndarray]] = None,
) -> list[Representation]:
    """Concatenate per-word feature blocks into ``z = [style, content, geometry]``.

    When the document carries external feature vectors (and the config allows
    them) those replace the style and content blocks verbatim.
    """
    config.validate()
    if not doc.words:
        return []
    if doc.external_features and config.use_external_features:
        _check_external(doc)
        return [
            Representation(w.id, np.concatenate([
                np.asarray(doc.external_features[w.id], dtype=float),
                encode_geometry(w),
            ]))
            for w in doc.words
        ]

    if not doc.lines:
        raise DocumentValidationError("contextual lines must be built before assembling representations")
    if style is None:
        style = style_vectors(doc, config)
    words_by_id = doc.words_by_id()
    lines_by_id = {ln.id: ln for ln in doc.lines}
    reps = []
    for w in doc.words:
        line = lines_by_id[w.line_id]
        z = np.concatenate([
            style[w.id],
            encode_content(w, line, words_by_id, config),
            encode_geometry(w),
        ])
        reps.append(Representation(w.id, z))
    return reps


def representation_matrix(reps: list[Representation]) -> np.ndarray:
    """Stack representations into an (n_words, D) matrix in list order."""
    if not reps:
        return np.zeros((0, 0), dtype=float)
    return np.vstack([r.z for r in reps])

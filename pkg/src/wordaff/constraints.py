"""Automatic must-link / cannot-link constraint generation.

Words in the same contextual line always must-link. Across lines, a pair
must-links only when it agrees on every criterion (mutually-near style,
syntax bin, semantic tag, box height) and cannot-links when any single
criterion disagrees. The consolidated set is balanced so must-links make up
a fixed fraction of the total.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Iterable, Mapping, Optional

import numpy as np

from .features import CURRENCY_CHARS
from .model import ContextualLine, DocumentModel, WordUnit


class SyntaxBin(Enum):
    UPPER = "upper"
    LOWER = "lower"
    MIXED = "mixed"


class SemanticTag(Enum):
    NUMBER = "number"
    PRICE = "price"
    TIME = "time"
    DATE = "date"
    ORDINAL = "ordinal"
    PERCENT = "percent"
    PLAIN = "plain"
    NONE = "none"


class ConstraintKind(Enum):
    MUST_LINK = "must_link"
    CANNOT_LINK = "cannot_link"


class ConstraintSource(Enum):
    INTRA = "intra"
    INTER = "inter"
    USER = "user"


class NeighborMode(Enum):
    NEAREST = "nearest"
    FARTHEST = "farthest"


@dataclass(frozen=True)
class Constraint:
    i: int
    j: int
    kind: ConstraintKind
    source: ConstraintSource

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError(f"constraint endpoints must differ, got ({self.i}, {self.j})")
        if self.i > self.j:
            object.__setattr__(self, "i", self.j)
            object.__setattr__(self, "j", self.i)

    @property
    def pair(self) -> tuple[int, int]:
        return (self.i, self.j)

    @property
    def label(self) -> int:
        return 1 if self.kind is ConstraintKind.MUST_LINK else 0

    def to_payload(self) -> dict:
        return {"i": self.i, "j": self.j, "kind": self.kind.value, "source": self.source.value}

    @classmethod
    def from_payload(cls, payload: dict) -> "Constraint":
        return cls(
            i=int(payload["i"]),
            j=int(payload["j"]),
            kind=ConstraintKind(payload["kind"]),
            source=ConstraintSource(payload["source"]),
        )


@dataclass
class ConstraintSet:
    constraints: list[Constraint] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def must(self) -> list[Constraint]:
        return [c for c in self.constraints if c.kind is ConstraintKind.MUST_LINK]

    def cannot(self) -> list[Constraint]:
        return [c for c in self.constraints if c.kind is ConstraintKind.CANNOT_LINK]

    def pairs(self, kind: ConstraintKind) -> set[tuple[int, int]]:
        return {c.pair for c in self.constraints if c.kind is kind}

    def to_payload(self) -> dict:
        return {"constraints": [c.to_payload() for c in self.constraints], "stats": self.stats}

    @classmethod
    def from_payload(cls, payload: dict) -> "ConstraintSet":
        return cls(
            constraints=[Constraint.from_payload(p) for p in payload.get("constraints", [])],
            stats=dict(payload.get("stats", {})),
        )


@dataclass
class ConstraintConfig:
    k: int = 6
    height_ratio_max: float = 1.25
    must_link_cap: int = 1000
    must_fraction: float = 0.6
    rng_seed: int = 0

    def validate(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.height_ratio_max <= 1:
            raise ValueError("height_ratio_max must be > 1")
        if not (0 < self.must_fraction < 1):
            raise ValueError("must_fraction must be in (0, 1)")
        if self.must_link_cap < 1:
            raise ValueError("must_link_cap must be >= 1")


def syntax_bin(text: str) -> SyntaxBin:
    letters = [c for c in text if c.isalpha()]
    if letters and all(c.isupper() for c in letters):
        return SyntaxBin.UPPER
    if letters and all(c.islower() for c in letters):
        return SyntaxBin.LOWER
    return SyntaxBin.MIXED


_TIME_RE = re.compile(r"\d{1,2}:\d{2}(?:[ap]m)?", re.IGNORECASE)
_DATE_RE = re.compile(r"\d{1,2}[/.\-]\d{1,2}(?:[/.\-]\d{2,4})?")
_ORDINAL_RE = re.compile(r"\d+(?:st|nd|rd|th)", re.IGNORECASE)
_NUMBER_RE = re.compile(r"\d[\d.,:/\-]*")


def semantic_tag(text: str) -> SemanticTag:
    """Rule-based token tagger; rules are tried in a fixed order."""
    t = text.strip()
    has_digit = any(c.isdigit() for c in t)
    has_alpha = any(c.isalpha() for c in t)
    if has_digit and any(c in CURRENCY_CHARS for c in t):
        return SemanticTag.PRICE
    if has_digit and "%" in t:
        return SemanticTag.PERCENT
    if _TIME_RE.fullmatch(t):
        return SemanticTag.TIME
    if _DATE_RE.fullmatch(t):
        return SemanticTag.DATE
    if _ORDINAL_RE.fullmatch(t):
        return SemanticTag.ORDINAL
    if has_digit and not has_alpha and _NUMBER_RE.fullmatch(t):
        return SemanticTag.NUMBER
    if has_alpha:
        return SemanticTag.PLAIN
    return SemanticTag.NONE


def characterize_line(
    line: ContextualLine, tags: Mapping[int, SemanticTag]
) -> Optional[SemanticTag]:
    """The single entity tag that characterizes a line, if any.

    Lines mixing two or more entity types are noisy and return None; lines
    with no entity tags at all are characterized as PLAIN.
    """
    entity = {tags[wid] for wid in line.word_ids} - {SemanticTag.PLAIN, SemanticTag.NONE}
    if len(entity) == 1:
        return next(iter(entity))
    if len(entity) >= 2:
        return None
    return SemanticTag.PLAIN


def mutual_pairs_from_distances(
    dist: np.ndarray, ids: list[int], k: int, mode: NeighborMode
) -> set[tuple[int, int]]:
    """Mutual k-nearest (or k-farthest) pairs given a full distance matrix.

    Ties are broken by ascending word id. ``k`` is clamped to n-1.
    """
    n = len(ids)
    if n < 2:
        return set()
    k = min(k, n - 1)
    ids_arr = np.asarray(ids)
    key = dist if mode is NeighborMode.NEAREST else -dist
    chosen = np.zeros((n, n), dtype=bool)
    for row in range(n):
        order = np.lexsort((ids_arr, key[row]))
        order = order[order != row]
        chosen[row, order[:k]] = True
    mutual = chosen & chosen.T
    out = set()
    for a, b in zip(*np.nonzero(np.triu(mutual, 1))):
        wa, wb = int(ids_arr[a]), int(ids_arr[b])
        out.add((min(wa, wb), max(wa, wb)))
    return out


def cosine_distances(vectors: Mapping[int, np.ndarray]) -> tuple[np.ndarray, list[int]]:
    ids = sorted(vectors)
    V = np.vstack([vectors[i] for i in ids]) if ids else np.zeros((0, 1))
    norms = np.linalg.norm(V, axis=1)
    norms[norms == 0] = 1.0
    Vn = V / norms[:, None]
    return 1.0 - Vn @ Vn.T, ids


def mutual_neighbor_pairs(
    style_vecs: Mapping[int, np.ndarray], k: int, mode: NeighborMode
) -> set[tuple[int, int]]:
    """Pairs that are mutually among each other's k nearest (farthest) by cosine."""
    dist, ids = cosine_distances(style_vecs)
    return mutual_pairs_from_distances(dist, ids, k, mode)


def height_compatible(a: WordUnit, b: WordUnit, ratio_max: float = 1.25) -> bool:
    ha, hb = a.bbox.h, b.bbox.h
    return max(ha, hb) / min(ha, hb) < ratio_max


def generate_intra_constraints(lines: Iterable[ContextualLine]) -> list[Constraint]:
    """Must-link every pair of words sharing a contextual line."""
    out = []
    for line in lines:
        for a, b in combinations(sorted(line.word_ids), 2):
            out.append(Constraint(a, b, ConstraintKind.MUST_LINK, ConstraintSource.INTRA))
    return out


def generate_inter_constraints(
    doc: DocumentModel,
    style_vecs: Mapping[int, np.ndarray],
    tags: Mapping[int, SemanticTag],
    cfg: ConstraintConfig,
) -> list[Constraint]:
    """Cross-line constraints from the style / syntax / semantics / height criteria.

    Candidates are the characterizing words of non-noisy lines (all words of
    PLAIN lines, with effective tag PLAIN). A pair must-links only when all
    four criteria agree; it cannot-links when mutually-far in style or when
    any of the other criteria disagree.
    """
    cfg.validate()
    if not doc.lines:
        return []
    near = mutual_neighbor_pairs(style_vecs, cfg.k, NeighborMode.NEAREST)
    far = mutual_neighbor_pairs(style_vecs, cfg.k, NeighborMode.FARTHEST)

    words_by_id = doc.words_by_id()
    effective: dict[int, SemanticTag] = {}
    line_of: dict[int, int] = {}
    for line in doc.lines:
        char = characterize_line(line, tags)
        if char is None:
            continue  # noisy line: its words yield no inter constraints
        for wid in line.word_ids:
            line_of[wid] = line.id
            if char is SemanticTag.PLAIN:
                effective[wid] = SemanticTag.PLAIN
            elif tags[wid] is char:
                effective[wid] = char

    bins = {wid: syntax_bin(words_by_id[wid].text) for wid in effective}
    out = []
    for a, b in combinations(sorted(effective), 2):
        if line_of[a] == line_of[b]:
            continue
        agree = (
            bins[a] is bins[b]
            and effective[a] is effective[b]
            and height_compatible(words_by_id[a], words_by_id[b], cfg.height_ratio_max)
        )
        if (a, b) in near and agree:
            out.append(Constraint(a, b, ConstraintKind.MUST_LINK, ConstraintSource.INTER))
        elif (a, b) in far or not agree:
            out.append(Constraint(a, b, ConstraintKind.CANNOT_LINK, ConstraintSource.INTER))
    return out


def _sample(items: list[Constraint], size: int, rng: np.random.Generator) -> list[Constraint]:
    idx = rng.choice(len(items), size=size, replace=False)
    return [items[i] for i in sorted(idx.tolist())]


def consolidate_and_balance(
    intra: Iterable[Constraint],
    inter: Iterable[Constraint],
    cfg: ConstraintConfig,
    rng: Optional[np.random.Generator] = None,
) -> ConstraintSet:
    """Dedupe, resolve contradictions in favour of must-links, cap, and balance.

    Must-links are capped at ``cfg.must_link_cap`` by seeded uniform
    sampling, then whichever kind is over-represented is downsampled so
    must-links form ``cfg.must_fraction`` of the total (when both kinds are
    non-empty).
    """
    cfg.validate()
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)

    by_pair: dict[tuple[int, int], Constraint] = {}
    contradictions = 0
    for c in list(intra) + list(inter):
        prev = by_pair.get(c.pair)
        if prev is None:
            by_pair[c.pair] = c
        elif prev.kind is not c.kind:
            contradictions += 1
            if c.kind is ConstraintKind.MUST_LINK:
                by_pair[c.pair] = c
    musts = sorted((c for c in by_pair.values() if c.kind is ConstraintKind.MUST_LINK),
                   key=lambda c: c.pair)
    cannots = sorted((c for c in by_pair.values() if c.kind is ConstraintKind.CANNOT_LINK),
                     key=lambda c: c.pair)

    raw_must, raw_cannot = len(musts), len(cannots)
    if len(musts) > cfg.must_link_cap:
        musts = _sample(musts, cfg.must_link_cap, rng)

    f = cfg.must_fraction
    if musts and cannots:
        m, c = len(musts), len(cannots)
        if m < f * (m + c):
            # too many cannot-links: keep the largest c' with m/(m+c') >= f
            keep = int(m * (1 - f) / f + 1e-9)
            while keep > 0 and m < f * (m + keep):
                keep -= 1
            cannots = _sample(cannots, keep, rng)
        elif m > f * (m + c):
            keep = int(math.ceil(f * c / (1 - f) - 1e-9))
            while keep < f * (keep + c):
                keep += 1
            if keep < m:
                musts = _sample(musts, keep, rng)

    constraints = sorted(musts + cannots, key=lambda c: c.pair)
    stats = {
        "must": len(musts),
        "cannot": len(cannots),
        "must_intra": sum(1 for c in musts if c.source is ConstraintSource.INTRA),
        "must_inter": sum(1 for c in musts if c.source is ConstraintSource.INTER),
        "raw_must": raw_must,
        "raw_cannot": raw_cannot,
        "contradictions_dropped": contradictions,
    }
    return ConstraintSet(constraints=constraints, stats=stats)

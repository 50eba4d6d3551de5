"""Document model: word units, bounding boxes, and contextual-line grouping.

Coordinates are fractions of the page (top-left origin). Words are grouped
into contextual lines by linking each word to its nearest right-hand
neighbour whenever the two boxes overlap vertically and the horizontal gap
is small relative to the box heights.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Optional

from .union_find import UnionFind

BBOX_TOL = 1e-6
CLAMP_WARN_TOL = 1e-3


class DocumentValidationError(ValueError):
    """Input document violates the schema or a model invariant."""


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in normalized page coordinates."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise DocumentValidationError(f"bbox must have positive size, got w={self.w}, h={self.h}")
        if self.x < 0 or self.y < 0:
            raise DocumentValidationError(f"bbox origin must be >= 0, got x={self.x}, y={self.y}")
        if self.x + self.w > 1 + BBOX_TOL or self.y + self.h > 1 + BBOX_TOL:
            raise DocumentValidationError(
                f"bbox exceeds the unit page: x+w={self.x + self.w}, y+h={self.y + self.h}"
            )

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    def union(self, other: "BBox") -> "BBox":
        x = min(self.x, other.x)
        y = min(self.y, other.y)
        return BBox(x, y, max(self.x2, other.x2) - x, max(self.y2, other.y2) - y)

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]


@dataclass(frozen=True)
class StyleAttrs:
    """Ground-truth style parameters for one word, when known."""

    font_family_id: int
    bold: bool = False
    italic: bool = False
    font_size: float = 12.0
    color_rgb: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        if self.font_family_id < 0:
            raise DocumentValidationError("font_family_id must be >= 0")
        if self.font_size <= 0:
            raise DocumentValidationError("font_size must be > 0")
        if len(self.color_rgb) != 3 or any(not (0 <= int(v) <= 255) for v in self.color_rgb):
            raise DocumentValidationError("color_rgb must be three integers in [0, 255]")

    def to_payload(self) -> dict:
        return {
            "font_family_id": self.font_family_id,
            "bold": self.bold,
            "italic": self.italic,
            "font_size": self.font_size,
            "color_rgb": list(self.color_rgb),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "StyleAttrs":
        try:
            return cls(
                font_family_id=int(payload["font_family_id"]),
                bold=bool(payload.get("bold", False)),
                italic=bool(payload.get("italic", False)),
                font_size=float(payload.get("font_size", 12.0)),
                color_rgb=tuple(int(v) for v in payload.get("color_rgb", (0, 0, 0))),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DocumentValidationError(f"invalid style_attrs: {exc}") from exc


@dataclass
class WordUnit:
    """One OCR word: id, transcription, box, and (once built) its line."""

    id: int
    text: str
    bbox: BBox
    line_id: Optional[int] = None
    emphasis: float = 0.0

    def __post_init__(self):
        if not self.text.strip():
            raise DocumentValidationError(f"word {self.id}: text must be non-empty")


@dataclass
class ContextualLine:
    """A maximal run of horizontally adjacent, vertically overlapping words."""

    id: int
    word_ids: list[int]
    bbox: BBox


@dataclass
class DocumentModel:
    doc_id: str
    aspect_ratio: float
    words: list[WordUnit]
    lines: list[ContextualLine] = field(default_factory=list)
    style_attrs: dict[int, StyleAttrs] = field(default_factory=dict)
    external_features: dict[int, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.aspect_ratio <= 0:
            raise DocumentValidationError(f"aspect_ratio must be > 0, got {self.aspect_ratio}")
        seen = set()
        for w in self.words:
            if w.id in seen:
                raise DocumentValidationError(f"duplicate word id {w.id}")
            seen.add(w.id)

    def word_by_id(self, word_id: int) -> WordUnit:
        for w in self.words:
            if w.id == word_id:
                return w
        raise KeyError(word_id)

    def words_by_id(self) -> dict[int, WordUnit]:
        return {w.id: w for w in self.words}

    def line_by_id(self, line_id: int) -> ContextualLine:
        for ln in self.lines:
            if ln.id == line_id:
                return ln
        raise KeyError(line_id)

    def to_payload(self) -> dict:
        words = []
        for w in self.words:
            entry: dict = {"id": w.id, "text": w.text, "bbox": w.bbox.as_list()}
            if w.id in self.style_attrs:
                entry["style_attrs"] = self.style_attrs[w.id].to_payload()
            if w.id in self.external_features:
                entry["feature"] = list(self.external_features[w.id])
            if w.emphasis:
                entry["emphasis"] = w.emphasis
            words.append(entry)
        return {"doc_id": self.doc_id, "aspect_ratio": self.aspect_ratio, "words": words}


def _clamped_bbox(raw: list[float], where: str) -> BBox:
    x, y, w, h = (float(v) for v in raw)
    if w <= 0 or h <= 0:
        raise DocumentValidationError(f"{where}: width and height must be > 0")
    x2, y2 = x + w, y + h
    violation = max(0.0, -x, -y, x2 - 1.0, y2 - 1.0)
    if violation > 0:
        if violation > CLAMP_WARN_TOL:
            warnings.warn(f"{where}: bbox out of [0,1] by {violation:.4g}; clamped", stacklevel=3)
        x, y = min(max(x, 0.0), 1.0), min(max(y, 0.0), 1.0)
        x2, y2 = min(max(x2, 0.0), 1.0), min(max(y2, 0.0), 1.0)
        if x2 - x <= 0 or y2 - y <= 0:
            raise DocumentValidationError(f"{where}: bbox lies entirely outside the page")
    return BBox(x, y, x2 - x, y2 - y)


def document_from_payload(payload: dict) -> DocumentModel:
    """Build a DocumentModel from the parsed document-file JSON."""
    if not isinstance(payload, dict):
        raise DocumentValidationError("document: top-level value must be an object")
    doc_id = payload.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise DocumentValidationError("doc_id: required non-empty string")
    try:
        aspect = float(payload["aspect_ratio"])
    except (KeyError, TypeError, ValueError):
        raise DocumentValidationError("aspect_ratio: required positive number") from None
    if aspect <= 0:
        raise DocumentValidationError("aspect_ratio: must be > 0")
    raw_words = payload.get("words")
    if not isinstance(raw_words, list):
        raise DocumentValidationError("words: required array")

    words: list[WordUnit] = []
    style_attrs: dict[int, StyleAttrs] = {}
    features: dict[int, tuple[float, ...]] = {}
    seen: set[int] = set()
    for pos, entry in enumerate(raw_words):
        where = f"words[{pos}]"
        if not isinstance(entry, dict):
            raise DocumentValidationError(f"{where}: must be an object")
        try:
            wid = int(entry["id"])
        except (KeyError, TypeError, ValueError):
            raise DocumentValidationError(f"{where}.id: required integer") from None
        if wid in seen:
            raise DocumentValidationError(f"{where}.id: duplicate word id {wid}")
        seen.add(wid)
        text = entry.get("text")
        if not isinstance(text, str) or not text.strip():
            raise DocumentValidationError(f"{where}.text: required non-empty string")
        bbox_raw = entry.get("bbox")
        if not isinstance(bbox_raw, (list, tuple)) or len(bbox_raw) != 4:
            raise DocumentValidationError(f"{where}.bbox: required [x, y, w, h]")
        try:
            bbox = _clamped_bbox(list(bbox_raw), f"{where}.bbox")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, DocumentValidationError):
                raise
            raise DocumentValidationError(f"{where}.bbox: values must be numbers") from None
        words.append(WordUnit(id=wid, text=text, bbox=bbox, emphasis=float(entry.get("emphasis", 0.0))))
        if "style_attrs" in entry and entry["style_attrs"] is not None:
            style_attrs[wid] = StyleAttrs.from_payload(entry["style_attrs"])
        if "feature" in entry and entry["feature"] is not None:
            feat = entry["feature"]
            if not isinstance(feat, (list, tuple)) or not feat:
                raise DocumentValidationError(f"{where}.feature: must be a non-empty number array")
            features[wid] = tuple(float(v) for v in feat)

    return DocumentModel(
        doc_id=doc_id,
        aspect_ratio=aspect,
        words=words,
        style_attrs=style_attrs,
        external_features=features,
    )


def ingest_document(file_bytes: bytes | str) -> DocumentModel:
    """Parse a document file (JSON, UTF-8) into a DocumentModel.

    Lines are not built here; call :func:`build_contextual_lines` next.
    """
    if isinstance(file_bytes, bytes):
        file_bytes = file_bytes.decode("utf-8")
    try:
        payload = json.loads(file_bytes)
    except json.JSONDecodeError as exc:
        raise DocumentValidationError(f"document: invalid JSON ({exc.msg} at char {exc.pos})") from exc
    return document_from_payload(payload)


def vertical_overlap(a: BBox, b: BBox) -> float:
    """Overlap of the y-intervals divided by the smaller height; 0 when disjoint."""
    inter = min(a.y2, b.y2) - max(a.y, b.y)
    if inter <= 0:
        return 0.0
    return inter / min(a.h, b.h)


def line_weight(a: BBox, b: BBox, aspect_ratio: float) -> float:
    """Horizontal gap between ``a`` and ``b`` (a left of b), in units of box height.

    The gap is clamped at zero, so horizontally overlapping boxes weigh 0.
    """
    s = max(0.0, b.x - (a.x + a.w))
    return s * aspect_ratio / max(a.h, b.h)


def build_contextual_lines(
    doc: DocumentModel, threshold: float = 0.1, overlap_min: float = 0.5
) -> list[ContextualLine]:
    """Group words into contextual lines and assign ``line_id`` on each word.

    Each word is linked to its nearest right-hand neighbour that overlaps it
    vertically by at least ``overlap_min``, provided the gap weight is below
    ``threshold``. Lines are the connected components of those links, with
    ids assigned by ascending smallest member word id.
    """
    words = doc.words
    n = len(words)
    order = sorted(range(n), key=lambda i: (words[i].bbox.x, words[i].id))
    uf = UnionFind(n)
    for pos, i in enumerate(order):
        wi = words[i]
        for j in order[pos + 1:]:
            wj = words[j]
            if vertical_overlap(wi.bbox, wj.bbox) < overlap_min:
                continue
            if line_weight(wi.bbox, wj.bbox, doc.aspect_ratio) < threshold:
                uf.union(i, j)
            break  # only the nearest right neighbour is a candidate

    groups = sorted(uf.groups().values(), key=lambda g: min(words[i].id for i in g))
    lines: list[ContextualLine] = []
    for line_id, group in enumerate(groups):
        members = sorted(group, key=lambda i: (words[i].bbox.x, words[i].id))
        bbox = words[members[0]].bbox
        for i in members[1:]:
            bbox = bbox.union(words[i].bbox)
        for i in members:
            words[i].line_id = line_id
        lines.append(ContextualLine(id=line_id, word_ids=[words[i].id for i in members], bbox=bbox))
    doc.lines = lines
    return lines

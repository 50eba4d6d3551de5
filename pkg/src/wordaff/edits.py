"""Cluster-wide edit propagation on the document model, with SVG rendering.

An edit applies to every word of one cluster; words the edit cannot apply
to (say a numeric shift on plain text) are skipped and recorded. The edit
log replays exactly: applying it to the original document reproduces the
edited one.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field, replace
from decimal import Decimal
from enum import Enum
from typing import Optional
from xml.sax.saxutils import escape

from .clustering import ClusterAssignment, cluster_color
from .constraints import SemanticTag, semantic_tag
from .model import BBox, DocumentModel, StyleAttrs


class EditError(ValueError):
    """Invalid edit spec or target."""


class EditKind(Enum):
    SET_COLOR = "set_color"
    SET_WEIGHT = "set_weight"
    SET_ITALIC = "set_italic"
    SCALE_FONT = "scale_font"
    DELETE = "delete"
    EMPHASIZE = "emphasize"
    NUMERIC_SHIFT = "numeric_shift"
    TIME_SHIFT = "time_shift"
    FIND_REPLACE = "find_replace"
    ALIGN_X = "align_x"
    TRANSLATE = "translate"


@dataclass(frozen=True)
class EditSpec:
    kind: EditKind
    color_rgb: Optional[tuple[int, int, int]] = None
    flag: Optional[bool] = None
    factor: Optional[float] = None
    intensity: Optional[float] = None
    delta: Optional[str] = None  # decimal string, exact arithmetic
    delta_minutes: Optional[int] = None
    pattern: Optional[str] = None
    replacement: Optional[str] = None
    target_x: Optional[float] = None
    dx: Optional[float] = None
    dy: Optional[float] = None

    def __post_init__(self):
        k = self.kind
        if k is EditKind.SET_COLOR:
            if self.color_rgb is None or len(self.color_rgb) != 3 \
                    or any(not (0 <= int(v) <= 255) for v in self.color_rgb):
                raise EditError("SET_COLOR needs color_rgb of three ints in [0, 255]")
        elif k in (EditKind.SET_WEIGHT, EditKind.SET_ITALIC):
            if self.flag is None:
                raise EditError(f"{k.value} needs a boolean flag")
        elif k is EditKind.SCALE_FONT:
            if self.factor is None or self.factor <= 0:
                raise EditError("SCALE_FONT needs factor > 0")
        elif k is EditKind.EMPHASIZE:
            if self.intensity is None or not (0 < self.intensity <= 1):
                raise EditError("EMPHASIZE needs intensity in (0, 1]")
        elif k is EditKind.NUMERIC_SHIFT:
            if self.delta is None:
                raise EditError("NUMERIC_SHIFT needs a delta")
            try:
                Decimal(self.delta)
            except ArithmeticError:
                raise EditError(f"NUMERIC_SHIFT delta is not a number: {self.delta!r}") from None
        elif k is EditKind.TIME_SHIFT:
            if self.delta_minutes is None:
                raise EditError("TIME_SHIFT needs delta_minutes")
        elif k is EditKind.FIND_REPLACE:
            if not self.pattern or self.replacement is None:
                raise EditError("FIND_REPLACE needs pattern and replacement")
        elif k is EditKind.ALIGN_X:
            if self.target_x is None or not (0 <= self.target_x <= 1):
                raise EditError("ALIGN_X needs target_x in [0, 1]")
        elif k is EditKind.TRANSLATE:
            if self.dx is None or self.dy is None:
                raise EditError("TRANSLATE needs dx and dy")

    def to_payload(self) -> dict:
        out: dict = {"kind": self.kind.value}
        for name in ("color_rgb", "flag", "factor", "intensity", "delta",
                     "delta_minutes", "pattern", "replacement", "target_x", "dx", "dy"):
            value = getattr(self, name)
            if value is not None:
                out[name] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_payload(cls, payload: dict) -> "EditSpec":
        data = dict(payload)
        try:
            kind = EditKind(data.pop("kind"))
        except (KeyError, ValueError):
            raise EditError(f"edit kind must be one of {[k.value for k in EditKind]}") from None
        if "color_rgb" in data:
            data["color_rgb"] = tuple(int(v) for v in data["color_rgb"])
        if "delta" in data:
            data["delta"] = str(data["delta"])
        unknown = set(data) - {
            "color_rgb", "flag", "factor", "intensity", "delta", "delta_minutes",
            "pattern", "replacement", "target_x", "dx", "dy",
        }
        if unknown:
            raise EditError(f"unknown edit fields: {sorted(unknown)}")
        return cls(kind=kind, **data)


@dataclass
class EditLogEntry:
    cluster_id: int
    spec: EditSpec
    affected_word_ids: list[int]
    skipped_word_ids: list[int] = field(default_factory=list)

    def to_payload(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "spec": self.spec.to_payload(),
            "affected_word_ids": list(self.affected_word_ids),
            "skipped_word_ids": list(self.skipped_word_ids),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "EditLogEntry":
        return cls(
            cluster_id=int(payload["cluster_id"]),
            spec=EditSpec.from_payload(payload["spec"]),
            affected_word_ids=[int(w) for w in payload["affected_word_ids"]],
            skipped_word_ids=[int(w) for w in payload.get("skipped_word_ids", [])],
        )


_NUMBER_TOKEN_RE = re.compile(r"\d+(?:\.\d+)?")
_TIME_TOKEN_RE = re.compile(r"(\d{1,2}):(\d{2})([ap]m)?", re.IGNORECASE)


def shift_numeric_text(text: str, delta: str) -> Optional[str]:
    """Add ``delta`` to the first numeric token, preserving decimals and padding."""
    match = _NUMBER_TOKEN_RE.search(text)
    if not match:
        return None
    token = match.group(0)
    decimals = len(token.split(".")[1]) if "." in token else 0
    shifted = Decimal(token) + Decimal(delta)
    if shifted < 0:
        shifted = Decimal(0)
    out = f"{shifted:.{decimals}f}"
    int_width = len(token.split(".")[0])
    if token.lstrip("0") != token and len(out.split(".")[0]) < int_width:
        head, _, tail = out.partition(".")
        out = head.zfill(int_width) + ("." + tail if tail else "")
    return text[: match.start()] + out + text[match.end():]


def shift_time_text(text: str, delta_minutes: int) -> Optional[str]:
    """Shift the first hh:mm token by minutes, wrapping modulo 24 hours."""
    match = _TIME_TOKEN_RE.search(text)
    if not match:
        return None
    hours, minutes, suffix = int(match.group(1)), int(match.group(2)), match.group(3)
    if minutes >= 60:
        return None
    if suffix:
        h12 = hours % 12
        total = (h12 + (12 if suffix.lower() == "pm" else 0)) * 60 + minutes
    else:
        total = hours * 60 + minutes
    total = (total + delta_minutes) % (24 * 60)
    new_h, new_m = divmod(total, 60)
    if suffix:
        new_suffix = "pm" if new_h >= 12 else "am"
        if suffix[0].isupper():
            new_suffix = new_suffix.upper()
        disp = new_h % 12 or 12
        out = f"{disp}:{new_m:02d}{new_suffix}"
    else:
        out = f"{new_h:0{len(match.group(1))}d}:{new_m:02d}"
    return text[: match.start()] + out + text[match.end():]


def _style_of(doc: DocumentModel, word_id: int) -> StyleAttrs:
    return doc.style_attrs.get(word_id, StyleAttrs(font_family_id=0))


def _apply_to_words(doc: DocumentModel, word_ids: list[int], spec: EditSpec
                    ) -> tuple[list[int], list[int]]:
    """Mutates ``doc`` in place; returns (affected, skipped) word ids."""
    words_by_id = doc.words_by_id()
    affected: list[int] = []
    skipped: list[int] = []
    to_delete: list[int] = []
    for wid in word_ids:
        word = words_by_id[wid]
        k = spec.kind
        if k is EditKind.SET_COLOR:
            doc.style_attrs[wid] = replace(_style_of(doc, wid), color_rgb=tuple(spec.color_rgb))
        elif k is EditKind.SET_WEIGHT:
            doc.style_attrs[wid] = replace(_style_of(doc, wid), bold=spec.flag)
        elif k is EditKind.SET_ITALIC:
            doc.style_attrs[wid] = replace(_style_of(doc, wid), italic=spec.flag)
        elif k is EditKind.SCALE_FONT:
            if wid in doc.style_attrs:
                doc.style_attrs[wid] = replace(
                    doc.style_attrs[wid], font_size=doc.style_attrs[wid].font_size * spec.factor)
            b = word.bbox
            w2, h2 = min(b.w * spec.factor, 1.0), min(b.h * spec.factor, 1.0)
            word.bbox = BBox(min(b.x, 1.0 - w2), min(b.y, 1.0 - h2), w2, h2)
        elif k is EditKind.DELETE:
            to_delete.append(wid)
        elif k is EditKind.EMPHASIZE:
            word.emphasis = spec.intensity
        elif k is EditKind.NUMERIC_SHIFT:
            if semantic_tag(word.text) not in (SemanticTag.NUMBER, SemanticTag.PRICE):
                skipped.append(wid)
                continue
            new_text = shift_numeric_text(word.text, spec.delta)
            if new_text is None:
                skipped.append(wid)
                continue
            word.text = new_text
        elif k is EditKind.TIME_SHIFT:
            if semantic_tag(word.text) is not SemanticTag.TIME:
                skipped.append(wid)
                continue
            new_text = shift_time_text(word.text, spec.delta_minutes)
            if new_text is None:
                skipped.append(wid)
                continue
            word.text = new_text
        elif k is EditKind.FIND_REPLACE:
            if spec.pattern not in word.text:
                skipped.append(wid)
                continue
            new_text = word.text.replace(spec.pattern, spec.replacement)
            if not new_text.strip():
                skipped.append(wid)
                continue
            word.text = new_text
        elif k is EditKind.TRANSLATE:
            b = word.bbox
            nx = min(max(b.x + spec.dx, 0.0), 1.0 - b.w)
            ny = min(max(b.y + spec.dy, 0.0), 1.0 - b.h)
            word.bbox = BBox(nx, ny, b.w, b.h)
        elif k is EditKind.ALIGN_X:
            pass  # handled per line below
        affected.append(wid)

    if spec.kind is EditKind.ALIGN_X:
        affected = _align_lines(doc, word_ids, spec.target_x)
        skipped = [wid for wid in word_ids if wid not in set(affected)]
    if to_delete:
        _delete_words(doc, to_delete)
    return affected, skipped


def _align_lines(doc: DocumentModel, word_ids: list[int], target_x: float) -> list[int]:
    """Shift every line containing member words so its first word starts at target_x."""
    words_by_id = doc.words_by_id()
    member = set(word_ids)
    moved: list[int] = []
    for line in doc.lines:
        in_cluster = [wid for wid in line.word_ids if wid in member]
        if not in_cluster:
            continue
        line_words = [words_by_id[wid] for wid in line.word_ids]
        first = min(line_words, key=lambda w: (w.bbox.x, w.id))
        delta = target_x - first.bbox.x
        min_x = min(w.bbox.x for w in line_words)
        max_x2 = max(w.bbox.x2 for w in line_words)
        delta = min(max(delta, -min_x), 1.0 - max_x2)
        for w in line_words:
            b = w.bbox
            w.bbox = BBox(b.x + delta, b.y, b.w, b.h)
            moved.append(w.id)
        line.bbox = BBox(line.bbox.x + delta, line.bbox.y, line.bbox.w, line.bbox.h)
    return sorted(set(moved))


def _delete_words(doc: DocumentModel, word_ids: list[int]):
    gone = set(word_ids)
    doc.words = [w for w in doc.words if w.id not in gone]
    for wid in gone:
        doc.style_attrs.pop(wid, None)
        doc.external_features.pop(wid, None)
    kept_lines = []
    words_by_id = doc.words_by_id()
    for line in doc.lines:
        line.word_ids = [wid for wid in line.word_ids if wid not in gone]
        if not line.word_ids:
            continue
        bbox = words_by_id[line.word_ids[0]].bbox
        for wid in line.word_ids[1:]:
            bbox = bbox.union(words_by_id[wid].bbox)
        line.bbox = bbox
        kept_lines.append(line)
    doc.lines = kept_lines


def apply_edit(
    doc: DocumentModel,
    assignment: ClusterAssignment,
    cluster_id: int,
    spec: EditSpec,
) -> tuple[DocumentModel, EditLogEntry]:
    """Apply ``spec`` to every word of ``cluster_id`` on a copy of ``doc``."""
    if cluster_id not in assignment.clusters:
        raise EditError(f"unknown cluster id: {cluster_id}")
    new_doc = copy.deepcopy(doc)
    member_ids = [wid for wid in assignment.clusters[cluster_id]
                  if wid in new_doc.words_by_id()]
    affected, skipped = _apply_to_words(new_doc, member_ids, spec)
    entry = EditLogEntry(
        cluster_id=cluster_id,
        spec=spec,
        affected_word_ids=affected,
        skipped_word_ids=skipped,
    )
    return new_doc, entry


def replay_log(doc: DocumentModel, entries: list[EditLogEntry]) -> DocumentModel:
    """Re-apply a log to a (copy of a) document; reproduces the edited state."""
    out = copy.deepcopy(doc)
    for entry in entries:
        present = [wid for wid in entry.affected_word_ids if wid in out.words_by_id()]
        _apply_to_words(out, present, entry.spec)
    return out


_FONT_FAMILIES = (
    "Georgia, serif",
    "Helvetica, Arial, sans-serif",
    "'Courier New', monospace",
    "'Trebuchet MS', sans-serif",
    "'Times New Roman', serif",
)


def render_svg(
    doc: DocumentModel,
    assignment: Optional[ClusterAssignment] = None,
    page_px: tuple[int, int] = (1000, 1294),
) -> str:
    """One SVG text element per word; cluster rectangles behind, when given."""
    W, H = page_px
    if W <= 0 or H <= 0:
        raise ValueError("page dimensions must be positive")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
    ]
    if assignment is not None:
        words_by_id = doc.words_by_id()
        for cid in sorted(assignment.clusters):
            color = cluster_color(cid)
            for wid in assignment.clusters[cid]:
                word = words_by_id.get(wid)
                if word is None:
                    continue
                b = word.bbox
                parts.append(
                    f'<rect x="{b.x * W:.2f}" y="{b.y * H:.2f}" width="{b.w * W:.2f}" '
                    f'height="{b.h * H:.2f}" fill="{color}" fill-opacity="0.25" '
                    f'data-cluster="{cid}" data-word-id="{wid}"/>'
                )
    for word in doc.words:
        b = word.bbox
        if word.emphasis > 0:
            parts.append(
                f'<rect x="{b.x * W:.2f}" y="{b.y * H:.2f}" width="{b.w * W:.2f}" '
                f'height="{b.h * H:.2f}" fill="#ffe34d" '
                f'fill-opacity="{word.emphasis:.3f}"/>'
            )
        attrs = doc.style_attrs.get(word.id)
        if attrs is not None:
            size = attrs.font_size / 720.0 * H
            family = _FONT_FAMILIES[attrs.font_family_id % len(_FONT_FAMILIES)]
            style = (
                f'font-family="{family}" font-size="{size:.2f}" '
                f'fill="rgb({attrs.color_rgb[0]},{attrs.color_rgb[1]},{attrs.color_rgb[2]})"'
            )
            if attrs.bold:
                style += ' font-weight="bold"'
            if attrs.italic:
                style += ' font-style="italic"'
        else:
            style = f'font-size="{b.h * H * 0.85:.2f}" fill="black"'
        parts.append(
            f'<text x="{b.x * W:.2f}" y="{b.y * H:.2f}" dominant-baseline="hanging" {style} '
            f'data-word-id="{word.id}">{escape(word.text)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)

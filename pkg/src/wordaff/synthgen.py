"""Synthetic documents with ground-truth categories, plus evaluation metrics.

Templates lay out menu-like, schedule-like, simple, and dense documents on
a normalized page. Every category carries its own style attributes and
token generator, chosen so the ground truth is learnable: categories differ
in font family/weight/style or in the kind of token they emit.

Box-height units: a point of font size maps to 1/720 of the page height.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .clustering import ClusterAssignment
from .model import BBox, DocumentModel, StyleAttrs, WordUnit

TEMPLATES = ("MENU", "SCHEDULE", "SIMPLE_DOC", "DENSE_DOC")

PT_TO_PAGE = 1.0 / 720.0
CHAR_WIDTH_FACTOR = 0.55
INTRA_GAP_WEIGHT = 0.05  # target line weight inside a row, well under 0.1


class LayoutOverflowError(ValueError):
    """Too many words for the page."""


@dataclass(frozen=True)
class CategorySpec:
    name: str
    style: StyleAttrs
    token_kind: str  # name | prose | price | time | date | heading


_TEMPLATE_SIZES = {
    # n_items, desc_lines, words_per_line, columns
    "MENU": (9, (1, 2), (4, 7), 1),
    "SCHEDULE": (12, (1, 1), (4, 7), 1),
    "SIMPLE_DOC": (9, (1, 2), (5, 8), 1),
    "DENSE_DOC": (9, (4, 6), (4, 6), 2),
}


@dataclass
class SynthSpec:
    template: str
    seed: int
    n_items: Optional[int] = None
    desc_lines: Optional[tuple[int, int]] = None
    words_per_line: Optional[tuple[int, int]] = None
    aspect_ratio: float = 0.773
    columns: Optional[int] = None
    jitter: float = 0.05      # vertical jitter, fraction of box height
    size_jitter: float = 0.02  # multiplicative font-size jitter
    doc_id: str = ""
    categories: list[CategorySpec] = field(default_factory=list)

    def __post_init__(self):
        if self.template not in TEMPLATES:
            raise ValueError(f"template must be one of {TEMPLATES}, got {self.template!r}")
        items, desc, wpl, cols = _TEMPLATE_SIZES[self.template]
        if self.n_items is None:
            self.n_items = items
        if self.desc_lines is None:
            self.desc_lines = desc
        if self.words_per_line is None:
            self.words_per_line = wpl
        if self.columns is None:
            self.columns = cols
        if not self.categories:
            self.categories = list(_DEFAULT_CATEGORIES[self.template])
        self.validate()

    def validate(self):
        if self.n_items < 1:
            raise ValueError("n_items must be >= 1")
        seen = {}
        for cat in self.categories:
            key = (cat.style.font_family_id, cat.style.bold, cat.style.italic)
            if key in seen and seen[key] == cat.token_kind:
                raise ValueError(
                    f"categories {cat.name!r} and another share style {key} and "
                    f"token kind {cat.token_kind!r}; ground truth would not be learnable"
                )
            seen[key] = cat.token_kind

    def category(self, name: str) -> CategorySpec:
        for cat in self.categories:
            if cat.name == name:
                return cat
        raise KeyError(name)

    def to_payload(self) -> dict:
        return {
            "template": self.template,
            "seed": self.seed,
            "n_items": self.n_items,
            "desc_lines": list(self.desc_lines),
            "words_per_line": list(self.words_per_line),
            "aspect_ratio": self.aspect_ratio,
            "columns": self.columns,
            "jitter": self.jitter,
            "size_jitter": self.size_jitter,
            "doc_id": self.doc_id,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "SynthSpec":
        kwargs = dict(payload)
        if "desc_lines" in kwargs:
            kwargs["desc_lines"] = tuple(kwargs["desc_lines"])
        if "words_per_line" in kwargs:
            kwargs["words_per_line"] = tuple(kwargs["words_per_line"])
        return cls(**kwargs)


_DEFAULT_CATEGORIES = {
    "MENU": (
        CategorySpec("heading", StyleAttrs(3, bold=True, font_size=19.0, color_rgb=(40, 40, 40)), "heading"),
        CategorySpec("item", StyleAttrs(0, bold=True, font_size=14.0, color_rgb=(20, 20, 20)), "name"),
        CategorySpec("price", StyleAttrs(1, font_size=12.0, color_rgb=(60, 30, 30)), "price"),
        CategorySpec("desc", StyleAttrs(2, font_size=10.0, color_rgb=(90, 90, 90)), "prose"),
    ),
    "SCHEDULE": (
        CategorySpec("heading", StyleAttrs(4, bold=True, font_size=18.0), "heading"),
        CategorySpec("time", StyleAttrs(1, font_size=12.0), "time"),
        CategorySpec("event", StyleAttrs(0, bold=True, font_size=13.0), "name"),
        CategorySpec("date", StyleAttrs(3, italic=True, font_size=12.0), "date"),
    ),
    "SIMPLE_DOC": (
        CategorySpec("title", StyleAttrs(4, bold=True, font_size=20.0), "heading"),
        CategorySpec("item", StyleAttrs(0, bold=True, font_size=13.0), "name"),
        CategorySpec("desc", StyleAttrs(2, font_size=10.0), "prose"),
    ),
    "DENSE_DOC": (
        CategorySpec("header", StyleAttrs(1, italic=True, font_size=11.0), "heading"),
        CategorySpec("item", StyleAttrs(0, bold=True, font_size=13.0), "name"),
        CategorySpec("desc", StyleAttrs(2, font_size=9.5), "prose"),
    ),
}

_NAME_WORDS = (
    "Golden Harvest Basil Cedar Ember Willow Saffron Juniper Marble Clover "
    "Copper Meadow Thyme Rustic Velvet Amber Garden Stone Maple Orchard "
    "Silver Crimson Pepper Honey Truffle Lantern Summit Coastal Prairie Noble"
).split()

_PROSE_WORDS = (
    "the and with of a slow roasted fresh house made savory tender crisp "
    "seasonal local organic rich smooth delicate toasted glazed herbs spice "
    "served over under alongside paired drizzle infused crafted whipped "
    "warm cool light hearty classic simple layered folded blended aged"
).split()

_HEADING_WORDS = (
    "STARTERS MAINS DESSERTS DRINKS SPECIALS SIDES BRUNCH EVENING NOTICES "
    "OVERVIEW METHODS RESULTS SUMMARY APPENDIX SCHEDULE MORNING AFTERNOON"
).split()


@dataclass
class GroundTruth:
    labels: dict[int, str]

    def categories(self) -> list[str]:
        return sorted(set(self.labels.values()))

    def to_payload(self) -> dict:
        return {"labels": {str(k): v for k, v in self.labels.items()}}

    @classmethod
    def from_payload(cls, payload: dict) -> "GroundTruth":
        return cls(labels={int(k): v for k, v in payload["labels"].items()})


class _Tokens:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def make(self, kind: str, count: int) -> list[str]:
        if kind == "name":
            return [str(self.rng.choice(_NAME_WORDS)) for _ in range(count)]
        if kind == "prose":
            return [str(self.rng.choice(_PROSE_WORDS)) for _ in range(count)]
        if kind == "heading":
            return [str(self.rng.choice(_HEADING_WORDS)) for _ in range(count)]
        if kind == "price":
            return [f"${int(self.rng.integers(3, 29))}.{int(self.rng.integers(0, 100)):02d}"
                    for _ in range(count)]
        if kind == "time":
            return [f"{int(self.rng.integers(8, 22)):02d}:{int(self.rng.choice([0, 15, 30, 45])):02d}"
                    for _ in range(count)]
        if kind == "date":
            return [f"{int(self.rng.integers(1, 29))}/{int(self.rng.integers(1, 13))}/"
                    f"{int(self.rng.integers(2024, 2027))}" for _ in range(count)]
        raise ValueError(f"unknown token kind: {kind}")


class _Builder:
    def __init__(self, spec: SynthSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.words: list[WordUnit] = []
        self.styles: dict[int, StyleAttrs] = {}
        self.labels: dict[int, str] = {}
        self.next_id = 0

    def box_height(self, font_size: float) -> float:
        return font_size * PT_TO_PAGE

    def char_width(self, box_h: float) -> float:
        return CHAR_WIDTH_FACTOR * box_h / self.spec.aspect_ratio

    def place_row(self, texts: list[str], x: float, y: float, cat: CategorySpec,
                  x_limit: float = 0.97) -> float:
        """Place words left to right starting at (x, y); returns the bottom y.

        Words that would cross ``x_limit`` are dropped; at least one word
        must fit, and the page bottom is a hard error.
        """
        bottom = y
        placed = 0
        for text in texts:
            size = cat.style.font_size * (1 + self.rng.uniform(-1, 1) * self.spec.size_jitter)
            h = self.box_height(size)
            w = max(self.char_width(h) * len(text), 1e-4)
            gap = INTRA_GAP_WEIGHT * h / self.spec.aspect_ratio
            wy = y + self.rng.uniform(-1, 1) * self.spec.jitter * h
            wy = min(max(wy, 0.0), 1.0 - h)
            if x + w > x_limit:
                if placed:
                    break
                raise LayoutOverflowError(
                    f"word {text!r} does not fit between x={x:.3f} and {x_limit}"
                )
            if wy + h > 0.99:
                raise LayoutOverflowError(f"page overflow at y={wy:.3f}")
            wid = self.next_id
            self.next_id += 1
            self.words.append(WordUnit(id=wid, text=text, bbox=BBox(x, wy, w, h)))
            self.styles[wid] = replace(cat.style, font_size=size)
            self.labels[wid] = cat.name
            x = x + w + gap
            bottom = max(bottom, wy + h)
            placed += 1
        return bottom

    def build(self) -> tuple[DocumentModel, GroundTruth]:
        doc = DocumentModel(
            doc_id=self.spec.doc_id or f"{self.spec.template.lower()}-{self.spec.seed}",
            aspect_ratio=self.spec.aspect_ratio,
            words=self.words,
            style_attrs=self.styles,
        )
        return doc, GroundTruth(labels=self.labels)


def generate_document(spec: SynthSpec) -> tuple[DocumentModel, GroundTruth]:
    """Deterministic document plus ground truth for the given spec and seed."""
    rng = np.random.default_rng(spec.seed)
    builder = _Builder(spec, rng)
    tokens = _Tokens(rng)
    if spec.template == "MENU":
        _gen_menu(spec, builder, tokens, rng)
    elif spec.template == "SCHEDULE":
        _gen_schedule(spec, builder, tokens, rng)
    elif spec.template == "SIMPLE_DOC":
        _gen_simple(spec, builder, tokens, rng)
    else:
        _gen_dense(spec, builder, tokens, rng)
    return builder.build()


def _pitch(builder: _Builder, cat: CategorySpec, factor: float = 1.8) -> float:
    return builder.box_height(cat.style.font_size) * factor


def _gen_menu(spec, builder, tokens, rng):
    heading = spec.category("heading")
    item = spec.category("item")
    price = spec.category("price")
    desc = spec.category("desc")
    y = 0.05
    for i in range(spec.n_items):
        if i % 5 == 0:
            y += 0.2 * _pitch(builder, heading)
            builder.place_row(tokens.make("heading", int(rng.integers(1, 3))), 0.07, y, heading)
            y += 0.85 * _pitch(builder, heading)
        n_name = int(rng.integers(2, 4))
        bottom = builder.place_row(tokens.make("name", n_name), 0.07, y, item, x_limit=0.68)
        builder.place_row(tokens.make("price", 1), 0.78, y, price)
        y = bottom + 0.35 * _pitch(builder, item)
        for _ in range(int(rng.integers(spec.desc_lines[0], spec.desc_lines[1] + 1))):
            n = int(rng.integers(spec.words_per_line[0], spec.words_per_line[1] + 1))
            bottom = builder.place_row(tokens.make("prose", n), 0.09, y, desc)
            y = bottom + 0.3 * _pitch(builder, desc)
        y += 0.2 * _pitch(builder, item)


def _gen_schedule(spec, builder, tokens, rng):
    heading = spec.category("heading")
    time_cat = spec.category("time")
    event = spec.category("event")
    date = spec.category("date")
    y = 0.05
    builder.place_row(tokens.make("heading", 2), 0.07, y, heading)
    y += 1.6 * _pitch(builder, heading)
    for _ in range(spec.n_items):
        bottom = builder.place_row(tokens.make("time", 1), 0.07, y, time_cat)
        bottom = max(bottom, builder.place_row(
            tokens.make("name", int(rng.integers(2, 4))), 0.22, y, event, x_limit=0.70))
        builder.place_row(tokens.make("date", 1), 0.78, y, date)
        y = bottom + 0.8 * _pitch(builder, event)


def _gen_simple(spec, builder, tokens, rng):
    title = spec.category("title")
    item = spec.category("item")
    desc = spec.category("desc")
    y = 0.05
    builder.place_row(tokens.make("heading", int(rng.integers(2, 4))), 0.07, y, title)
    y += 1.4 * _pitch(builder, title)
    for _ in range(spec.n_items):
        bottom = builder.place_row(tokens.make("name", 2), 0.07, y, item)
        y = bottom + 0.35 * _pitch(builder, item)
        for _ in range(int(rng.integers(spec.desc_lines[0], spec.desc_lines[1] + 1))):
            n = int(rng.integers(spec.words_per_line[0], spec.words_per_line[1] + 1))
            bottom = builder.place_row(tokens.make("prose", n), 0.09, y, desc)
            y = bottom + 0.3 * _pitch(builder, desc)
        y += 0.25 * _pitch(builder, item)


def _gen_dense(spec, builder, tokens, rng):
    header = spec.category("header")
    item = spec.category("item")
    desc = spec.category("desc")
    columns = max(spec.columns, 2)
    col_w = (0.97 - 0.06 - 0.06 * (columns - 1)) / columns
    col_x = [0.06 + i * (col_w + 0.06) for i in range(columns)]
    y_top, y_max = 0.05, 0.93
    builder.place_row(tokens.make("heading", 2), col_x[0], y_top, header)
    col, y = 0, y_top + 1.6 * _pitch(builder, header)
    for _ in range(spec.n_items):
        rows = int(rng.integers(spec.desc_lines[0], spec.desc_lines[1] + 1))
        para_height = 1.0 * _pitch(builder, item) + rows * 0.85 * _pitch(builder, desc)
        if y + para_height > y_max:
            col += 1
            if col >= columns:
                raise LayoutOverflowError("dense document exceeds its columns")
            y = y_top + 1.6 * _pitch(builder, header)
        x = col_x[col]
        bottom = builder.place_row(
            tokens.make("name", int(rng.integers(2, 4))), x, y, item, x_limit=x + col_w)
        y = bottom + 0.35 * _pitch(builder, item)
        for _ in range(rows):
            n = int(rng.integers(spec.words_per_line[0], spec.words_per_line[1] + 1))
            bottom = builder.place_row(tokens.make("prose", n), x, y, desc, x_limit=x + col_w)
            y = bottom + 0.3 * _pitch(builder, desc)
        y += 0.35 * _pitch(builder, item)


def purity(assignment: ClusterAssignment, gt: GroundTruth) -> float:
    """Fraction of words whose cluster majority matches their own category."""
    assigned = set(assignment.word_to_cluster)
    if assigned != set(gt.labels):
        raise ValueError("assignment and ground truth cover different word sets")
    n = len(gt.labels)
    if n == 0:
        raise ValueError("empty ground truth")
    total = 0
    for wids in assignment.clusters.values():
        counts: dict[str, int] = {}
        for wid in wids:
            counts[gt.labels[wid]] = counts.get(gt.labels[wid], 0) + 1
        total += max(counts.values())
    return total / n


def scribble_estimate(assignment: ClusterAssignment, gt: GroundTruth, category: str) -> int:
    """Estimated user scribbles needed to make ``category`` one pure cluster.

    One lasso merge per extra fragment, plus two scribbles (the two-click
    split) per cluster that mixes the category with other words.
    """
    if category not in gt.labels.values():
        raise ValueError(f"category {category!r} not present in ground truth")
    holders = []
    for cid, wids in assignment.clusters.items():
        cats = {gt.labels[w] for w in wids}
        if category in cats:
            holders.append(len(cats) > 1)
    impure = sum(1 for mixed in holders if mixed)
    return max(0, len(holders) - 1) + 2 * impure


@dataclass
class BenchmarkRow:
    template: str
    doc_id: str
    seed: int
    n_words: int
    n_clusters: int
    purity: float
    scribbles: dict[str, int]


@dataclass
class BenchmarkReport:
    rows: list[BenchmarkRow]

    def mean_purity(self, template: Optional[str] = None) -> float:
        rows = [r for r in self.rows if template is None or r.template == template]
        return float(np.mean([r.purity for r in rows])) if rows else float("nan")

    def mean_scribbles(self, category: str, template: Optional[str] = None) -> float:
        vals = [
            r.scribbles[category]
            for r in self.rows
            if category in r.scribbles and (template is None or r.template == template)
        ]
        return float(np.mean(vals)) if vals else float("nan")

    def to_payload(self) -> dict:
        categories = sorted({c for r in self.rows for c in r.scribbles})
        templates = sorted({r.template for r in self.rows})
        return {
            "documents": [
                {
                    "template": r.template,
                    "doc_id": r.doc_id,
                    "seed": r.seed,
                    "n_words": r.n_words,
                    "n_clusters": r.n_clusters,
                    "purity": r.purity,
                    "scribbles": r.scribbles,
                }
                for r in self.rows
            ],
            "per_template": {
                t: {
                    "mean_purity": self.mean_purity(t),
                    "mean_scribbles": {
                        c: self.mean_scribbles(c, t)
                        for c in categories
                        if any(c in r.scribbles for r in self.rows if r.template == t)
                    },
                }
                for t in templates
            },
            "overall": {
                "mean_purity": self.mean_purity(),
                "mean_scribbles": {c: self.mean_scribbles(c) for c in categories},
            },
        }

    def to_csv(self) -> str:
        categories = sorted({c for r in self.rows for c in r.scribbles})
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["template", "doc_id", "seed", "n_words", "n_clusters", "purity"]
                        + [f"scribbles_{c}" for c in categories])
        for r in self.rows:
            writer.writerow(
                [r.template, r.doc_id, r.seed, r.n_words, r.n_clusters, f"{r.purity:.6f}"]
                + [r.scribbles.get(c, "") for c in categories]
            )
        return buf.getvalue()


def load_corpus(path: str | Path) -> list[SynthSpec]:
    payload = json.loads(Path(path).read_text())
    if not isinstance(payload, dict) or "documents" not in payload:
        raise ValueError("corpus file must be an object with a 'documents' array")
    return [SynthSpec.from_payload(entry) for entry in payload["documents"]]


def bundled_corpus_path() -> Path:
    return Path(__file__).parent / "data" / "bench_corpus.json"


def run_benchmark(corpus: list[SynthSpec], config=None) -> BenchmarkReport:
    """Generate, run the pipeline on, and score every corpus document.

    Each document's pipeline run is seeded from its own spec seed, so the
    report is deterministic for a fixed corpus.
    """
    from .config import PipelineConfig
    from .pipeline import run_pipeline

    base = config or PipelineConfig()
    rows = []
    for spec in corpus:
        doc, gt = generate_document(spec)
        session = run_pipeline(doc, base.with_seed(spec.seed))
        row = BenchmarkRow(
            template=spec.template,
            doc_id=doc.doc_id,
            seed=spec.seed,
            n_words=len(doc.words),
            n_clusters=session.assignment.n_clusters,
            purity=purity(session.assignment, gt),
            scribbles={
                cat: scribble_estimate(session.assignment, gt, cat)
                for cat in gt.categories()
            },
        )
        rows.append(row)
    return BenchmarkReport(rows=rows)

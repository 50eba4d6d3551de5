import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wordaff.model import (
    BBox,
    DocumentValidationError,
    build_contextual_lines,
    ingest_document,
    line_weight,
    vertical_overlap,
)

from .conftest import make_doc, make_word, row_doc

REL = 1e-9


def close(a, b):
    return a == pytest.approx(b, rel=REL, abs=1e-12)


class TestBBox:
    def test_valid(self):
        b = BBox(0.1, 0.2, 0.3, 0.05)
        assert b.x2 == pytest.approx(0.4)

    @pytest.mark.parametrize("args", [(0, 0, 0, 0.1), (0, 0, 0.1, -0.1),
                                      (-0.01, 0, 0.1, 0.1), (0.95, 0, 0.1, 0.1)])
    def test_invalid(self, args):
        with pytest.raises(DocumentValidationError):
            BBox(*args)

    def test_union(self):
        u = BBox(0.1, 0.1, 0.1, 0.1).union(BBox(0.3, 0.05, 0.1, 0.1))
        assert (u.x, u.y, u.x2, u.y2) == pytest.approx((0.1, 0.05, 0.4, 0.2))


class TestVerticalOverlap:
    def test_identical(self):
        assert close(vertical_overlap(BBox(0, 0.1, 0.1, 0.05), BBox(0.5, 0.1, 0.1, 0.05)), 1.0)

    def test_disjoint(self):
        assert close(vertical_overlap(BBox(0, 0.1, 0.1, 0.05), BBox(0.5, 0.2, 0.1, 0.05)), 0.0)

    def test_partial(self):
        # overlap 0.02 over min height 0.04
        a = BBox(0, 0.10, 0.1, 0.04)
        b = BBox(0.5, 0.12, 0.1, 0.08)
        assert close(vertical_overlap(a, b), 0.5)


class TestLineWeight:
    def test_same_line_case(self):
        a = BBox(0.1, 0.1, 0.1, 0.05)
        b = BBox(0.205, 0.1, 0.1, 0.04)  # s = 0.005
        assert close(line_weight(a, b, 0.8), 0.08)

    def test_split_case(self):
        a = BBox(0.1, 0.1, 0.1, 0.05)
        b = BBox(0.21, 0.1, 0.1, 0.03)  # s = 0.01
        assert close(line_weight(a, b, 0.75), 0.15)

    def test_zero_gap(self):
        a = BBox(0.1, 0.1, 0.1, 0.05)
        b = BBox(0.15, 0.1, 0.1, 0.05)  # overlapping in x
        assert line_weight(a, b, 2.3) == 0.0


def closure_oracle(n, edges):
    """Brute-force transitive closure over an explicit adjacency matrix."""
    adj = np.eye(n, dtype=bool)
    for i, j in edges:
        adj[i, j] = adj[j, i] = True
    for _ in range(n):
        adj = adj | (adj @ adj)
    groups = {}
    for i in range(n):
        key = tuple(np.nonzero(adj[i])[0])
        groups.setdefault(key, []).append(i)
    return sorted(sorted(g) for g in groups.values())


class TestBuildContextualLines:
    def test_two_words_linked(self):
        doc = row_doc(gaps=[0.004])  # weight = 0.004 / 0.05 = 0.08 < 0.1
        lines = build_contextual_lines(doc)
        assert len(lines) == 1 and lines[0].word_ids == [0, 1]
        assert doc.words[0].line_id == doc.words[1].line_id == 0

    def test_two_words_split(self):
        doc = row_doc(gaps=[0.0075])  # weight 0.15
        lines = build_contextual_lines(doc)
        assert len(lines) == 2

    def test_five_words_alternating_weights(self):
        # weights {0.05, 0.2, 0.05, 0.05} -> components {w0,w1}, {w2,w3,w4}
        h = 0.05
        gaps = [w * h for w in (0.05, 0.2, 0.05, 0.05)]
        doc = row_doc(gaps=gaps, h=h)
        lines = build_contextual_lines(doc, threshold=0.1)
        got = sorted(sorted(ln.word_ids) for ln in lines)

        edges = [(i, i + 1) for i, w in enumerate((0.05, 0.2, 0.05, 0.05)) if w < 0.1]
        assert got == closure_oracle(5, edges)
        assert got == [[0, 1], [2, 3, 4]]

    def test_no_link_without_overlap(self):
        a = make_word(0, "a", 0.1, 0.10, 0.04, 0.05)
        b = make_word(1, "b", 0.141, 0.30, 0.04, 0.05)
        doc = make_doc([a, b])
        assert len(build_contextual_lines(doc)) == 2

    def test_line_bbox_is_union(self):
        doc = row_doc(gaps=[0.004])
        (line,) = build_contextual_lines(doc)
        assert line.bbox.x == pytest.approx(0.01)
        assert line.bbox.x2 == pytest.approx(0.01 + 0.04 + 0.004 + 0.04)

    def test_empty_and_singleton(self):
        doc = make_doc([])
        assert build_contextual_lines(doc) == []
        doc = make_doc([make_word(0, "only", 0.1, 0.1, 0.1, 0.05)])
        lines = build_contextual_lines(doc)
        assert len(lines) == 1 and doc.words[0].line_id == 0


@st.composite
def grid_docs(draw):
    """Documents made of horizontal rows, the shape real layouts take."""
    n_rows = draw(st.integers(1, 4))
    words = []
    wid = 0
    for r in range(n_rows):
        n = draw(st.integers(1, 6))
        x = 0.01
        for _ in range(n):
            gap = draw(st.floats(0.0005, 0.02))
            words.append(make_word(wid, f"w{wid}", x, 0.05 + r * 0.1, 0.05, 0.05))
            x += 0.05 + gap
            wid += 1
            if x > 0.9:
                break
    return make_doc(words)


class TestLineProperties:
    @settings(max_examples=60, deadline=None)
    @given(grid_docs())
    def test_partition(self, doc):
        lines = build_contextual_lines(doc)
        seen = [wid for ln in lines for wid in ln.word_ids]
        assert sorted(seen) == sorted(w.id for w in doc.words)
        assert len(seen) == len(set(seen))

    @settings(max_examples=60, deadline=None)
    @given(grid_docs())
    def test_determinism(self, doc):
        import copy

        doc2 = copy.deepcopy(doc)
        a = [ln.word_ids for ln in build_contextual_lines(doc)]
        b = [ln.word_ids for ln in build_contextual_lines(doc2)]
        assert a == b

    @settings(max_examples=60, deadline=None)
    @given(grid_docs(), st.floats(0.05, 0.3), st.floats(0.0, 0.3))
    def test_threshold_monotonicity(self, doc, threshold, bump):
        import copy

        low = len(build_contextual_lines(copy.deepcopy(doc), threshold=threshold))
        high = len(build_contextual_lines(copy.deepcopy(doc), threshold=threshold + bump))
        assert high <= low

    @settings(max_examples=60, deadline=None)
    @given(grid_docs())
    def test_locality_consecutive_edge(self, doc):
        lines = build_contextual_lines(doc)
        by_id = doc.words_by_id()
        for ln in lines:
            for a, b in zip(ln.word_ids, ln.word_ids[1:]):
                wa, wb = by_id[a], by_id[b]
                assert vertical_overlap(wa.bbox, wb.bbox) >= 0.5
                assert line_weight(wa.bbox, wb.bbox, doc.aspect_ratio) < 0.1


class TestIngest:
    def payload(self, **kw):
        base = {
            "doc_id": "d1",
            "aspect_ratio": 0.75,
            "words": [
                {"id": 0, "text": "Pasta", "bbox": [0.1, 0.1, 0.2, 0.05]},
                {"id": 1, "text": "$5.99", "bbox": [0.6, 0.1, 0.1, 0.05]},
            ],
        }
        base.update(kw)
        return base

    def test_two_words(self):
        doc = ingest_document(json.dumps(self.payload()).encode())
        assert doc.doc_id == "d1"
        assert doc.aspect_ratio == pytest.approx(0.75)
        assert len(doc.words) == 2 and doc.lines == []

    def test_empty_document(self):
        doc = ingest_document(json.dumps(self.payload(words=[])))
        assert doc.words == []

    def test_duplicate_id(self):
        words = [
            {"id": 7, "text": "a", "bbox": [0.1, 0.1, 0.1, 0.05]},
            {"id": 7, "text": "b", "bbox": [0.4, 0.1, 0.1, 0.05]},
        ]
        with pytest.raises(DocumentValidationError, match="duplicate"):
            ingest_document(json.dumps(self.payload(words=words)))

    def test_error_names_field(self):
        words = [{"id": 0, "text": "a", "bbox": [0.1, 0.1, 0.1]}]
        with pytest.raises(DocumentValidationError, match=r"words\[0\]\.bbox"):
            ingest_document(json.dumps(self.payload(words=words)))

    def test_invalid_json(self):
        with pytest.raises(DocumentValidationError, match="invalid JSON"):
            ingest_document(b"{nope")

    def test_clamps_with_warning(self):
        words = [{"id": 0, "text": "a", "bbox": [0.95, 0.1, 0.1, 0.05]}]
        with pytest.warns(UserWarning, match="clamped"):
            doc = ingest_document(json.dumps(self.payload(words=words)))
        assert doc.words[0].bbox.x2 <= 1.0

    def test_small_violation_clamped_silently(self):
        import warnings

        words = [{"id": 0, "text": "a", "bbox": [0.9, 0.1, 0.1000005, 0.05]}]
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            doc = ingest_document(json.dumps(self.payload(words=words)))
        assert doc.words[0].bbox.x2 <= 1.0 + 1e-9

    def test_style_attrs_and_features(self):
        words = [{
            "id": 0, "text": "a", "bbox": [0.1, 0.1, 0.1, 0.05],
            "style_attrs": {"font_family_id": 2, "bold": True, "font_size": 11.0},
            "feature": [0.5, 0.5, 0.25],
        }]
        doc = ingest_document(json.dumps(self.payload(words=words)))
        assert doc.style_attrs[0].bold is True
        assert doc.external_features[0] == (0.5, 0.5, 0.25)

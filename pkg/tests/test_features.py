import numpy as np
import pytest

from wordaff.features import (
    FeatureConfig,
    assemble_representations,
    char_class_histogram,
    encode_content,
    encode_geometry,
    encode_style,
    token_shape_index,
)
from wordaff.model import DocumentValidationError, StyleAttrs, build_contextual_lines

from .conftest import make_doc, make_word, row_doc


def cfg(**kw):
    return FeatureConfig(**kw)


class TestGeometry:
    @pytest.mark.parametrize("box", [(0.1, 0.2, 0.3, 0.05), (0, 0, 1, 1),
                                     (0.5, 0.5, 0.01, 0.02)])
    def test_passthrough(self, box):
        w = make_word(0, "x", *box)
        assert encode_geometry(w).tolist() == pytest.approx(list(box), rel=1e-9)


class TestStyle:
    attrs = StyleAttrs(font_family_id=2, bold=False, italic=False, font_size=10.0)

    def test_deterministic_per_key(self):
        w = make_word(3, "word", 0.1, 0.1, 0.1, 0.02)
        a = encode_style(w, self.attrs, cfg(), doc_id="d")
        b = encode_style(w, self.attrs, cfg(), doc_id="d")
        assert np.array_equal(a, b)

    def test_noise_keyed_by_word_and_doc(self):
        w1 = make_word(3, "word", 0.1, 0.1, 0.1, 0.02)
        w2 = make_word(4, "word", 0.1, 0.1, 0.1, 0.02)
        a = encode_style(w1, self.attrs, cfg(), doc_id="d")
        b = encode_style(w2, self.attrs, cfg(), doc_id="d")
        c = encode_style(w1, self.attrs, cfg(), doc_id="other")
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_unit_norm(self):
        w = make_word(0, "word", 0.1, 0.1, 0.1, 0.02)
        v = encode_style(w, self.attrs, cfg(), doc_id="d")
        assert np.linalg.norm(v) == pytest.approx(1.0, rel=1e-12)

    def test_similar_sizes_high_cosine(self):
        # same family/weight/style, sizes 10 vs 11, noise disabled
        quiet = cfg(noise_std=0.0)
        w = make_word(0, "word", 0.1, 0.1, 0.1, 0.02)
        a = encode_style(w, StyleAttrs(2, font_size=10.0), quiet)
        b = encode_style(w, StyleAttrs(2, font_size=11.0), quiet)
        assert float(a @ b) > 0.98

    def test_bold_differs_in_exactly_one_coordinate(self):
        quiet = cfg(noise_std=0.0)
        w = make_word(0, "word", 0.1, 0.1, 0.1, 0.02)
        S = quiet.style_dim
        a = encode_style(w, StyleAttrs(2, bold=False), quiet)
        b = encode_style(w, StyleAttrs(2, bold=True), quiet)
        # the family one-hot is 1.0 before normalization, so dividing by that
        # coordinate recovers the raw construction exactly
        raw_a = a / a[2]
        raw_b = b / b[2]
        diff = np.nonzero(~np.isclose(raw_a, raw_b, atol=1e-12))[0]
        assert diff.tolist() == [S - 6]

    def test_fallback_without_attrs(self):
        w = make_word(0, "WORD", 0.1, 0.1, 0.06, 0.02)
        v = encode_style(w, None, cfg())
        assert np.linalg.norm(v) == pytest.approx(1.0)
        assert v[0] > 0  # bbox height
        assert v[2] > 0  # uppercase ratio


class TestContent:
    def test_digit_time_profile(self):
        hist = char_class_histogram("12:30")
        assert hist[2] == pytest.approx(4 / 5)  # digits
        assert hist[4] == pytest.approx(1 / 5)  # punctuation
        assert token_shape_index("12:30") == 1  # numeric-with-separators

    def test_shapes(self):
        assert token_shape_index("1234") == 0
        assert token_shape_index("Hello") == 2
        assert token_shape_index("HELLO") == 3
        assert token_shape_index("hello") == 4
        assert token_shape_index("HeLLo") == 5

    def test_case_changes_shape_coordinates(self):
        assert token_shape_index("HELLO") != token_shape_index("hello")

    def test_context_block_only_difference(self):
        d1 = row_doc(gaps=[0.004, 0.004], texts=["same", "left", "right"])
        d2 = row_doc(gaps=[0.004, 0.004], texts=["same", "OTHER", "12:30"])
        build_contextual_lines(d1)
        build_contextual_lines(d2)
        c = cfg()
        v1 = encode_content(d1.words[0], d1.lines[0], d1.words_by_id(), c)
        v2 = encode_content(d2.words[0], d2.lines[0], d2.words_by_id(), c)
        own = c.content_dim - 12
        # renormalization rescales, so compare directions of the own block
        assert np.allclose(v1[:own] / np.linalg.norm(v1[:own]),
                           v2[:own] / np.linalg.norm(v2[:own]))
        assert not np.allclose(v1[own:], v2[own:])

    def test_wrong_line_raises(self):
        doc = row_doc(gaps=[0.02])
        build_contextual_lines(doc, threshold=0.1)
        if len(doc.lines) < 2:
            pytest.skip("expected split lines")
        with pytest.raises(ValueError):
            encode_content(doc.words[0], doc.lines[1], doc.words_by_id(), cfg())


class TestAssemble:
    def test_dims_default(self):
        doc = row_doc(gaps=[0.004])
        build_contextual_lines(doc)
        reps = assemble_representations(doc, cfg())
        assert all(r.z.shape == (32 + 64 + 4,) for r in reps)

    def test_external_features_dims(self):
        doc = row_doc(gaps=[0.004])
        doc.external_features = {w.id: tuple(float(i) for i in range(512)) for w in doc.words}
        build_contextual_lines(doc)
        reps = assemble_representations(doc, cfg())
        assert all(r.z.shape == (516,) for r in reps)
        # geometry still appended
        assert reps[0].z[-4:] == pytest.approx(list(doc.words[0].bbox.as_list()))

    def test_external_inconsistent_lengths(self):
        doc = row_doc(gaps=[0.004])
        doc.external_features = {0: (0.0, 1.0), 1: (0.0, 1.0, 2.0)}
        build_contextual_lines(doc)
        with pytest.raises(DocumentValidationError, match="inconsistent"):
            assemble_representations(doc, cfg())

    def test_zero_words(self):
        doc = make_doc([])
        assert assemble_representations(doc, cfg()) == []

    def test_geometry_is_tail(self):
        doc = row_doc(gaps=[0.004])
        build_contextual_lines(doc)
        reps = assemble_representations(doc, cfg())
        for r, w in zip(reps, doc.words):
            assert r.z[-4:] == pytest.approx(list(w.bbox.as_list()), rel=1e-12)

    def test_unit_norm_blocks(self):
        doc = row_doc(gaps=[0.004])
        doc.style_attrs = {w.id: StyleAttrs(1) for w in doc.words}
        build_contextual_lines(doc)
        c = cfg()
        reps = assemble_representations(doc, c)
        for r in reps:
            assert np.linalg.norm(r.z[:c.style_dim]) == pytest.approx(1.0)
            assert np.linalg.norm(r.z[c.style_dim:c.style_dim + c.content_dim]) == pytest.approx(1.0)

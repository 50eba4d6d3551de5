import pytest

from wordaff.clustering import ClusterAssignment
from wordaff.edits import (
    EditError,
    EditKind,
    EditLogEntry,
    EditSpec,
    apply_edit,
    render_svg,
    replay_log,
    shift_numeric_text,
    shift_time_text,
)
from wordaff.model import StyleAttrs, build_contextual_lines

from .conftest import make_doc, make_word, row_doc


def doc_and_assignment():
    doc = row_doc(gaps=[0.004, 0.03, 0.004],
                  texts=["Pasta", "$5.99", "12:30", "Roasted"])
    doc.style_attrs = {w.id: StyleAttrs(font_family_id=1, font_size=12.0)
                       for w in doc.words}
    build_contextual_lines(doc)
    assignment = ClusterAssignment(
        word_to_cluster={0: 0, 1: 0, 2: 1, 3: 1},
        clusters={0: [0, 1], 1: [2, 3]},
    )
    return doc, assignment


class TestTimeShift:
    @pytest.mark.parametrize("text,delta,expected", [
        ("12:30", 60, "13:30"),
        ("23:30", 60, "00:30"),
        ("00:10", -30, "23:40"),
        ("9:05", 60, "10:05"),
        ("11:45pm", 30, "12:15am"),
    ])
    def test_shift(self, text, delta, expected):
        assert shift_time_text(text, delta) == expected

    def test_non_time(self):
        assert shift_time_text("Pasta", 60) is None


class TestNumericShift:
    @pytest.mark.parametrize("text,delta,expected", [
        ("$5.99", "1", "$6.99"),
        ("$5.99", "0.5", "$6.49"),
        ("42", "-2", "40"),
        ("007", "1", "008"),
        ("9.25", "1.75", "11.00"),
    ])
    def test_shift(self, text, delta, expected):
        assert shift_numeric_text(text, delta) == expected

    def test_non_numeric(self):
        assert shift_numeric_text("Pasta", "1") is None


class TestApplyEdit:
    def test_time_shift_cluster(self):
        doc, assignment = doc_and_assignment()
        new_doc, entry = apply_edit(doc, assignment, 1,
                                    EditSpec(kind=EditKind.TIME_SHIFT, delta_minutes=60))
        texts = {w.id: w.text for w in new_doc.words}
        assert texts[2] == "13:30"
        assert texts[3] == "Roasted"  # skipped, not a time
        assert entry.affected_word_ids == [2]
        assert entry.skipped_word_ids == [3]

    def test_numeric_shift_skips_plain(self):
        doc, assignment = doc_and_assignment()
        new_doc, entry = apply_edit(doc, assignment, 0,
                                    EditSpec(kind=EditKind.NUMERIC_SHIFT, delta="1"))
        texts = {w.id: w.text for w in new_doc.words}
        assert texts[1] == "$6.99"
        assert texts[0] == "Pasta"
        assert entry.skipped_word_ids == [0]

    def test_unknown_cluster(self):
        doc, assignment = doc_and_assignment()
        with pytest.raises(EditError, match="cluster"):
            apply_edit(doc, assignment, 7, EditSpec(kind=EditKind.DELETE))

    def test_delete_removes_words_and_updates_lines(self):
        doc, assignment = doc_and_assignment()
        new_doc, entry = apply_edit(doc, assignment, 0, EditSpec(kind=EditKind.DELETE))
        assert {w.id for w in new_doc.words} == {2, 3}
        assert all(0 not in ln.word_ids and 1 not in ln.word_ids for ln in new_doc.lines)
        assert entry.affected_word_ids == [0, 1]

    def test_scope_untouched_words_identical(self):
        doc, assignment = doc_and_assignment()
        before = {w.id: (w.text, w.bbox.as_list(), doc.style_attrs[w.id].to_payload())
                  for w in doc.words}
        new_doc, _ = apply_edit(doc, assignment, 0,
                                EditSpec(kind=EditKind.SET_COLOR, color_rgb=(200, 0, 0)))
        for wid in (2, 3):
            w = new_doc.words_by_id()[wid]
            assert (w.text, w.bbox.as_list(),
                    new_doc.style_attrs[wid].to_payload()) == before[wid]

    def test_original_document_unchanged(self):
        doc, assignment = doc_and_assignment()
        apply_edit(doc, assignment, 0, EditSpec(kind=EditKind.DELETE))
        assert len(doc.words) == 4

    def test_style_edits(self):
        doc, assignment = doc_and_assignment()
        new_doc, _ = apply_edit(doc, assignment, 0,
                                EditSpec(kind=EditKind.SET_WEIGHT, flag=True))
        assert new_doc.style_attrs[0].bold and new_doc.style_attrs[1].bold
        new_doc, _ = apply_edit(new_doc, assignment, 0,
                                EditSpec(kind=EditKind.SCALE_FONT, factor=2.0))
        assert new_doc.style_attrs[0].font_size == pytest.approx(24.0)
        assert new_doc.words_by_id()[0].bbox.h == pytest.approx(0.1)

    def test_emphasize(self):
        doc, assignment = doc_and_assignment()
        new_doc, _ = apply_edit(doc, assignment, 1,
                                EditSpec(kind=EditKind.EMPHASIZE, intensity=0.8))
        assert new_doc.words_by_id()[2].emphasis == pytest.approx(0.8)

    def test_translate_clamped(self):
        doc, assignment = doc_and_assignment()
        new_doc, _ = apply_edit(doc, assignment, 0,
                                EditSpec(kind=EditKind.TRANSLATE, dx=5.0, dy=0.0))
        for wid in (0, 1):
            assert new_doc.words_by_id()[wid].bbox.x2 <= 1.0 + 1e-9

    def test_align_x_moves_whole_lines(self):
        doc, assignment = doc_and_assignment()
        new_doc, entry = apply_edit(doc, assignment, 0,
                                    EditSpec(kind=EditKind.ALIGN_X, target_x=0.2))
        by_id = new_doc.words_by_id()
        line0 = new_doc.lines[0]
        first = min((by_id[w] for w in line0.word_ids), key=lambda w: w.bbox.x)
        assert first.bbox.x == pytest.approx(0.2)

    def test_find_replace(self):
        doc, assignment = doc_and_assignment()
        new_doc, entry = apply_edit(
            doc, assignment, 0,
            EditSpec(kind=EditKind.FIND_REPLACE, pattern="Pasta", replacement="Pizza"))
        assert new_doc.words_by_id()[0].text == "Pizza"
        assert 1 in entry.skipped_word_ids


class TestClosure:
    @pytest.mark.parametrize("spec", [
        EditSpec(kind=EditKind.SET_COLOR, color_rgb=(1, 2, 3)),
        EditSpec(kind=EditKind.SCALE_FONT, factor=3.0),
        EditSpec(kind=EditKind.DELETE),
        EditSpec(kind=EditKind.TRANSLATE, dx=0.9, dy=-0.9),
        EditSpec(kind=EditKind.ALIGN_X, target_x=0.95),
        EditSpec(kind=EditKind.TIME_SHIFT, delta_minutes=90),
        EditSpec(kind=EditKind.NUMERIC_SHIFT, delta="100"),
    ])
    def test_edited_document_still_validates(self, spec):
        from wordaff.model import document_from_payload

        doc, assignment = doc_and_assignment()
        for cid in (0, 1):
            doc, _ = apply_edit(doc, assignment, cid, spec)
        revalidated = document_from_payload(doc.to_payload())
        assert len(revalidated.words) == len(doc.words)


class TestReplay:
    def test_replay_reproduces_document(self):
        doc, assignment = doc_and_assignment()
        d1, e1 = apply_edit(doc, assignment, 1,
                            EditSpec(kind=EditKind.TIME_SHIFT, delta_minutes=90))
        d2, e2 = apply_edit(d1, assignment, 0,
                            EditSpec(kind=EditKind.SET_COLOR, color_rgb=(0, 0, 200)))
        d3, e3 = apply_edit(d2, assignment, 0, EditSpec(kind=EditKind.DELETE))
        replayed = replay_log(doc, [e1, e2, e3])
        assert replayed.to_payload() == d3.to_payload()

    def test_log_entry_round_trip(self):
        entry = EditLogEntry(cluster_id=2,
                             spec=EditSpec(kind=EditKind.NUMERIC_SHIFT, delta="1.5"),
                             affected_word_ids=[1, 2], skipped_word_ids=[3])
        back = EditLogEntry.from_payload(entry.to_payload())
        assert back == entry


class TestSpecValidation:
    def test_requires_variant_fields(self):
        with pytest.raises(EditError):
            EditSpec(kind=EditKind.SET_COLOR)
        with pytest.raises(EditError):
            EditSpec(kind=EditKind.SCALE_FONT, factor=0.0)
        with pytest.raises(EditError):
            EditSpec(kind=EditKind.EMPHASIZE, intensity=1.5)

    def test_payload_round_trip(self):
        spec = EditSpec(kind=EditKind.TIME_SHIFT, delta_minutes=-30)
        assert EditSpec.from_payload(spec.to_payload()) == spec

    def test_unknown_field_rejected(self):
        with pytest.raises(EditError, match="unknown"):
            EditSpec.from_payload({"kind": "delete", "bogus": 1})


class TestRenderSvg:
    def test_empty_document(self):
        svg = render_svg(make_doc([]))
        assert svg.startswith("<svg") and "<text" not in svg

    def test_position_scaling(self):
        doc = make_doc([make_word(0, "word", 0.5, 0.5, 0.2, 0.05)])
        svg = render_svg(doc, page_px=(1000, 800))
        assert '<text x="500.00" y="400.00"' in svg

    def test_deterministic(self):
        doc, assignment = doc_and_assignment()
        assert render_svg(doc, assignment) == render_svg(doc, assignment)

    def test_cluster_rects_present(self):
        doc, assignment = doc_and_assignment()
        svg = render_svg(doc, assignment)
        assert svg.count("data-cluster=") == 4

    def test_text_escaped(self):
        doc = make_doc([make_word(0, "a<b&c", 0.1, 0.1, 0.2, 0.05)])
        svg = render_svg(doc)
        assert "a&lt;b&amp;c" in svg

    def test_bad_page_dims(self):
        with pytest.raises(ValueError):
            render_svg(make_doc([]), page_px=(0, 100))

import json

import pytest
from hypothesis import given, strategies as st

from seframe.model import (
    FrameElement,
    FrameInstance,
    MalformedCatalog,
    MalformedLexicon,
    Sentence,
    Source,
    Span,
    Status,
    Token,
    canonical_frame_name,
    lexicon_from_dict,
    lexicon_to_dict,
    load_catalog,
    load_lexicon,
    save_catalog,
    save_lexicon,
)

REMAP_FRAMES = {"Arriving", "Means", "Aggregate", "Request", "Leadership"}
INVALID_FRAMES = {
    "Statement", "Type", "Placing", "Being_named", "Purpose",
    "Roadways", "Contingency", "Connectors", "Text",
}


# --- spans and instances ----------------------------------------------------

def test_span_over_copies_substring():
    s = Span.over("call super.clone now", 5, 16)
    assert s.text == "super.clone"
    assert s.matches("call super.clone now")


@pytest.mark.parametrize("start,end", [(3, 3), (5, 2), (-1, 4)])
def test_span_rejects_bad_bounds(start, end):
    with pytest.raises(ValueError):
        Span(start, end, "x" * max(0, end - start))


def test_span_rejects_text_length_mismatch():
    with pytest.raises(ValueError):
        Span(0, 4, "abc")


@given(st.text(min_size=1, max_size=40), st.data())
def test_span_over_always_satisfies_invariants(text, data):
    start = data.draw(st.integers(0, len(text) - 1))
    end = data.draw(st.integers(start + 1, len(text)))
    span = Span.over(text, start, end)
    assert 0 <= span.start < span.end <= len(text)
    assert span.text == text[start:end]


def test_frame_element_requires_name():
    with pytest.raises(ValueError):
        FrameElement(name="", span=Span(0, 1, "x"))


def test_frame_instance_rejects_element_overlapping_target():
    target = Span(5, 8, "run")
    overlapping = FrameElement(name="Governed", span=Span(6, 12, "un a b"))
    with pytest.raises(ValueError):
        FrameInstance(
            frame="Leadership",
            target=target,
            elements=(overlapping,),
            source=Source.BASELINE,
            sentence_id="s",
        )


def test_sentence_rejects_overlapping_tokens():
    text = "ab cd"
    tokens = [
        Token(Span.over(text, 0, 2), "ab", "n"),
        Token(Span.over(text, 1, 4), "b c", "n"),
    ]
    with pytest.raises(ValueError):
        Sentence(id="s", doc_id="d", index=0, text=text, tokens=tokens)


@pytest.mark.parametrize(
    "raw,expected",
    [
        ("Sole Instance", "Sole_instance"),
        ("sole instance", "Sole_instance"),
        ("Being obligated", "Being_obligated"),
        ("Execution", "Execution"),
        ("  Point of Dispute ", "Point_of_dispute"),
    ],
)
def test_canonical_frame_name(raw, expected):
    assert canonical_frame_name(raw) == expected


# --- lexicon loading --------------------------------------------------------

def test_bundled_lexicon_has_using_frame(lexicon):
    using = lexicon.get("Using")
    assert "use.v" in using.lexical_units
    names = using.element_names()
    assert {"Instrument", "Purpose"} <= names


def test_empty_frames_list_is_a_valid_lexicon():
    lex = lexicon_from_dict({"frames": []})
    assert len(lex.frames) == 0


def test_pattern_referencing_undeclared_element_rejected():
    raw = {
        "frames": [
            {
                "name": "Using",
                "elements": [{"name": "Instrument", "core": True}],
                "lexical_units": ["use.v"],
                "patterns": [{"element": "Foo", "side": "right", "match": "NP"}],
            }
        ]
    }
    with pytest.raises(MalformedLexicon):
        lexicon_from_dict(raw)


def test_duplicate_frame_rejected():
    frame = {"name": "Using", "elements": [], "lexical_units": []}
    with pytest.raises(MalformedLexicon):
        lexicon_from_dict({"frames": [frame, frame]})


def test_bad_lexical_unit_form_rejected():
    raw = {"frames": [{"name": "Using", "elements": [], "lexical_units": ["use.verb"]}]}
    with pytest.raises(MalformedLexicon):
        lexicon_from_dict(raw)


def test_lexicon_round_trip(lexicon, tmp_path):
    path = tmp_path / "lexicon.json"
    save_lexicon(lexicon, path)
    again = load_lexicon(path)
    assert again == lexicon
    assert lexicon_to_dict(again) == lexicon_to_dict(lexicon)


# --- catalog loading --------------------------------------------------------

def test_bundled_catalog_statuses(catalog):
    assert catalog.status("Using") is Status.VALID
    assert catalog.status("Leadership") is Status.REMAP_EXECUTION
    assert catalog.status("Roadways") is Status.INVALID


def test_bundled_catalog_partition(catalog):
    assert len(catalog.frames_with(Status.VALID)) == 35
    assert set(catalog.frames_with(Status.REMAP_EXECUTION)) == REMAP_FRAMES
    assert set(catalog.frames_with(Status.INVALID)) == INVALID_FRAMES


def test_execution_verbs_contain_base_set(catalog):
    assert {"get", "return", "call", "request", "run", "process"} <= catalog.execution_verbs


def test_unlisted_frame_counts_as_valid(catalog):
    assert catalog.status("Success_or_failure") is Status.VALID
    assert catalog.status("Execution") is Status.VALID


def test_fe_map_defaults(catalog):
    assert catalog.execution_element_for("Leadership", "Governed") == "Target"
    assert catalog.execution_element_for("Arriving", "Goal") == "Target"
    assert catalog.execution_element_for("AnyFrame", "Agent") == "Executor"
    assert catalog.execution_element_for("Using", "Instrument") is None


def test_catalog_duplicate_frame_rejected(tmp_path, lexicon):
    path = tmp_path / "catalog.tsv"
    path.write_text("Using\tvalid\nUsing\tinvalid\n")
    with pytest.raises(MalformedCatalog):
        load_catalog(path, lexicon)


def test_catalog_unknown_status_token_rejected(tmp_path, lexicon):
    path = tmp_path / "catalog.tsv"
    path.write_text("Using\tmaybe\n")
    with pytest.raises(MalformedCatalog):
        load_catalog(path, lexicon)


def test_catalog_unknown_frame_rejected(tmp_path, lexicon):
    path = tmp_path / "catalog.tsv"
    path.write_text("Nonesuch\tvalid\n")
    with pytest.raises(MalformedCatalog):
        load_catalog(path, lexicon)


def test_catalog_round_trip(catalog, lexicon, tmp_path):
    path = tmp_path / "catalog.tsv"
    save_catalog(catalog, path)
    again = load_catalog(path, lexicon)
    assert again.statuses == catalog.statuses
    assert again.execution_verbs == catalog.execution_verbs
    assert again.fe_map == catalog.fe_map


def test_bad_fe_map_target_rejected(tmp_path, lexicon):
    (tmp_path / "catalog.tsv").write_text("Using\tvalid\n")
    (tmp_path / "fe_map.tsv").write_text("Using\tInstrument\tGadget\n")
    with pytest.raises(MalformedCatalog):
        load_catalog(tmp_path / "catalog.tsv", lexicon)

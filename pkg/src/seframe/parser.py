"""Lexicon-driven frame tagging and the adapter for external parser output.

The baseline tagger is a deterministic lexical-unit lookup: a token evokes a
frame when its lemma.pos matches one of the frame's lexical units. Frame
elements are then realized by the per-frame patterns declared in the
lexicon. Output from statistical parsers arrives through the newline-
delimited interchange format instead and is revalidated on import.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .model import (
    EXECUTION_FRAME,
    FrameElement,
    FrameInstance,
    FrameLexicon,
    Sentence,
    Source,
    Span,
)
from .textproc import make_sentence


class MalformedRecord(ValueError):
    """An interchange record is structurally invalid."""


@dataclass(frozen=True)
class ParseResult:
    """A sentence plus the frames evoked in it, sorted by target position."""

    sentence: Sentence
    frames: tuple[FrameInstance, ...]

    def __post_init__(self):
        ordered = tuple(
            sorted(self.frames, key=lambda fi: (fi.target.start, fi.frame))
        )
        object.__setattr__(self, "frames", ordered)
        for fi in ordered:
            if fi.sentence_id != self.sentence.id:
                raise ValueError(
                    f"frame {fi.frame} references sentence {fi.sentence_id!r}, "
                    f"not {self.sentence.id!r}"
                )
            if not fi.target.matches(self.sentence.text):
                raise ValueError(f"target span of {fi.frame} does not match text")
            for fe in fi.elements:
                if not fe.span.matches(self.sentence.text):
                    raise ValueError(
                        f"element {fe.name} span of {fi.frame} does not match text"
                    )


# --------------------------------------------------------------------------
# baseline tagger

# token tags an NP-like chunk may contain
CHUNK_TAGS = frozenset({"det", "a", "n", "num", "pron"})
CLAUSE_BREAK_WORDS = frozenset({"and", "or", "but"})
CLAUSE_BREAK_PUNCT = frozenset({".", ",", ";", ":", "!", "?"})


def _is_clause_break(token) -> bool:
    if token.pos == "punct" and token.span.text in CLAUSE_BREAK_PUNCT:
        return True
    return token.lemma in CLAUSE_BREAK_WORDS


def _lu_index(lexicon: FrameLexicon):
    """lemma of first LU word -> list of (lu word lemmas, pos, frame, rank)."""
    index: dict[str, list] = {}
    for rank, (frame, entry) in enumerate(lexicon.frames.items()):
        for lu in entry.lexical_units:
            lemma, _, pos = lu.rpartition(".")
            words = lemma.split(" ")
            index.setdefault(words[0], []).append((words, pos, frame, rank))
    return index


def tag_frames(sentence: Sentence, lexicon: FrameLexicon) -> ParseResult:
    """Emit one frame instance per token whose lemma.pos is a lexical unit.

    When several frames share a lexical unit the one declared first in the
    lexicon wins; exact ties fall back to alphabetical order. Multi-word
    lexical units match consecutive tokens and consume them.
    """
    index = _lu_index(lexicon)
    instances = []
    tokens = sentence.tokens
    i = 0
    while i < len(tokens):
        token = tokens[i]
        candidates = []
        for words, pos, frame, rank in index.get(token.lemma, ()):
            if pos != token.pos:
                continue
            span_tokens = tokens[i : i + len(words)]
            if len(span_tokens) < len(words):
                continue
            if [t.lemma for t in span_tokens] != list(words):
                continue
            candidates.append((rank, frame, len(words)))
        if not candidates:
            i += 1
            continue
        # longest match first, then declaration order, then name
        candidates.sort(key=lambda c: (-c[2], c[0], c[1]))
        _, frame, width = candidates[0]
        target = Span.over(
            sentence.text, tokens[i].span.start, tokens[i + width - 1].span.end
        )
        instance = FrameInstance(
            frame=frame,
            target=target,
            elements=(),
            source=Source.BASELINE,
            sentence_id=sentence.id,
        )
        instances.append(assign_frame_elements(instance, sentence, lexicon))
        i += width
    return ParseResult(sentence=sentence, frames=tuple(instances))


def assign_frame_elements(
    instance: FrameInstance, sentence: Sentence, lexicon: FrameLexicon
) -> FrameInstance:
    """Realize the frame's elements by applying its patterns around the target.

    Patterns on each side are tried in declaration order against a cursor
    that starts at the target and moves outward, so realized spans never
    overlap each other or the target. Patterns that fail are skipped and
    their element omitted.
    """
    entry = lexicon.get(instance.frame)
    if entry is None or not entry.patterns:
        return instance

    tokens = sentence.tokens
    target_first = next(
        (k for k, t in enumerate(tokens) if t.span.end > instance.target.start), 0
    )
    target_last = max(
        (k for k, t in enumerate(tokens) if t.span.start < instance.target.end),
        default=target_first,
    )

    elements = []
    left_cursor = target_first - 1  # rightmost unconsumed token on the left
    right_cursor = target_last + 1  # leftmost unconsumed token on the right

    for pattern in entry.patterns:
        matched = None
        if pattern.side == "left":
            matched, left_cursor = _match_left(pattern, tokens, left_cursor)
        else:
            matched, right_cursor = _match_right(pattern, tokens, right_cursor)
        if matched is not None:
            first, last = matched
            span = Span.over(sentence.text, tokens[first].span.start, tokens[last].span.end)
            elements.append(
                FrameElement(
                    name=pattern.element, span=span, core=entry.is_core(pattern.element)
                )
            )

    return FrameInstance(
        frame=instance.frame,
        target=instance.target,
        elements=tuple(elements),
        source=instance.source,
        sentence_id=instance.sentence_id,
    )


def _match_left(pattern, tokens, cursor):
    """Match against tokens ending at `cursor`, scanning leftward."""
    if cursor < 0:
        return None, cursor
    if pattern.match == "NP":
        # the chunk must sit immediately left of the target
        end = cursor
        if tokens[end].pos not in CHUNK_TAGS:
            return None, cursor
        start = end
        while start - 1 >= 0 and tokens[start - 1].pos in CHUNK_TAGS:
            start -= 1
        return (start, end), start - 1
    if pattern.match == "<clause>":
        # the remainder of the left side, back to the latest clause break
        end = cursor
        while end >= 0 and tokens[end].pos == "punct":
            end -= 1
        if end < 0:
            return None, cursor
        start = end
        while start - 1 >= 0 and not _is_clause_break(tokens[start - 1]):
            start -= 1
        return (start, end), start - 1
    # "<word> <clause>" reads inward on the left: not needed by any bundled
    # frame, treated as no match
    return None, cursor


def _match_right(pattern, tokens, cursor):
    """Match against tokens starting at `cursor`, scanning rightward."""
    if cursor >= len(tokens):
        return None, cursor
    if pattern.match == "NP":
        start = cursor
        if tokens[start].pos not in CHUNK_TAGS:
            return None, cursor
        end = start
        while end + 1 < len(tokens) and tokens[end + 1].pos in CHUNK_TAGS:
            end += 1
        return (start, end), end + 1
    if pattern.match == "<clause>":
        start = cursor
        if _is_clause_break(tokens[start]) or tokens[start].pos == "punct":
            return None, cursor
        end = start
        while end + 1 < len(tokens) and not _is_clause_break(tokens[end + 1]):
            end += 1
        return (start, end), end + 1
    word = pattern.match.split(" ")[0]
    if tokens[cursor].span.text.lower() != word:
        return None, cursor
    if cursor + 1 >= len(tokens) or _is_clause_break(tokens[cursor + 1]):
        return None, cursor
    end = cursor + 1
    while end + 1 < len(tokens) and not _is_clause_break(tokens[end + 1]):
        end += 1
    return (cursor, end), end + 1


# --------------------------------------------------------------------------
# interchange format

def parse_result_to_dict(result: ParseResult) -> dict:
    return {
        "sentence": {
            "id": result.sentence.id,
            "doc": result.sentence.doc_id,
            "index": result.sentence.index,
            "text": result.sentence.text,
        },
        "frames": [
            {
                "frame": fi.frame,
                "target": {
                    "start": fi.target.start,
                    "end": fi.target.end,
                    "text": fi.target.text,
                },
                "elements": [
                    {
                        "name": fe.name,
                        "start": fe.span.start,
                        "end": fe.span.end,
                        "text": fe.span.text,
                        "core": fe.core,
                    }
                    for fe in fi.elements
                ],
                "source": fi.source.value,
            }
            for fi in result.frames
        ],
    }


_RECORD_KEYS = {"sentence", "frames"}
_SENTENCE_KEYS = {"id", "doc", "index", "text"}
_FRAME_KEYS = {"frame", "target", "elements", "source"}
_SPAN_KEYS = {"start", "end", "text"}


def _span_from(obj: dict, text: str, where: str) -> Span:
    try:
        start, end = int(obj["start"]), int(obj["end"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecord(f"{where}: bad span fields") from exc
    if not (0 <= start < end <= len(text)):
        raise MalformedRecord(f"{where}: span [{start}, {end}) out of bounds")
    span = Span.over(text, start, end)
    if "text" in obj and obj["text"] != span.text:
        raise MalformedRecord(
            f"{where}: span text {obj['text']!r} does not match sentence"
        )
    return span


def parse_result_from_dict(
    record: dict, lexicon: FrameLexicon | None = None, strict: bool = False
) -> ParseResult:
    """Build a validated ParseResult from one interchange record."""
    if not isinstance(record, dict) or "sentence" not in record:
        raise MalformedRecord("record must be an object with a 'sentence' field")
    if strict:
        for key in record:
            if key not in _RECORD_KEYS:
                raise MalformedRecord(f"unknown record field {key!r}")
        for key in record["sentence"]:
            if key not in _SENTENCE_KEYS:
                raise MalformedRecord(f"unknown sentence field {key!r}")
    sent_obj = record["sentence"]
    text = sent_obj.get("text")
    if not isinstance(text, str):
        raise MalformedRecord("sentence text must be a string")
    sentence = make_sentence(
        text,
        str(sent_obj.get("id", "s0")),
        doc_id=str(sent_obj.get("doc", "")),
        index=int(sent_obj.get("index", 0)),
    )
    frames = []
    for i, frame_obj in enumerate(record.get("frames", [])):
        where = f"frame[{i}]"
        if strict:
            for key in frame_obj:
                if key not in _FRAME_KEYS:
                    raise MalformedRecord(f"{where}: unknown field {key!r}")
        name = frame_obj.get("frame", "")
        if lexicon is not None and name != EXECUTION_FRAME and name not in lexicon:
            raise MalformedRecord(f"{where}: unknown frame {name!r}")
        target = _span_from(frame_obj.get("target", {}), text, f"{where}.target")
        elements = []
        for j, el_obj in enumerate(frame_obj.get("elements", [])):
            el_where = f"{where}.element[{j}]"
            if strict:
                for key in el_obj:
                    if key not in {"name", "start", "end", "text", "core"}:
                        raise MalformedRecord(f"{el_where}: unknown field {key!r}")
            el_name = el_obj.get("name", "")
            if lexicon is not None and not lexicon.accepts_element(name, el_name):
                raise MalformedRecord(
                    f"{el_where}: element {el_name!r} not declared for {name}"
                )
            span = _span_from(el_obj, text, el_where)
            if "core" in el_obj:
                core = bool(el_obj["core"])
            else:
                entry = lexicon.get(name) if lexicon is not None else None
                core = entry.is_core(el_name) if entry else False
            elements.append(FrameElement(name=el_name, span=span, core=core))
        try:
            frames.append(
                FrameInstance(
                    frame=name,
                    target=target,
                    elements=tuple(elements),
                    source=frame_obj.get("source", Source.EXTERNAL),
                    sentence_id=sentence.id,
                )
            )
        except ValueError as exc:
            raise MalformedRecord(f"{where}: {exc}") from exc
    try:
        return ParseResult(sentence=sentence, frames=tuple(frames))
    except ValueError as exc:
        raise MalformedRecord(str(exc)) from exc


def import_external(
    records, lexicon: FrameLexicon | None = None, strict: bool = False
) -> list[ParseResult]:
    """Validate a stream of interchange records, preserving order."""
    return [parse_result_from_dict(r, lexicon=lexicon, strict=strict) for r in records]


def read_interchange(path, lexicon: FrameLexicon | None = None, strict: bool = False):
    """Iterate ParseResults from a newline-delimited interchange file."""
    with open(Path(path), encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"{path}:{lineno}: not valid JSON") from exc
            yield parse_result_from_dict(record, lexicon=lexicon, strict=strict)


def write_interchange(results, path) -> None:
    with open(Path(path), "w", encoding="utf-8") as handle:
        for result in results:
            handle.write(json.dumps(parse_result_to_dict(result)) + "\n")

"""Frame tailoring for software-engineering text.

Two rewrite rules run over parsed frames: instances whose catalog status is
invalid are discarded, and instances evoked by an execution verb are moved
to the Execution frame with their elements renamed accordingly. Everything
else passes through bit-identical. The module also renders the structured
row view of a sentence used to present a frame as labelled segments.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    EXECUTION_FRAME,
    ORIG_PREFIX,
    FrameElement,
    FrameInstance,
    Source,
    Span,
    Status,
    TailoringCatalog,
)
from .parser import ParseResult


class IndexOutOfRange(IndexError):
    """Requested frame index does not exist in the parse result."""


def _target_verb_lemma(result: ParseResult, instance: FrameInstance) -> str | None:
    """The target's lemma when the target is a single verb token, else None."""
    covering = [
        t
        for t in result.sentence.tokens
        if t.span.start < instance.target.end and instance.target.start < t.span.end
    ]
    if len(covering) == 1 and covering[0].pos == "v":
        return covering[0].lemma
    return None


def _remap_to_execution(
    instance: FrameInstance, catalog: TailoringCatalog
) -> FrameInstance:
    elements = []
    for fe in instance.elements:
        new_name = catalog.execution_element_for(instance.frame, fe.name)
        if new_name is None:
            new_name = ORIG_PREFIX + fe.name
            core = False
        else:
            core = new_name in ("Executor", "Target")
        elements.append(FrameElement(name=new_name, span=fe.span, core=core))
    return FrameInstance(
        frame=EXECUTION_FRAME,
        target=instance.target,
        elements=tuple(elements),
        source=Source.DECORATED,
        sentence_id=instance.sentence_id,
    )


def decorate(result: ParseResult, catalog: TailoringCatalog) -> ParseResult:
    """Apply the tailoring rules to every frame of a parse result.

    Per instance: drop it when its status is invalid; remap it to Execution
    when its target is an execution verb (restricted to catalog-listed
    frames when `remap_requires_listed_frame` is set); otherwise keep it
    unchanged. Execution instances are already a fixed point. Sentence
    text and spans are never altered, and order is preserved.
    """
    kept = []
    for instance in result.frames:
        if instance.frame == EXECUTION_FRAME:
            kept.append(instance)
            continue
        status = catalog.status(instance.frame)
        if status is Status.INVALID:
            continue
        verb = _target_verb_lemma(result, instance)
        remappable = verb is not None and verb in catalog.execution_verbs
        if remappable and catalog.remap_requires_listed_frame:
            remappable = status is Status.REMAP_EXECUTION
        if remappable:
            kept.append(_remap_to_execution(instance, catalog))
        else:
            kept.append(instance)
    return ParseResult(sentence=result.sentence, frames=tuple(kept))


@dataclass(frozen=True)
class StructuredRow:
    """One segment of the sentence; `label` is a frame name, "fe:<name>",
    or None for connective text. `text` is the raw segment including any
    trailing whitespace, so joining rows reconstructs the sentence."""

    label: str | None
    text: str

    @property
    def display_text(self) -> str:
        return self.text.strip()


@dataclass(frozen=True)
class StructuredView:
    rows: tuple[StructuredRow, ...]

    def reconstructed(self) -> str:
        return "".join(row.text for row in self.rows)

    def labelled(self) -> list[tuple[str | None, str]]:
        return [(row.label, row.display_text) for row in self.rows]

    def as_text(self) -> str:
        width = max((len(row.label or "") for row in self.rows), default=0)
        return "\n".join(
            f"{(row.label or ''):>{width}}  {row.display_text}" for row in self.rows
        )

    def to_json_rows(self) -> list[dict]:
        return [{"label": row.label, "text": row.display_text} for row in self.rows]


def structure(result: ParseResult, frame_index: int | None = None) -> StructuredView:
    """Render the sentence as labelled rows in sentence order.

    With `frame_index` the view covers just that frame (raising
    IndexOutOfRange when it does not exist); without it, all frames are
    laid out together and spans that would collide with an earlier one are
    left unlabelled.
    """
    if frame_index is None:
        selected = list(result.frames)
    else:
        if not (0 <= frame_index < len(result.frames)):
            raise IndexOutOfRange(
                f"frame index {frame_index} out of range for "
                f"{len(result.frames)} frames"
            )
        selected = [result.frames[frame_index]]

    spans: list[tuple[Span, str]] = []
    for instance in selected:
        spans.append((instance.target, instance.frame))
        for fe in instance.elements:
            spans.append((fe.span, f"fe:{fe.name}"))
    spans.sort(key=lambda pair: (pair[0].start, pair[0].end))

    placed: list[tuple[Span, str]] = []
    last_end = 0
    for span, label in spans:
        if span.start < last_end:
            continue
        placed.append((span, label))
        last_end = span.end

    text = result.sentence.text
    rows = []
    cursor = 0
    for span, label in placed:
        if span.start > cursor and text[cursor : span.start].strip():
            rows.append(StructuredRow(None, text[cursor : span.start]))
            cursor = span.start
        # attach whitespace up to the next labelled span to this row
        segment_start = cursor
        cursor = span.end
        rows.append(StructuredRow(label, text[segment_start:cursor]))
    if cursor < len(text):
        rows.append(StructuredRow(None, text[cursor:]))

    # fold pure-whitespace gaps into the preceding row
    folded: list[StructuredRow] = []
    for row in rows:
        if row.label is None and not row.text.strip() and folded:
            prev = folded.pop()
            folded.append(StructuredRow(prev.label, prev.text + row.text))
        else:
            folded.append(row)
    if not folded:
        folded = [StructuredRow(None, text)] if text else []
    return StructuredView(rows=tuple(folded))

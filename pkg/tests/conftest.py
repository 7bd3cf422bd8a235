import json
from pathlib import Path

import pytest

from seframe.model import (
    Document,
    FrameElement,
    FrameInstance,
    Source,
    Span,
    load_bundled_catalog,
    load_bundled_lexicon,
)
from seframe.parser import ParseResult, tag_frames
from seframe.textproc import make_sentence, segment

FIXTURES = Path(__file__).parent / "fixtures"

FRAME_POOL = [
    "Using", "Causation", "Leadership", "Arriving", "Request", "Means",
    "Aggregate", "Roadways", "Connectors", "Type", "Statement", "Possession",
    "Scrutiny", "Awareness", "Execution", "Success_or_failure", "Grasp",
]
WORD_POOL = [
    "we", "run", "get", "call", "the", "parser", "tool", "fails", "use",
    "config", "request", "process", "it", "string", "line", "quickly",
    "checks", "returns", "now", "value",
]


def random_parse_result(rng, lexicon):
    """A ParseResult with random frames over a random word-pool sentence."""
    n = rng.randint(3, 10)
    text = " ".join(rng.choice(WORD_POOL) for _ in range(n))
    sentence = make_sentence(text, "s1", "d1", 0)
    tokens = sentence.tokens
    frames = []
    order = list(range(len(tokens)))
    rng.shuffle(order)
    used = order[: rng.randint(0, min(3, len(tokens)))]
    for idx in sorted(used):
        target = tokens[idx].span
        frame = rng.choice(FRAME_POOL)
        elements = []
        if idx + 1 < len(tokens) and rng.random() < 0.7:
            entry = lexicon.get(frame)
            fe_names = sorted(entry.element_names()) or ["orig:Thing"]
            elements.append(
                FrameElement(
                    name=rng.choice(fe_names),
                    span=Span.over(text, tokens[idx + 1].span.start, len(text)),
                )
            )
        frames.append(
            FrameInstance(
                frame=frame,
                target=target,
                elements=tuple(elements),
                source=Source.EXTERNAL,
                sentence_id="s1",
            )
        )
    return ParseResult(sentence=sentence, frames=tuple(frames))


@pytest.fixture(scope="session")
def lexicon():
    return load_bundled_lexicon()


@pytest.fixture(scope="session")
def catalog(lexicon):
    return load_bundled_catalog(lexicon)


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def corpus_docs():
    docs = []
    for line in (FIXTURES / "corpus.jsonl").read_text().splitlines():
        rec = json.loads(line)
        docs.append(
            Document(id=rec["id"], source_kind=rec["source_kind"], raw_text=rec["text"])
        )
    return docs


@pytest.fixture(scope="session")
def corpus_parses(corpus_docs, lexicon):
    return [
        tag_frames(sentence, lexicon)
        for doc in corpus_docs
        for sentence in segment(doc)
    ]

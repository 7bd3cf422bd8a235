"""Turn heterogeneous software-artifact exports into documents.

Everything reads local files: generic JSONL corpora, JSONL exports of pull
requests / issues / reviews / vulnerability reports (``body`` or
``description`` field), mbox mail archives, and CSV app reviews. Mailing
list text loses quoted reply blocks, pull-request comments shorter than the
minimum length are dropped, and HTML is reduced to text with code blocks
kept fenced so segmentation can protect them.
"""

from __future__ import annotations

import csv
import json
import mailbox
import re
from dataclasses import dataclass
from html.parser import HTMLParser
from pathlib import Path

from .model import Document, SourceKind


class UnreadableSource(OSError):
    """The input file cannot be read or decoded."""


class UnknownSourceKind(ValueError):
    """The source descriptor names no known artifact kind."""


# kinds whose artifact units are short comments; these get the length filter
DEFAULT_MIN_LENGTH = {SourceKind.PULL_REQUEST: 50}

_QUOTE_LINE_RE = re.compile(r"^\s*>")
_ATTRIBUTION_RE = re.compile(r"^\s*On\b.*\bwrote:\s*$")


def strip_quotes(email_body: str) -> str:
    """Drop quoted reply lines (leading ``>``) and "On ... wrote:"
    attribution lines, keeping everything else in order."""
    kept = [
        line
        for line in email_body.splitlines()
        if not _QUOTE_LINE_RE.match(line) and not _ATTRIBUTION_RE.match(line)
    ]
    return "\n".join(kept)


def filter_min_length(docs: list[Document], n: int) -> list[Document]:
    """Keep documents whose trimmed text has at least `n` characters."""
    if n < 0:
        raise ValueError("minimum length must be >= 0")
    return [doc for doc in docs if len(doc.raw_text.strip()) >= n]


class _HtmlToText(HTMLParser):
    """Reduce HTML to text; <pre>/<code> contents come out fenced."""

    def __init__(self, drop_code: bool = False):
        super().__init__(convert_charrefs=True)
        self.drop_code = drop_code
        self.parts: list[str] = []
        self.code_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in ("pre", "code"):
            if self.code_depth == 0 and not self.drop_code:
                self.parts.append("\n```\n")
            self.code_depth += 1
        elif tag in ("p", "br", "div", "li", "tr"):
            self.parts.append("\n")

    def handle_endtag(self, tag):
        if tag in ("pre", "code"):
            self.code_depth = max(0, self.code_depth - 1)
            if self.code_depth == 0 and not self.drop_code:
                self.parts.append("\n```\n")
        elif tag in ("p", "div"):
            self.parts.append("\n")

    def handle_data(self, data):
        if self.code_depth > 0 and self.drop_code:
            return
        self.parts.append(data)


def html_to_text(markup: str, drop_code: bool = False) -> str:
    parser = _HtmlToText(drop_code=drop_code)
    parser.feed(markup)
    text = "".join(parser.parts)
    return re.sub(r"\n{3,}", "\n\n", text).strip()


@dataclass(frozen=True)
class SourceConfig:
    """Descriptor of one input source."""

    kind: SourceKind
    path: str
    min_length: int | None = None  # None picks the kind's default
    drop_code: bool = False

    def effective_min_length(self) -> int:
        if self.min_length is not None:
            return self.min_length
        return DEFAULT_MIN_LENGTH.get(self.kind, 0)


_TEXT_FIELDS = ("text", "body", "description")


def _record_text(record: dict) -> str | None:
    for field in _TEXT_FIELDS:
        value = record.get(field)
        if isinstance(value, str):
            return value
    return None


def _read_jsonl(config: SourceConfig) -> list[Document]:
    docs = []
    path = Path(config.path)
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise UnreadableSource(f"{path}:{lineno}: not valid JSON") from exc
        text = _record_text(record)
        if text is None:
            raise UnreadableSource(f"{path}:{lineno}: no text/body/description field")
        if "<" in text and (">" in text) and re.search(r"<\w+[^>]*>", text):
            text = html_to_text(text, drop_code=config.drop_code)
        kind = SourceKind(record.get("source_kind", config.kind))
        doc_id = str(record.get("id", f"{kind.value}-{lineno}"))
        metadata = {str(k): str(v) for k, v in record.get("metadata", {}).items()}
        metadata.setdefault("origin", f"{path.name}:{lineno}")
        docs.append(Document(id=doc_id, source_kind=kind, raw_text=text, metadata=metadata))
    return docs


def _read_mbox(config: SourceConfig) -> list[Document]:
    docs = []
    box = mailbox.mbox(config.path)
    try:
        for i, message in enumerate(box):
            payload = message.get_payload(decode=True)
            if payload is None:
                body = str(message.get_payload())
            else:
                body = payload.decode("utf-8", errors="replace")
            text = strip_quotes(body).strip()
            message_id = message.get("Message-ID", f"<msg-{i}>").strip("<> \t")
            docs.append(
                Document(
                    id=f"{Path(config.path).stem}-{i}",
                    source_kind=SourceKind.MAILING_LIST,
                    raw_text=text,
                    metadata={
                        "message_id": message_id,
                        "subject": str(message.get("Subject", "")),
                    },
                )
            )
    finally:
        box.close()
    return docs


def _read_csv_reviews(config: SourceConfig) -> list[Document]:
    docs = []
    with open(config.path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or "text" not in reader.fieldnames:
            raise UnreadableSource(f"{config.path}: missing CSV header with 'text'")
        for i, row in enumerate(reader):
            docs.append(
                Document(
                    id=str(row.get("id") or f"review-{i}"),
                    source_kind=SourceKind.APP_REVIEW,
                    raw_text=row["text"],
                    metadata={
                        "app": str(row.get("app", "")),
                        "rating": str(row.get("rating", "")),
                    },
                )
            )
    return docs


def ingest(config: SourceConfig) -> list[Document]:
    """Read one source into documents, applying the per-kind filters."""
    if not isinstance(config.kind, SourceKind):
        try:
            config = SourceConfig(
                kind=SourceKind(config.kind),
                path=config.path,
                min_length=config.min_length,
                drop_code=config.drop_code,
            )
        except ValueError as exc:
            raise UnknownSourceKind(str(config.kind)) from exc
    path = Path(config.path)
    if not path.exists():
        raise UnreadableSource(f"no such file: {path}")

    suffix = path.suffix.lower()
    try:
        if config.kind is SourceKind.MAILING_LIST or suffix == ".mbox":
            docs = _read_mbox(config)
        elif config.kind is SourceKind.APP_REVIEW and suffix == ".csv":
            docs = _read_csv_reviews(config)
        else:
            docs = _read_jsonl(config)
    except UnicodeDecodeError as exc:
        raise UnreadableSource(f"{path}: {exc}") from exc

    return filter_min_length(docs, config.effective_min_length())

"""Core domain types shared by every pipeline stage.

Spans are character-based half-open intervals over the sentence text, which
keeps them robust to software tokens such as ``super.clone`` that token
indices would mangle. Every value here is immutable after construction and
safe to share across concurrent workers.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

EXECUTION_FRAME = "Execution"

# FE names the Execution frame accepts: Executor and Target are core,
# Purpose is peripheral.
EXECUTION_ELEMENTS = (("Executor", True), ("Target", True), ("Purpose", False))

# Verbs that always evoke Execution in software text, regardless of any
# extras a deployment configures on top.
BASE_EXECUTION_VERBS = frozenset({"get", "return", "call", "request", "run", "process"})

ORIG_PREFIX = "orig:"

_LU_RE = re.compile(r"^(?P<lemma>[^.]+(?:\.[^.]+)*)\.(?P<pos>v|n|a|adv|prep)$")
_PATTERN_RE = re.compile(r"^(NP|<clause>|[a-z]+ <clause>)$")


class MalformedLexicon(ValueError):
    """Lexicon file violates its schema or internal invariants."""


class MalformedCatalog(ValueError):
    """Catalog file has an unknown status token, duplicate or unknown frame."""


def canonical_frame_name(name: str) -> str:
    """Normalize a frame name: spaces to underscores, first letter upper,
    rest lower ("Sole Instance" and "sole instance" both map to
    "Sole_instance")."""
    name = "_".join(name.strip().split())
    if not name:
        return name
    return name[0].upper() + name[1:].lower()


def canonical_element_name(name: str) -> str:
    """Frame-element names keep their casing but use underscores for spaces."""
    return "_".join(name.strip().split())


@dataclass(frozen=True)
class Span:
    """Half-open character interval [start, end) plus a copy of the text."""

    start: int
    end: int
    text: str

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad span bounds [{self.start}, {self.end})")
        if len(self.text) != self.end - self.start:
            raise ValueError(
                f"span text {self.text!r} does not fit bounds [{self.start}, {self.end})"
            )

    @classmethod
    def over(cls, text: str, start: int, end: int) -> "Span":
        """Build a span over `text`, copying the covered substring."""
        if end > len(text):
            raise ValueError(f"span end {end} beyond text length {len(text)}")
        return cls(start, end, text[start:end])

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end

    def matches(self, text: str) -> bool:
        """True when this span is in bounds for `text` and copies it exactly."""
        return self.end <= len(text) and text[self.start : self.end] == self.text


@dataclass(frozen=True)
class FrameElement:
    """One realized argument of a frame: a labelled span."""

    name: str
    span: Span
    core: bool = False

    def __post_init__(self):
        if not self.name:
            raise ValueError("frame element name must be non-empty")


class Source(str, Enum):
    BASELINE = "baseline"
    EXTERNAL = "external"
    DECORATED = "decorated"


@dataclass(frozen=True)
class FrameInstance:
    """One evoked frame in a sentence: the evoking target span plus its
    frame elements. Element spans never overlap the target."""

    frame: str
    target: Span
    elements: tuple[FrameElement, ...]
    source: Source
    sentence_id: str

    def __post_init__(self):
        if not self.frame:
            raise ValueError("frame name must be non-empty")
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "source", Source(self.source))
        for fe in self.elements:
            if fe.span.overlaps(self.target):
                raise ValueError(
                    f"element {fe.name} span overlaps the target of {self.frame}"
                )

    def element_names(self) -> tuple[str, ...]:
        return tuple(fe.name for fe in self.elements)


@dataclass(frozen=True)
class Token:
    span: Span
    lemma: str
    pos: str


@dataclass(frozen=True)
class Sentence:
    """A tokenized sentence; token spans index into `text`."""

    id: str
    doc_id: str
    index: int
    text: str
    tokens: tuple[Token, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        prev_end = 0
        for tok in self.tokens:
            if tok.span.start < prev_end:
                raise ValueError("tokens out of order or overlapping")
            if not tok.span.matches(self.text):
                raise ValueError(f"token span {tok.span} does not match sentence text")
            prev_end = tok.span.end


class SourceKind(str, Enum):
    ISSUE = "issue"
    QA_POST = "qa_post"
    BUG_REPORT = "bug_report"
    API_DOC = "api_doc"
    PULL_REQUEST = "pull_request"
    VULNERABILITY_REPORT = "vulnerability_report"
    MAILING_LIST = "mailing_list"
    APP_REVIEW = "app_review"
    GENERIC = "generic"


@dataclass(frozen=True)
class Document:
    id: str
    source_kind: SourceKind
    raw_text: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "source_kind", SourceKind(self.source_kind))


@dataclass(frozen=True)
class FePattern:
    """One FE realization rule: look `side` of the target for `match`.

    `match` is one of:
      NP            longest chunk of determiner/adjective/noun/number tokens
      <clause>      the remainder of that side, up to a clause break
      <word> <clause>  a literal word followed by a clause (e.g. "to <clause>")
    """

    element: str
    side: str
    match: str

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError(f"pattern side must be left or right, got {self.side!r}")
        if not _PATTERN_RE.match(self.match):
            raise ValueError(f"unsupported pattern expression {self.match!r}")


@dataclass(frozen=True)
class FrameDef:
    """A frame's definition, element inventory, lexical units, and FE
    realization patterns."""

    name: str
    definition: str = ""
    elements: tuple[tuple[str, bool], ...] = ()
    lexical_units: tuple[str, ...] = ()
    patterns: tuple[FePattern, ...] = ()

    def element_names(self) -> set[str]:
        return {name for name, _ in self.elements}

    def is_core(self, element: str) -> bool:
        return any(name == element and core for name, core in self.elements)


@dataclass(frozen=True)
class FrameLexicon:
    """Frame definitions keyed by name; declaration order is the priority
    order used to disambiguate lexical units shared by several frames."""

    frames: dict

    def __contains__(self, frame: str) -> bool:
        return frame in self.frames

    def get(self, frame: str) -> FrameDef | None:
        entry = self.frames.get(frame)
        if entry is None and frame == EXECUTION_FRAME:
            return execution_frame_def()
        return entry

    def order(self, frame: str) -> int:
        for i, name in enumerate(self.frames):
            if name == frame:
                return i
        return len(self.frames)

    def accepts_element(self, frame: str, element: str) -> bool:
        """True when `element` is declared for `frame` or carries the
        pass-through prefix."""
        if element.startswith(ORIG_PREFIX):
            return True
        entry = self.get(frame)
        return entry is not None and element in entry.element_names()


def execution_frame_def() -> FrameDef:
    return FrameDef(
        name=EXECUTION_FRAME,
        definition="An actor runs, invokes or otherwise executes a computation on a target.",
        elements=EXECUTION_ELEMENTS,
    )


class Status(str, Enum):
    VALID = "valid"
    REMAP_EXECUTION = "remap:Execution"
    INVALID = "invalid"


@dataclass(frozen=True)
class TailoringCatalog:
    """Per-frame tailoring status plus the execution-verb set and the FE
    rename map applied when a frame is remapped to Execution.

    `fe_map` keys are (frame, element); the frame "*" provides defaults that
    apply to any frame. Frames absent from `statuses` count as valid.
    """

    statuses: dict
    execution_verbs: frozenset
    fe_map: dict
    remap_requires_listed_frame: bool = False

    def status(self, frame: str) -> Status:
        if frame == EXECUTION_FRAME:
            return Status.VALID
        return self.statuses.get(frame, Status.VALID)

    def execution_element_for(self, frame: str, element: str) -> str | None:
        hit = self.fe_map.get((frame, element))
        if hit is None:
            hit = self.fe_map.get(("*", element))
        return hit

    def frames_with(self, status: Status) -> list[str]:
        return sorted(f for f, s in self.statuses.items() if s is status)


# Defaults applied when a frame is remapped to Execution and the catalog's
# fe_map has no more specific entry.
DEFAULT_FE_MAP = {
    ("*", "Goal"): "Target",
    ("*", "Governed"): "Target",
    ("*", "Agent"): "Executor",
}


def load_lexicon(path) -> FrameLexicon:
    """Load and validate a lexicon JSON file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedLexicon(f"cannot read lexicon {path}: {exc}") from exc
    return lexicon_from_dict(raw, source=str(path))


def lexicon_from_dict(raw: dict, source: str = "<dict>") -> FrameLexicon:
    if not isinstance(raw, dict) or not isinstance(raw.get("frames"), list):
        raise MalformedLexicon(f"{source}: expected an object with a 'frames' list")
    frames: dict[str, FrameDef] = {}
    for entry in raw["frames"]:
        name = canonical_frame_name(entry.get("name", ""))
        if not name:
            raise MalformedLexicon(f"{source}: frame with empty name")
        if name in frames:
            raise MalformedLexicon(f"{source}: duplicate frame {name}")
        elements = []
        seen = set()
        for el in entry.get("elements", []):
            el_name = canonical_element_name(el.get("name", ""))
            if not el_name or el_name in seen:
                raise MalformedLexicon(f"{source}: bad element list in frame {name}")
            seen.add(el_name)
            elements.append((el_name, bool(el.get("core", False))))
        lus = []
        for lu in entry.get("lexical_units", []):
            if not _LU_RE.match(lu):
                raise MalformedLexicon(
                    f"{source}: lexical unit {lu!r} in frame {name} is not lemma.pos"
                )
            lus.append(lu)
        patterns = []
        for pat in entry.get("patterns", []):
            el_name = canonical_element_name(pat.get("element", ""))
            if el_name not in seen:
                raise MalformedLexicon(
                    f"{source}: pattern in frame {name} references undeclared element {el_name!r}"
                )
            try:
                patterns.append(
                    FePattern(el_name, pat.get("side", ""), pat.get("match", ""))
                )
            except ValueError as exc:
                raise MalformedLexicon(f"{source}: frame {name}: {exc}") from exc
        frames[name] = FrameDef(
            name=name,
            definition=entry.get("definition", ""),
            elements=tuple(elements),
            lexical_units=tuple(lus),
            patterns=tuple(patterns),
        )
    return FrameLexicon(frames=frames)


def lexicon_to_dict(lexicon: FrameLexicon) -> dict:
    return {
        "frames": [
            {
                "name": fd.name,
                "definition": fd.definition,
                "elements": [{"name": n, "core": c} for n, c in fd.elements],
                "lexical_units": list(fd.lexical_units),
                "patterns": [
                    {"element": p.element, "side": p.side, "match": p.match}
                    for p in fd.patterns
                ],
            }
            for fd in lexicon.frames.values()
        ]
    }


def save_lexicon(lexicon: FrameLexicon, path) -> None:
    Path(path).write_text(
        json.dumps(lexicon_to_dict(lexicon), indent=2) + "\n", encoding="utf-8"
    )


_STATUS_TOKENS = {
    "valid": Status.VALID,
    "remap:execution": Status.REMAP_EXECUTION,
    "invalid": Status.INVALID,
}


def load_catalog(
    path,
    lexicon: FrameLexicon,
    remap_requires_listed_frame: bool = False,
) -> TailoringCatalog:
    """Load a tailoring catalog from a tab-separated status file.

    Companion files are picked up from the same directory when present:
    ``execution_verbs.txt`` (one lemma per line, merged with the built-in
    verb set) and ``fe_map.tsv`` (frame, source element, Execution element).
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise MalformedCatalog(f"cannot read catalog {path}: {exc}") from exc

    statuses: dict[str, Status] = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedCatalog(f"{path}:{lineno}: expected <frame>\\t<status>")
        frame = canonical_frame_name(parts[0])
        token = parts[1].strip().lower()
        if token not in _STATUS_TOKENS:
            raise MalformedCatalog(f"{path}:{lineno}: unknown status token {parts[1]!r}")
        if frame in statuses:
            raise MalformedCatalog(f"{path}:{lineno}: frame {frame} listed twice")
        if frame not in lexicon and frame != EXECUTION_FRAME:
            raise MalformedCatalog(f"{path}:{lineno}: frame {frame} not in lexicon")
        statuses[frame] = _STATUS_TOKENS[token]

    verbs = set(BASE_EXECUTION_VERBS)
    verbs_path = path.parent / "execution_verbs.txt"
    if verbs_path.exists():
        for line in verbs_path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                verbs.add(line.lower())

    fe_map = dict(DEFAULT_FE_MAP)
    fe_map_path = path.parent / "fe_map.tsv"
    if fe_map_path.exists():
        for lineno, line in enumerate(
            fe_map_path.read_text(encoding="utf-8").splitlines(), start=1
        ):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise MalformedCatalog(
                    f"{fe_map_path}:{lineno}: expected <frame>\\t<source_fe>\\t<execution_fe>"
                )
            frame = parts[0].strip()
            if frame != "*":
                frame = canonical_frame_name(frame)
            target = canonical_element_name(parts[2])
            if target not in {name for name, _ in EXECUTION_ELEMENTS}:
                raise MalformedCatalog(
                    f"{fe_map_path}:{lineno}: {target!r} is not an Execution element"
                )
            fe_map[(frame, canonical_element_name(parts[1]))] = target

    return TailoringCatalog(
        statuses=statuses,
        execution_verbs=frozenset(verbs),
        fe_map=fe_map,
        remap_requires_listed_frame=remap_requires_listed_frame,
    )


def save_catalog(catalog: TailoringCatalog, path) -> None:
    """Write the status file; companions are written next to it."""
    path = Path(path)
    lines = [f"{frame}\t{status.value}" for frame, status in catalog.statuses.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    (path.parent / "execution_verbs.txt").write_text(
        "\n".join(sorted(catalog.execution_verbs)) + "\n", encoding="utf-8"
    )
    rows = [
        f"{frame}\t{fe}\t{target}"
        for (frame, fe), target in sorted(catalog.fe_map.items())
    ]
    (path.parent / "fe_map.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")


def bundled_data_path(name: str) -> Path:
    """Path of a data file shipped with the package."""
    return Path(__file__).parent / "data" / name


def load_bundled_lexicon() -> FrameLexicon:
    return load_lexicon(bundled_data_path("lexicon.json"))


def load_bundled_catalog(
    lexicon: FrameLexicon | None = None,
    remap_requires_listed_frame: bool = False,
) -> TailoringCatalog:
    if lexicon is None:
        lexicon = load_bundled_lexicon()
    return load_catalog(
        bundled_data_path("catalog.tsv"),
        lexicon,
        remap_requires_listed_frame=remap_requires_listed_frame,
    )

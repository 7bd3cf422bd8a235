"""Code-aware text processing for software-engineering prose.

Sentence segmentation refuses to split inside fenced code blocks, inline
code spans, stack-trace lines, and URLs. The tokenizer keeps dotted
identifiers (``super.clone``), command-line flags (``--verbose``) and
hyphenated words intact. Part-of-speech assignment and lemmatization are
rule tables: closed-class word lists, a curated verb-stem set, suffix
heuristics, and a small irregulars list. Unknown tokens default to noun,
which is the right default for code identifiers.
"""

from __future__ import annotations

import re

from .model import Document, Sentence, Span, Token

# --------------------------------------------------------------------------
# word lists

DETERMINERS = frozenset(
    """a an the this that these those my your his her its our their some any
    each every no another both all""".split()
)

PRONOUNS = frozenset(
    """i you he she it we they me him them us who someone anyone everyone
    something anything everything nothing what""".split()
)

MODALS = frozenset("can could will would shall should may might must".split())

AUXILIARIES = frozenset("am is are was were be been being has had have does did done".split())

PREPOSITIONS = frozenset(
    """of in on at by for with from to into onto over after before between
    through during without within about against per across like above below
    under inside near behind""".split()
)

CONJUNCTIONS = frozenset(
    """and or but if because while when then than although though unless
    since so nor whether even as""".split()
)

NUMBER_WORDS = frozenset(
    "zero one two three four five six seven eight nine ten hundred thousand million".split()
)

KNOWN_ADJECTIVES = frozenset(
    """good bad great terrible nice same identical similar different alike old
    new legacy able capable likely possible only sole single necessary more
    additional extra many much enough sufficient insufficient first second
    third fourth last contingent simple complex standalone desktop wrong
    correct incorrect right fine empty full fast slow easy hard small large
    big free open stable consistent popular several other most""".split()
)

KNOWN_ADVERBS = frozenset(
    """probably often frequently always never sometimes currently now today
    ago later earlier soon afterwards previously recently subsequently also
    just still already again maybe perhaps please really actually here there
    not""".split()
)

VERB_STEMS = frozenset(
    """use fail succeed make cause act do perform run lead govern get arrive
    reach call request ask demand exist create generate produce try attempt
    want wish desire hope happen occur know realize check examine inspect
    review investigate have own possess understand grasp comprehend include
    contain give provide supply argue say state mention place put insert set
    need require increase depend execute invoke return process limit build
    compile install deploy test debug fix update upgrade click open close
    start stop restart load save add remove delete throw catch crash break
    change move copy import export parse print log push pull merge commit
    work write read see think help find show appear seem obtain clone
    override extend implement inherit configure enable disable pass send
    receive connect disconnect download upload search replace rename edit
    modify turn go come take keep leave mean feel hold choose speak bring
    teach buy sell tell stand become begin stay wait expect report support
    handle render fetch cache validate verify compute apply resolve
    reproduce upvote comment star""".split()
)

IRREGULAR_VERBS = {
    "made": "make", "got": "get", "gotten": "get", "ran": "run", "came": "come",
    "went": "go", "gone": "go", "was": "be", "were": "be", "is": "be",
    "are": "be", "am": "be", "been": "be", "being": "be", "has": "have",
    "had": "have", "did": "do", "does": "do", "done": "do", "took": "take",
    "taken": "take", "gave": "give", "given": "give", "found": "find",
    "said": "say", "saw": "see", "seen": "see", "threw": "throw",
    "thrown": "throw", "wrote": "write", "written": "write", "built": "build",
    "sent": "send", "kept": "keep", "left": "leave", "meant": "mean",
    "felt": "feel", "held": "hold", "broke": "break", "broken": "break",
    "chose": "choose", "chosen": "choose", "spoke": "speak", "knew": "know",
    "known": "know", "thought": "think", "brought": "bring", "caught": "catch",
    "taught": "teach", "bought": "buy", "sold": "sell", "told": "tell",
    "understood": "understand", "stood": "stand", "became": "become",
    "began": "begin", "begun": "begin", "hit": "hit", "put": "put",
    "set": "set", "cut": "cut", "let": "let", "read": "read",
}

IRREGULAR_NOUNS = {
    "means": "means", "news": "news", "data": "data", "series": "series",
    "children": "child", "indices": "index", "criteria": "criterion",
}

ABBREVIATIONS = frozenset(
    "e.g. i.e. etc. vs. cf. al. fig. no. dr. mr. mrs. ms. st. approx. ca. resp.".split()
)

_VOWELS = set("aeiou")

# --------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    `[^`\n]+`                                    # inline code span
  | https?://[^\s<>"']+                          # URL
  | www\.[^\s<>"']+                              # bare www URL
  | --?[A-Za-z][\w-]*                            # command-line flag
  | [A-Za-z_$][\w$]*(?:(?:\.|::|\#)[A-Za-z_$][\w$]*)+   # dotted identifier
  | \d+(?:\.\d+)+                                # version number
  | \d+                                          # plain number
  | [A-Za-z_]\w*(?:[-'’][A-Za-z\d]+)*       # word, hyphens/apostrophes kept
  | \S                                           # anything else, one char
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[tuple[Span, str]]:
    """Split sentence text into (span, surface) pairs."""
    return [
        (Span(m.start(), m.end(), m.group()), m.group())
        for m in _TOKEN_RE.finditer(text)
    ]


# --------------------------------------------------------------------------
# part of speech

_PUNCT_RE = re.compile(r"^[^\w`]+$")
_IDENTIFIER_HINT_RE = re.compile(r"[._\d$-]|::|[a-z][A-Z]")


def _strip_candidates(stem: str) -> list[str]:
    """Candidate base forms for an -ing/-ed stem: as-is, undoubled, +e."""
    out = [stem]
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in "lsfz":
        out.append(stem[:-1])
    out.append(stem + "e")
    return out


def _verb_stem(lower: str) -> str | None:
    """The base form of `lower` if the rule table recognizes it as a verb."""
    if lower in IRREGULAR_VERBS:
        return IRREGULAR_VERBS[lower]
    if lower in VERB_STEMS:
        return lower
    if lower.endswith("ies") and len(lower) > 4:
        cand = lower[:-3] + "y"
        if cand in VERB_STEMS:
            return cand
    if lower.endswith("es") and len(lower) > 3:
        cand = lower[:-2]
        if cand in VERB_STEMS:
            return cand
    if lower.endswith("s") and not lower.endswith("ss") and len(lower) > 2:
        cand = lower[:-1]
        if cand in VERB_STEMS:
            return cand
    if lower.endswith("ing") and len(lower) > 4:
        for cand in _strip_candidates(lower[:-3]):
            if cand in VERB_STEMS:
                return cand
    if lower.endswith("ed") and len(lower) > 3:
        for cand in [lower[:-1]] + _strip_candidates(lower[:-2]):
            if cand in VERB_STEMS:
                return cand
    return None


def pos_tag(surfaces: list[str]) -> list[str]:
    """Assign a coarse tag per token.

    Tags: det, pron, v, n, a, adv, prep, conj, num, punct. Code spans,
    URLs and identifiers count as nouns.
    """
    tags: list[str] = []
    prev_alpha = ""
    prev_tag = ""
    for surface in surfaces:
        lower = surface.lower()
        tag = None
        if _PUNCT_RE.match(surface) and not surface.startswith("`"):
            tag = "punct"
        elif surface.startswith("`") or lower.startswith(("http://", "https://", "www.")):
            tag = "n"
        elif surface.isdigit() or re.fullmatch(r"\d+(?:\.\d+)+", surface):
            tag = "num"
        elif lower in DETERMINERS:
            tag = "det"
        elif lower in PRONOUNS:
            tag = "pron"
        elif lower in MODALS or lower in AUXILIARIES:
            tag = "v"
        elif lower in PREPOSITIONS:
            tag = "prep"
        elif lower in CONJUNCTIONS:
            tag = "conj"
        elif lower in NUMBER_WORDS:
            tag = "a"
        elif (
            surface.isalpha()
            and lower not in KNOWN_ADVERBS
            and (prev_alpha in MODALS or prev_alpha == "to" or prev_alpha in PRONOUNS)
        ):
            tag = "v"
        elif _verb_stem(lower) is not None and prev_tag not in ("det", "a", "num"):
            tag = "v"
        elif lower in KNOWN_ADJECTIVES:
            tag = "a"
        elif lower in KNOWN_ADVERBS:
            tag = "adv"
        elif lower.endswith("ly") and len(lower) > 3:
            tag = "adv"
        elif lower.endswith(("able", "ible", "ous", "ful", "ive")) and len(lower) > 4:
            tag = "a"
        elif lower.endswith("ing") and len(lower) > 5 and _VOWELS & set(lower[:-3]):
            tag = "v"
        elif _IDENTIFIER_HINT_RE.search(surface):
            tag = "n"
        else:
            tag = "n"
        tags.append(tag)
        prev_tag = tag
        if surface.isalpha():
            prev_alpha = lower
    return tags


# --------------------------------------------------------------------------
# lemmatizer

def lemmatize(surface: str, pos: str) -> str:
    """Rule-table lemmatization; unknown forms come back lowercased."""
    lower = surface.lower()
    if pos == "v":
        stem = _verb_stem(lower)
        if stem is not None:
            return stem
        # generic inflection stripping for verbs outside the stem table
        if lower.endswith("ies") and len(lower) > 4:
            return lower[:-3] + "y"
        if lower.endswith("ing") and len(lower) > 4:
            stem = lower[:-3]
            if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in "lsfz":
                return stem[:-1]
            return stem
        if lower.endswith("ed") and len(lower) > 3:
            stem = lower[:-2]
            if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in "lsfz":
                return stem[:-1]
            return stem
        if (
            lower.endswith("es")
            and len(lower) > 3
            and lower[:-2].endswith(("ss", "x", "z", "ch", "sh", "o"))
        ):
            return lower[:-2]
        if lower.endswith("s") and not lower.endswith("ss") and len(lower) > 2:
            return lower[:-1]
        return lower
    if pos == "n":
        if lower in IRREGULAR_NOUNS:
            return IRREGULAR_NOUNS[lower]
        if lower.endswith("ies") and len(lower) > 4:
            return lower[:-3] + "y"
        if (
            lower.endswith("es")
            and len(lower) > 3
            and lower[:-2].endswith(("ss", "x", "z", "ch", "sh"))
        ):
            return lower[:-2]
        if (
            lower.endswith("s")
            and len(lower) > 3
            and not lower.endswith(("ss", "us", "is"))
        ):
            return lower[:-1]
        return lower
    return lower


_LEMMA_POS = {"v": "v", "n": "n", "a": "a", "adv": "adv", "prep": "prep"}


def analyze(text: str) -> tuple[Token, ...]:
    """Tokenize and annotate sentence text with lemma and tag."""
    pairs = tokenize(text)
    tags = pos_tag([surface for _, surface in pairs])
    tokens = []
    for (span, surface), tag in zip(pairs, tags):
        lemma = lemmatize(surface, _LEMMA_POS.get(tag, "other"))
        tokens.append(Token(span=span, lemma=lemma, pos=tag))
    return tuple(tokens)


def make_sentence(text: str, sentence_id: str, doc_id: str = "", index: int = 0) -> Sentence:
    return Sentence(
        id=sentence_id, doc_id=doc_id, index=index, text=text, tokens=analyze(text)
    )


# --------------------------------------------------------------------------
# sentence segmentation

_FENCE_RE = re.compile(r"(```|~~~).*?(\1|\Z)", re.DOTALL)
_INLINE_CODE_RE = re.compile(r"`[^`\n]+`")
_URL_RE = re.compile(r"(?:https?://|www\.)[^\s<>\"']+")
_TRACE_LINE_RE = re.compile(r"^\s*at\s+[\w$.<>/]+\([^)\n]*\)\s*$", re.MULTILINE)
_BOUNDARY_RE = re.compile(r"[.!?]+(?=\s)")
_PARA_RE = re.compile(r"\n\s*\n")


def _protected_regions(text: str) -> list[tuple[int, int]]:
    regions = []
    for pattern in (_FENCE_RE, _INLINE_CODE_RE, _URL_RE, _TRACE_LINE_RE):
        regions.extend(m.span() for m in pattern.finditer(text))
    regions.sort()
    return regions


def _inside(pos: int, regions: list[tuple[int, int]]) -> bool:
    return any(start < pos < end for start, end in regions)


def segment_text(text: str) -> list[tuple[int, int]]:
    """Character spans of the sentences of `text`, in order."""
    if not text or not text.strip():
        return []
    regions = _protected_regions(text)
    cuts = {0, len(text)}

    for m in _BOUNDARY_RE.finditer(text):
        end = m.end()
        if _inside(end, regions) or _inside(m.start() + 1, regions):
            continue
        before = text[: m.start()]
        word = re.search(r"[\w.]*$", before).group()
        if (word + ".").lower() in ABBREVIATIONS:
            continue
        rest = text[end:].lstrip()
        if m.group().startswith(".") and rest and not (
            rest[0].isupper() or rest[0].isdigit() or rest[0] in "\"'`([-*#<"
        ):
            continue
        cuts.add(end)

    for m in _PARA_RE.finditer(text):
        if not _inside(m.start(), regions):
            cuts.add(m.start())

    # isolate fenced blocks and stack-trace lines so prose segments on its own
    for pattern in (_FENCE_RE, _TRACE_LINE_RE):
        for m in pattern.finditer(text):
            cuts.add(m.start())
            cuts.add(m.end())

    ordered = sorted(cuts)
    spans = []
    for start, end in zip(ordered, ordered[1:]):
        chunk = text[start:end]
        stripped = chunk.strip()
        if not stripped:
            continue
        lead = len(chunk) - len(chunk.lstrip())
        spans.append((start + lead, start + lead + len(stripped)))
    return spans


def segment(doc: Document) -> list[Sentence]:
    """Split a document into tokenized sentences."""
    sentences = []
    for index, (start, end) in enumerate(segment_text(doc.raw_text)):
        text = doc.raw_text[start:end]
        sentences.append(
            make_sentence(text, f"{doc.id}#s{index}", doc_id=doc.id, index=index)
        )
    return sentences

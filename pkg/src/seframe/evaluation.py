"""Study protocols: batch assignment, majority-vote correctness, gold-item
screening, and inter-annotator agreement.

Two aggregation strategies exist. Correctness campaigns assign three
evaluators per batch and call a sentence's frame correct when at least two
of the three agree; the per-frame ratio is then taken over the frame's
sentences. Robustness campaigns show every item to every evaluator and
report raw vote tallies per frame. Gold items (one obviously correct,
one obviously wrong) screen out evaluators who wave everything through;
their judgments never reach a report.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from pathlib import Path

from .sampling import Lcg


class Infeasible(ValueError):
    """No assignment satisfies the overlap constraints."""


class IncompleteCampaign(ValueError):
    """Report requested while non-gold items are missing judgments."""


class MissingGoldJudgment(ValueError):
    """An evaluator has not judged a gold item."""


class ItemSetMismatch(ValueError):
    """Agreement requested over different item sets."""


class WrongVerdictKind(ValueError):
    """A judgment's verdict does not belong to the campaign's study mode."""


class CampaignMode(str, Enum):
    ANNOTATION = "annotation"
    CORRECTNESS = "correctness"
    ROBUSTNESS = "robustness"


class Verdict(str, Enum):
    VALID = "valid"
    INVALID = "invalid"
    MODIFY = "modify"
    CORRECT = "correct"
    INCORRECT = "incorrect"
    INCORRECT_ORIGINAL_BETTER = "incorrect_original_better"


ANNOTATION_VERDICTS = frozenset({Verdict.VALID, Verdict.INVALID, Verdict.MODIFY})
CORRECTNESS_VERDICTS = frozenset(
    {Verdict.CORRECT, Verdict.INCORRECT, Verdict.INCORRECT_ORIGINAL_BETTER}
)
INCORRECT_VERDICTS = frozenset({Verdict.INCORRECT, Verdict.INCORRECT_ORIGINAL_BETTER})


@dataclass(frozen=True)
class Judgment:
    evaluator: str
    item: str
    verdict: Verdict
    suggested_frame: str | None = None
    timestamp: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "verdict", Verdict(self.verdict))


@dataclass(frozen=True)
class Item:
    """One sentence-frame pair shown to evaluators."""

    id: str
    sentence_id: str
    sentence: str
    frame: str
    target: dict = field(default_factory=dict)  # start/end/text over sentence
    definition: str = ""
    elements: tuple = ()  # (name, text) pairs
    original_frame: dict | None = None  # pre-tailoring frame, for follow-ups
    batch: int | None = None


@dataclass(frozen=True)
class GoldItem:
    item: Item
    expected: Verdict
    position: str = "first"  # first | last


@dataclass(frozen=True)
class Campaign:
    id: str
    mode: CampaignMode
    items: dict  # item id -> Item
    batches: tuple  # tuple of tuples of item ids
    assignments: dict  # evaluator -> tuple of batch indices
    gold_items: tuple = ()
    secret: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", CampaignMode(self.mode))
        if self.mode is CampaignMode.CORRECTNESS:
            for b, batch in enumerate(self.batches):
                frames = [self.items[i].frame for i in batch]
                if len(frames) != len(set(frames)):
                    raise ValueError(f"batch {b} repeats a frame")

    def gold_ids(self) -> set:
        return {gold.item.id for gold in self.gold_items}

    def expected_verdicts(self) -> frozenset:
        if self.mode is CampaignMode.ANNOTATION:
            return ANNOTATION_VERDICTS
        return CORRECTNESS_VERDICTS


# --------------------------------------------------------------------------
# batch assignment

def assign_batches(
    evaluators,
    batches,
    per_batch: int = 3,
    pair_limit: int = 2,
    triple_limit: int = 1,
    seed: int = 0,
    node_budget: int = 200_000,
) -> dict:
    """Assign `per_batch` evaluators to every batch with randomized
    backtracking, so that no pair of evaluators shares more than
    `pair_limit` batches and no triple shares more than `triple_limit`,
    with loads balanced to the ceiling of slots per evaluator.

    Returns evaluator -> tuple of batch ids. Raises Infeasible when the
    search exhausts.
    """
    evaluators = list(evaluators)
    batches = list(batches)
    if per_batch > len(evaluators) or per_batch < 1:
        raise Infeasible(
            f"cannot place {per_batch} evaluators per batch with {len(evaluators)} evaluators"
        )
    slots = len(batches) * per_batch
    max_load = math.ceil(slots / len(evaluators))

    rng = Lcg(seed)
    loads = {e: 0 for e in evaluators}
    pair_counts: dict[tuple, int] = {}
    triple_counts: dict[tuple, int] = {}
    chosen: list[tuple] = []
    budget = [node_budget]

    def team_ok(team) -> bool:
        for pair in combinations(sorted(team), 2):
            if pair_counts.get(pair, 0) + 1 > pair_limit:
                return False
        for triple in combinations(sorted(team), 3):
            if triple_counts.get(triple, 0) + 1 > triple_limit:
                return False
        return True

    def place(team, delta) -> None:
        for e in team:
            loads[e] += delta
        for pair in combinations(sorted(team), 2):
            pair_counts[pair] = pair_counts.get(pair, 0) + delta
        for triple in combinations(sorted(team), 3):
            triple_counts[triple] = triple_counts.get(triple, 0) + delta

    def solve(b: int) -> bool:
        if b == len(batches):
            return True
        budget[0] -= 1
        if budget[0] < 0:
            return False
        available = [e for e in evaluators if loads[e] < max_load]
        teams = [list(c) for c in combinations(available, per_batch)]
        order = rng.sample(list(range(len(teams))), len(teams))
        for idx in order:
            team = teams[idx]
            if not team_ok(team):
                continue
            place(team, +1)
            chosen.append(tuple(team))
            if solve(b + 1):
                return True
            chosen.pop()
            place(team, -1)
        return False

    if not solve(0):
        raise Infeasible("assignment search exhausted without a solution")

    result: dict[str, list] = {e: [] for e in evaluators}
    for batch_id, team in zip(batches, chosen):
        for e in team:
            result[e].append(batch_id)
    return {e: tuple(bs) for e, bs in result.items()}


def verify_assignment(
    assignment: dict,
    batches,
    per_batch: int = 3,
    pair_limit: int = 2,
    triple_limit: int = 1,
) -> tuple[bool, list[str]]:
    """Independent brute-force check of an assignment. Enumerates every
    batch, every evaluator pair, and every evaluator triple, returning all
    violations found."""
    violations = []
    batches = list(batches)
    members: dict = {b: [] for b in batches}
    for evaluator, assigned in assignment.items():
        for b in assigned:
            if b not in members:
                violations.append(f"evaluator {evaluator} assigned unknown batch {b}")
            else:
                members[b].append(evaluator)

    for b in batches:
        if len(members[b]) != per_batch:
            violations.append(f"batch {b} has {len(members[b])} evaluators, wants {per_batch}")

    evaluators = sorted(assignment)
    for a, b in combinations(evaluators, 2):
        shared = set(assignment[a]) & set(assignment[b])
        if len(shared) > pair_limit:
            violations.append(f"pair ({a}, {b}) shares {len(shared)} batches > {pair_limit}")
    for a, b, c in combinations(evaluators, 3):
        shared = set(assignment[a]) & set(assignment[b]) & set(assignment[c])
        if len(shared) > triple_limit:
            violations.append(
                f"triple ({a}, {b}, {c}) shares {len(shared)} batches > {triple_limit}"
            )

    loads = sorted(len(v) for v in assignment.values())
    if loads and loads[-1] - loads[0] > 1:
        violations.append(f"loads unbalanced: min {loads[0]}, max {loads[-1]}")

    return (not violations, violations)


# --------------------------------------------------------------------------
# verdict aggregation

def majority_correct(votes, threshold: int = 2) -> bool:
    """True when at least `threshold` of the votes say correct."""
    votes = [Verdict(v) for v in votes]
    if not votes:
        raise ValueError("majority_correct needs at least one vote")
    return sum(1 for v in votes if v is Verdict.CORRECT) >= threshold


def latest_judgments(judgments) -> dict:
    """Last-write-wins view: (evaluator, item) -> Judgment."""
    latest: dict[tuple, Judgment] = {}
    for j in judgments:
        latest[(j.evaluator, j.item)] = j
    return latest


def gold_check(evaluator: str, judgments, gold_items) -> bool:
    """Pass when the obviously-correct gold was judged correct and the
    obviously-wrong gold was judged incorrect."""
    latest = latest_judgments(judgments)
    for gold in gold_items:
        j = latest.get((evaluator, gold.item.id))
        if j is None:
            raise MissingGoldJudgment(
                f"evaluator {evaluator} has not judged gold item {gold.item.id}"
            )
        if gold.expected is Verdict.CORRECT and j.verdict is not Verdict.CORRECT:
            return False
        if gold.expected is Verdict.INCORRECT and j.verdict not in INCORRECT_VERDICTS:
            return False
    return True


@dataclass(frozen=True)
class FrameResult:
    frame: str
    correct: int
    incorrect: int
    original_better: int = 0

    @property
    def total(self) -> int:
        return self.correct + self.incorrect

    @property
    def ratio(self) -> float:
        return self.correct / self.total if self.total else 0.0

    @property
    def percent(self) -> int:
        return round(100 * self.correct / self.total) if self.total else 0


@dataclass(frozen=True)
class CorrectnessReport:
    mode: CampaignMode
    rows: tuple  # FrameResult, ranked by ratio then name
    flagged_evaluators: tuple = ()

    @property
    def overall_correct(self) -> int:
        return sum(r.correct for r in self.rows)

    @property
    def overall_total(self) -> int:
        return sum(r.total for r in self.rows)

    @property
    def overall_ratio(self) -> float:
        total = self.overall_total
        return self.overall_correct / total if total else 0.0

    @property
    def overall_percent(self) -> int:
        total = self.overall_total
        return round(100 * self.overall_correct / total) if total else 0

    def to_csv_rows(self) -> list[list]:
        out = [["frame", "correct", "incorrect", "ratio", "original_better"]]
        for r in self.rows:
            out.append([r.frame, r.correct, r.incorrect, f"{r.percent}%", r.original_better])
        out.append(
            ["OVERALL", self.overall_correct, self.overall_total - self.overall_correct,
             f"{self.overall_percent}%", sum(r.original_better for r in self.rows)]
        )
        return out


def _screen_evaluators(campaign: Campaign, judgments) -> tuple[list, list]:
    """Split evaluators into (kept, flagged) using the gold items."""
    evaluators = sorted(campaign.assignments)
    if not campaign.gold_items:
        return evaluators, []
    kept, flagged = [], []
    for evaluator in evaluators:
        if gold_check(evaluator, judgments, campaign.gold_items):
            kept.append(evaluator)
        else:
            flagged.append(evaluator)
    return kept, flagged


def correctness_report(campaign: Campaign, judgments) -> CorrectnessReport:
    """Aggregate judgments into per-frame tallies.

    Correctness mode: per sentence, majority vote of its three evaluators;
    a frame's tally counts its sentences. Robustness mode: raw votes per
    frame. Gold items and gold-failing evaluators are excluded. Raises
    IncompleteCampaign when a kept evaluator left a non-gold item unjudged.
    """
    if campaign.mode is CampaignMode.ANNOTATION:
        raise ValueError("annotation campaigns use annotation_agreement, not reports")
    allowed = campaign.expected_verdicts()
    for j in judgments:
        if j.verdict not in allowed:
            raise WrongVerdictKind(
                f"verdict {j.verdict.value} does not belong to {campaign.mode.value} mode"
            )

    latest = latest_judgments(judgments)
    kept, flagged = _screen_evaluators(campaign, judgments)
    gold_ids = campaign.gold_ids()

    # item id -> votes from kept evaluators assigned to its batch
    votes: dict[str, list] = {}
    for evaluator in kept:
        for b in campaign.assignments[evaluator]:
            for item_id in campaign.batches[b]:
                if item_id in gold_ids:
                    continue
                j = latest.get((evaluator, item_id))
                if j is None:
                    raise IncompleteCampaign(
                        f"evaluator {evaluator} has not judged item {item_id}"
                    )
                votes.setdefault(item_id, []).append(j.verdict)

    per_frame: dict[str, dict] = {}
    for item_id, item_votes in sorted(votes.items()):
        frame = campaign.items[item_id].frame
        tally = per_frame.setdefault(
            frame, {"correct": 0, "incorrect": 0, "original_better": 0}
        )
        if campaign.mode is CampaignMode.CORRECTNESS:
            if majority_correct(item_votes):
                tally["correct"] += 1
            else:
                tally["incorrect"] += 1
            tally["original_better"] += sum(
                1 for v in item_votes if v is Verdict.INCORRECT_ORIGINAL_BETTER
            )
        else:  # robustness: raw votes
            tally["correct"] += sum(1 for v in item_votes if v is Verdict.CORRECT)
            tally["incorrect"] += sum(1 for v in item_votes if v in INCORRECT_VERDICTS)
            tally["original_better"] += sum(
                1 for v in item_votes if v is Verdict.INCORRECT_ORIGINAL_BETTER
            )

    rows = tuple(
        sorted(
            (
                FrameResult(
                    frame=frame,
                    correct=t["correct"],
                    incorrect=t["incorrect"],
                    original_better=t["original_better"],
                )
                for frame, t in per_frame.items()
            ),
            key=lambda r: (-r.ratio, r.frame),
        )
    )
    return CorrectnessReport(mode=campaign.mode, rows=rows, flagged_evaluators=tuple(flagged))


def annotation_agreement(a, b) -> tuple[float, list]:
    """Percent agreement between two annotators over the same items, plus
    the disagreement list that seeds a resolution queue."""
    latest_a = {j.item: j for j in a}
    latest_b = {j.item: j for j in b}
    if set(latest_a) != set(latest_b):
        raise ItemSetMismatch("annotators judged different item sets")
    if not latest_a:
        return 1.0, []
    disagreements = []
    matches = 0
    for item in sorted(latest_a):
        ja, jb = latest_a[item], latest_b[item]
        if (ja.verdict, ja.suggested_frame) == (jb.verdict, jb.suggested_frame):
            matches += 1
        else:
            disagreements.append((item, ja, jb))
    return matches / len(latest_a), disagreements


# --------------------------------------------------------------------------
# persistence

def _item_to_dict(item: Item) -> dict:
    out = {
        "id": item.id,
        "sentence_id": item.sentence_id,
        "sentence": item.sentence,
        "frame": item.frame,
        "target": item.target,
        "definition": item.definition,
        "elements": [{"name": n, "text": t} for n, t in item.elements],
    }
    if item.original_frame is not None:
        out["original_frame"] = item.original_frame
    if item.batch is not None:
        out["batch"] = item.batch
    return out


def _item_from_dict(obj: dict) -> Item:
    return Item(
        id=str(obj["id"]),
        sentence_id=str(obj.get("sentence_id", "")),
        sentence=obj.get("sentence", ""),
        frame=obj.get("frame", ""),
        target=obj.get("target", {}),
        definition=obj.get("definition", ""),
        elements=tuple((e["name"], e["text"]) for e in obj.get("elements", [])),
        original_frame=obj.get("original_frame"),
        batch=obj.get("batch"),
    )


def save_campaign(campaign: Campaign, path) -> None:
    """Write a campaign as newline-delimited records."""
    with open(Path(path), "w", encoding="utf-8") as handle:
        header = {
            "record": "campaign",
            "id": campaign.id,
            "mode": campaign.mode.value,
            "assignments": {e: list(bs) for e, bs in sorted(campaign.assignments.items())},
        }
        if campaign.secret:
            header["secret"] = campaign.secret
        handle.write(json.dumps(header) + "\n")
        for b, batch in enumerate(campaign.batches):
            for item_id in batch:
                item = campaign.items[item_id]
                obj = _item_to_dict(item)
                obj["batch"] = b
                handle.write(json.dumps({"record": "item", **obj}) + "\n")
        for gold in campaign.gold_items:
            handle.write(
                json.dumps(
                    {
                        "record": "gold",
                        "position": gold.position,
                        "expected": gold.expected.value,
                        "item": _item_to_dict(gold.item),
                    }
                )
                + "\n"
            )


def load_campaign(path) -> Campaign:
    header = None
    items: dict[str, Item] = {}
    batch_items: dict[int, list] = {}
    gold_items = []
    with open(Path(path), encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            kind = obj.get("record")
            if kind == "campaign":
                header = obj
            elif kind == "item":
                item = _item_from_dict(obj)
                items[item.id] = item
                batch_items.setdefault(int(obj.get("batch", 0)), []).append(item.id)
            elif kind == "gold":
                gold_items.append(
                    GoldItem(
                        item=_item_from_dict(obj["item"]),
                        expected=Verdict(obj["expected"]),
                        position=obj.get("position", "first"),
                    )
                )
            else:
                raise ValueError(f"unknown campaign record type {kind!r}")
    if header is None:
        raise ValueError(f"{path}: missing campaign header record")
    for gold in gold_items:
        items.setdefault(gold.item.id, gold.item)
    batches = tuple(
        tuple(batch_items[b]) for b in sorted(batch_items)
    )
    return Campaign(
        id=str(header["id"]),
        mode=CampaignMode(header["mode"]),
        items=items,
        batches=batches,
        assignments={
            str(e): tuple(bs) for e, bs in header.get("assignments", {}).items()
        },
        gold_items=tuple(gold_items),
        secret=header.get("secret"),
    )


def write_judgments(judgments, path) -> None:
    with open(Path(path), "w", encoding="utf-8") as handle:
        for j in judgments:
            obj = {"evaluator": j.evaluator, "item": j.item, "verdict": j.verdict.value}
            if j.suggested_frame:
                obj["suggested_frame"] = j.suggested_frame
            if j.timestamp is not None:
                obj["timestamp"] = j.timestamp
            handle.write(json.dumps(obj) + "\n")


def read_judgments(path) -> list:
    out = []
    with open(Path(path), encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            out.append(
                Judgment(
                    evaluator=str(obj["evaluator"]),
                    item=str(obj["item"]),
                    verdict=Verdict(obj["verdict"]),
                    suggested_frame=obj.get("suggested_frame"),
                    timestamp=obj.get("timestamp"),
                )
            )
    return out

"""Command-line entry point wiring the pipeline together.

Subcommands: ingest, parse, decorate, distribution, sample-size, sample,
assign-batches, report, structure, serve. Files are processed line by line
so corpora of tens of thousands of sentences run in constant memory, and
outputs are written to a temporary file and renamed so a failure never
leaves a partial file behind. Exit codes: 0 ok, 1 usage, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import evaluation, sampling
from .decorator import IndexOutOfRange, decorate, structure
from .ingest import SourceConfig, UnknownSourceKind, UnreadableSource, ingest as run_ingest
from .model import (
    MalformedCatalog,
    MalformedLexicon,
    SourceKind,
    bundled_data_path,
    load_catalog,
    load_lexicon,
)
from .parser import (
    MalformedRecord,
    parse_result_from_dict,
    parse_result_to_dict,
    tag_frames,
)
from .textproc import segment

USAGE_ERROR = 1
DATA_ERROR = 2

DATA_ERRORS = (
    MalformedLexicon,
    MalformedCatalog,
    MalformedRecord,
    UnreadableSource,
    UnknownSourceKind,
    sampling.InvalidSpec,
    evaluation.Infeasible,
    evaluation.IncompleteCampaign,
    evaluation.MissingGoldJudgment,
    evaluation.WrongVerdictKind,
    IndexOutOfRange,
    FileNotFoundError,
    json.JSONDecodeError,
    ValueError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def atomic_write(path, render) -> None:
    """Call `render(handle)` against a temp file, then rename into place."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp-{os.getpid()}")
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as handle:
            render(handle)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def _out_stream(args):
    return getattr(args, "out", None)


def _write_lines(args, lines) -> None:
    """Write text lines to --out atomically, or stream to stdout."""
    if _out_stream(args):
        def render(handle):
            for line in lines:
                handle.write(line + "\n")
        atomic_write(args.out, render)
    else:
        for line in lines:
            sys.stdout.write(line + "\n")


def _default_lexicon_path() -> str:
    return os.environ.get("SEFRAME_LEXICON") or str(bundled_data_path("lexicon.json"))


def _read_jsonl_lines(path):
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield json.loads(line)


def _map_lines(records, worker, workers: int):
    """Order-preserving map, optionally fanned out over threads."""
    if workers <= 1:
        for record in records:
            yield worker(record)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(worker, records)


# --------------------------------------------------------------------------
# subcommands

def _cmd_ingest(args) -> int:
    config = SourceConfig(
        kind=SourceKind(args.kind),
        path=args.input,
        min_length=args.min_length,
        drop_code=args.drop_code,
    )
    docs = run_ingest(config)
    lines = [
        json.dumps(
            {
                "id": d.id,
                "source_kind": d.source_kind.value,
                "text": d.raw_text,
                "metadata": d.metadata,
            }
        )
        for d in docs
    ]
    _write_lines(args, lines)
    return 0


def _cmd_parse(args) -> int:
    lexicon = load_lexicon(args.lexicon)
    if args.import_external:
        def worker(record):
            result = parse_result_from_dict(record, lexicon=lexicon, strict=args.strict)
            return json.dumps(parse_result_to_dict(result))
        lines = _map_lines(_read_jsonl_lines(args.input), worker, args.workers)
        _write_lines(args, lines)
        return 0

    def worker(record):
        from .model import Document
        doc = Document(
            id=str(record.get("id", "doc")),
            source_kind=record.get("source_kind", "generic"),
            raw_text=record.get("text", ""),
            metadata=record.get("metadata", {}),
        )
        out = []
        for sentence in segment(doc):
            result = tag_frames(sentence, lexicon)
            out.append(json.dumps(parse_result_to_dict(result)))
        return out

    chunks = _map_lines(_read_jsonl_lines(args.input), worker, args.workers)
    _write_lines(args, (line for chunk in chunks for line in chunk))
    return 0


def _cmd_decorate(args) -> int:
    lexicon = load_lexicon(args.lexicon)
    catalog = load_catalog(
        args.catalog, lexicon, remap_requires_listed_frame=args.strict_listed_frames
    )

    def worker(record):
        result = parse_result_from_dict(record, lexicon=lexicon)
        return json.dumps(parse_result_to_dict(decorate(result, catalog)))

    lines = _map_lines(_read_jsonl_lines(args.input), worker, args.workers)
    _write_lines(args, lines)
    return 0


def _cmd_distribution(args) -> int:
    results = (parse_result_from_dict(r) for r in _read_jsonl_lines(args.input))
    report = sampling.frame_distribution(results)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerows(report.to_csv_rows())
    _write_lines(args, buffer.getvalue().splitlines())
    return 0


def _cmd_sample_size(args) -> int:
    z = args.z if args.z is not None else sampling.z_for_confidence(args.confidence)
    spec = sampling.SampleSpec(
        population=args.population, z=z, proportion=args.proportion, margin=args.margin
    )
    print(sampling.sample_size(spec))
    return 0


def _cmd_sample(args) -> int:
    results = [parse_result_from_dict(r) for r in _read_jsonl_lines(args.input)]
    if args.frame:
        frames = [args.frame]
    else:
        report = sampling.frame_distribution(results)
        frames = sampling.top_k(report, args.top)
    lines = []
    for frame in frames:
        for sentence_id in sampling.sample_per_frame(frame, results, args.per_frame, args.seed):
            lines.append(json.dumps({"frame": frame, "sentence_id": sentence_id}))
    _write_lines(args, lines)
    return 0


def _cmd_assign_batches(args) -> int:
    evaluators = (
        args.evaluators.split(",")
        if "," in args.evaluators
        else [f"e{i+1:02d}" for i in range(int(args.evaluators))]
    )
    batches = (
        args.batches.split(",")
        if "," in args.batches
        else list(range(int(args.batches)))
    )
    assignment = evaluation.assign_batches(
        evaluators,
        batches,
        per_batch=args.per_batch,
        pair_limit=args.pair_limit,
        triple_limit=args.triple_limit,
        seed=args.seed,
    )
    ok, violations = evaluation.verify_assignment(
        assignment, batches, args.per_batch, args.pair_limit, args.triple_limit
    )
    if not ok:
        raise evaluation.Infeasible("; ".join(violations))
    _write_lines(
        args,
        [json.dumps({e: list(bs) for e, bs in sorted(assignment.items())}, indent=2)],
    )
    return 0


def _cmd_report(args) -> int:
    campaign = evaluation.load_campaign(args.campaign)
    judgments = evaluation.read_judgments(args.judgments)
    report = evaluation.correctness_report(campaign, judgments)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerows(report.to_csv_rows())
    _write_lines(args, buffer.getvalue().splitlines())
    if report.flagged_evaluators:
        print(
            "flagged evaluators: " + ", ".join(report.flagged_evaluators),
            file=sys.stderr,
        )
    return 0


def _cmd_structure(args) -> int:
    for record in _read_jsonl_lines(args.input):
        result = parse_result_from_dict(record)
        if args.sentence and result.sentence.id != args.sentence:
            continue
        view = structure(result, args.frame_index)
        if args.format == "json":
            _write_lines(args, [json.dumps(view.to_json_rows())])
        else:
            _write_lines(args, view.as_text().splitlines())
        return 0
    print("no matching sentence", file=sys.stderr)
    return DATA_ERROR


def _cmd_serve(args) -> int:
    from .service import serve
    serve(
        campaign_path=args.campaign,
        journal_path=args.journal,
        host=args.host,
        port=args.port,
        static_dir=args.static,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seframe")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read an artifact export into documents")
    p.add_argument("--kind", required=True, choices=[k.value for k in SourceKind])
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--min-length", type=int, default=None)
    p.add_argument("--drop-code", action="store_true")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("parse", help="segment documents and tag frames")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--lexicon", default=_default_lexicon_path())
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--import-external", action="store_true",
                   help="treat input as external parser records")
    p.add_argument("--strict", action="store_true",
                   help="reject unknown fields in external records")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("decorate", help="apply the tailoring catalog")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--catalog", default=str(bundled_data_path("catalog.tsv")))
    p.add_argument("--lexicon", default=_default_lexicon_path())
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--strict-listed-frames", action="store_true",
                   help="only remap frames the catalog marks remap:Execution")
    p.set_defaults(func=_cmd_decorate)

    p = sub.add_parser("distribution", help="frame frequency ranking as CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_distribution)

    p = sub.add_parser("sample-size", help="Cochran sample size with FPC")
    p.add_argument("--population", type=int, required=True)
    p.add_argument("--confidence", type=float, default=0.99)
    p.add_argument("--z", type=float, default=None)
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument("--proportion", type=float, default=0.5)
    p.set_defaults(func=_cmd_sample_size)

    p = sub.add_parser("sample", help="sample sentences per frame")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--frame")
    p.add_argument("--top", type=int, default=50)
    p.add_argument("--per-frame", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("assign-batches", help="assign evaluators to batches")
    p.add_argument("--evaluators", default="10",
                   help="count, or comma-separated ids")
    p.add_argument("--batches", default="10", help="count, or comma-separated ids")
    p.add_argument("--per-batch", type=int, default=3)
    p.add_argument("--pair-limit", type=int, default=2)
    p.add_argument("--triple-limit", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_assign_batches)

    p = sub.add_parser("report", help="aggregate judgments into a CSV report")
    p.add_argument("--campaign", required=True)
    p.add_argument("--judgments", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("structure", help="labelled row view of a sentence")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--sentence", help="sentence id (default: first record)")
    p.add_argument("--frame-index", type=int, default=None)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=_cmd_structure)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--campaign", required=True)
    p.add_argument("--journal", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--static", default=None, help="directory with the UI bundle")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DATA_ERRORS as exc:
        print(f"seframe: error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())

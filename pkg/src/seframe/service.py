"""HTTP service backing the human studies.

Sessions are opaque tokens bound to an evaluator; each session's task
sequence is fixed at creation: the obviously-correct gold item first, the
assigned batches in order, the obviously-wrong gold item last. Judgments
append to a JSONL journal and the whole service state rebuilds from a
replay on restart, so study data stays auditable. In correctness mode an
incorrect verdict triggers a follow-up task that reveals the original
(pre-tailoring) frame. Completion codes are a keyed hash of campaign and
evaluator, verifiable server-side and unguessable without the key.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import re
import secrets as secrets_mod
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .evaluation import (
    Campaign,
    CampaignMode,
    CorrectnessReport,
    Judgment,
    Verdict,
    correctness_report,
    load_campaign,
)


class ServiceError(Exception):
    code = "error"
    http_status = 400


class UnknownSession(ServiceError):
    code = "unknown_session"
    http_status = 404


class CampaignClosed(ServiceError):
    code = "campaign_closed"
    http_status = 409


class NoTasksRemaining(ServiceError):
    code = "no_tasks_remaining"
    http_status = 404


class OutOfOrderSubmission(ServiceError):
    code = "out_of_order_submission"
    http_status = 409


class DuplicateConflicting(ServiceError):
    code = "duplicate_conflicting"
    http_status = 409


class IncompleteSession(ServiceError):
    code = "incomplete_session"
    http_status = 409


class _Session:
    def __init__(self, token: str, evaluator: str, sequence: list):
        self.token = token
        self.evaluator = evaluator
        self.sequence = sequence  # item ids in fixed serving order
        self.verdicts: dict[str, Verdict] = {}
        self.cursor = 0
        self.pending_followup: str | None = None

    def complete(self) -> bool:
        return self.cursor >= len(self.sequence) and self.pending_followup is None


class AnnotationService:
    """Journal-backed state machine behind the HTTP endpoints."""

    def __init__(self, campaign: Campaign, journal_path, clock=time.time):
        self.campaign = campaign
        self.journal_path = Path(journal_path)
        self.clock = clock
        self.lock = threading.RLock()
        self.sessions: dict[str, _Session] = {}
        self.judgments: list[Judgment] = []
        self.secret = campaign.secret
        self._replay()
        if self.secret is None:
            self.secret = secrets_mod.token_hex(16)
            self._append({"type": "secret", "value": self.secret})

    # -- journal ----------------------------------------------------------

    def _append(self, record: dict) -> None:
        with open(self.journal_path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record) + "\n")

    def _replay(self) -> None:
        if not self.journal_path.exists():
            return
        for line in self.journal_path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            kind = record.get("type")
            if kind == "secret":
                self.secret = record["value"]
            elif kind == "session":
                self._restore_session(record["session"], record["evaluator"])
            elif kind == "judgment":
                self._apply_judgment(
                    record["session"],
                    record["item"],
                    Verdict(record["verdict"]),
                    record.get("suggested_frame"),
                    followup=record.get("followup", False),
                )

    # -- sessions ---------------------------------------------------------

    def _sequence_for(self, evaluator: str) -> list:
        first = [g.item.id for g in self.campaign.gold_items if g.position == "first"]
        last = [g.item.id for g in self.campaign.gold_items if g.position == "last"]
        middle = []
        for b in self.campaign.assignments.get(evaluator, ()):
            middle.extend(self.campaign.batches[b])
        return first + middle + last

    def _token_for(self, evaluator: str) -> str:
        digest = hmac.new(
            self.secret.encode() if self.secret else b"",
            f"session:{self.campaign.id}:{evaluator}".encode(),
            hashlib.sha256,
        )
        return digest.hexdigest()[:20]

    def _restore_session(self, token: str, evaluator: str) -> _Session:
        session = _Session(token, evaluator, self._sequence_for(evaluator))
        self.sessions[token] = session
        return session

    def create_session(self, evaluator: str) -> dict:
        with self.lock:
            if evaluator not in self.campaign.assignments:
                raise UnknownSession(f"evaluator {evaluator!r} is not part of this campaign")
            token = self._token_for(evaluator)
            if token not in self.sessions:
                self._append(
                    {
                        "type": "session",
                        "session": token,
                        "campaign": self.campaign.id,
                        "evaluator": evaluator,
                        "ts": self.clock(),
                    }
                )
                self._restore_session(token, evaluator)
            session = self.sessions[token]
            return {
                "session": token,
                "campaign": self.campaign.id,
                "mode": self.campaign.mode.value,
                "total": len(session.sequence),
                "judged": session.cursor,
            }

    def _session(self, token: str) -> _Session:
        session = self.sessions.get(token)
        if session is None:
            raise UnknownSession("no such session")
        return session

    # -- tasks ------------------------------------------------------------

    def _task_payload(self, session: _Session, item_id: str, kind: str) -> dict:
        item = self.campaign.items[item_id]
        payload = {
            "kind": kind,
            "item_id": item.id,
            "sentence": item.sentence,
            "frame": item.frame,
            "target": item.target,
            "definition": item.definition,
            "elements": [{"name": n, "text": t} for n, t in item.elements],
            "mode": self.campaign.mode.value,
            "position": session.cursor,
            "total": len(session.sequence),
        }
        if kind == "followup" and item.original_frame is not None:
            payload["original_frame"] = item.original_frame
        return payload

    def next_task(self, token: str) -> dict:
        with self.lock:
            session = self._session(token)
            if session.pending_followup is not None:
                return self._task_payload(session, session.pending_followup, "followup")
            if session.cursor >= len(session.sequence):
                raise NoTasksRemaining("session has judged every item")
            return self._task_payload(session, session.sequence[session.cursor], "task")

    def _apply_judgment(
        self, token: str, item_id: str, verdict: Verdict, suggested_frame, followup: bool
    ) -> tuple[dict, bool]:
        """Advance the session state; returns (ack, state_changed)."""
        session = self._session(token)
        ack = {"ok": True, "item_id": item_id, "recorded": verdict.value}

        if session.pending_followup is not None:
            if item_id != session.pending_followup or not followup:
                raise OutOfOrderSubmission("a follow-up for the current item is pending")
            session.verdicts[item_id] = verdict
            session.pending_followup = None
            session.cursor += 1
        else:
            current = (
                session.sequence[session.cursor]
                if session.cursor < len(session.sequence)
                else None
            )
            if item_id != current:
                previous = session.verdicts.get(item_id)
                if previous is not None:
                    if previous is verdict:
                        return ack, False  # idempotent retry
                    raise DuplicateConflicting(
                        f"item {item_id} already judged {previous.value}"
                    )
                raise OutOfOrderSubmission(f"item {item_id} is not the current task")

            session.verdicts[item_id] = verdict
            needs_followup = (
                self.campaign.mode is CampaignMode.CORRECTNESS
                and verdict is Verdict.INCORRECT
                and self.campaign.items[item_id].original_frame is not None
                and item_id not in self.campaign.gold_ids()
            )
            if needs_followup:
                session.pending_followup = item_id
            else:
                session.cursor += 1

        self.judgments.append(
            Judgment(
                evaluator=session.evaluator,
                item=item_id,
                verdict=verdict,
                suggested_frame=suggested_frame,
            )
        )
        return ack, True

    def submit_judgment(
        self, token: str, item_id: str, verdict, suggested_frame=None, followup=False
    ) -> dict:
        with self.lock:
            verdict = Verdict(verdict)
            session = self._session(token)
            if verdict not in self.campaign.expected_verdicts():
                raise ServiceError(
                    f"verdict {verdict.value} does not fit a "
                    f"{self.campaign.mode.value} campaign"
                )
            ack, changed = self._apply_judgment(
                token, item_id, verdict, suggested_frame, followup
            )
            if changed:  # idempotent retries do not re-journal
                self._append(
                    {
                        "type": "judgment",
                        "session": token,
                        "evaluator": session.evaluator,
                        "item": item_id,
                        "verdict": verdict.value,
                        "suggested_frame": suggested_frame,
                        "followup": bool(followup),
                        "ts": self.clock(),
                    }
                )
            ack["next_available"] = not session.complete()
            return ack

    # -- completion and reports -------------------------------------------

    def completion_code(self, token: str) -> dict:
        with self.lock:
            session = self._session(token)
            if not session.complete():
                raise IncompleteSession(
                    f"{session.cursor} of {len(session.sequence)} items judged"
                )
            return {
                "code": self.compute_code(session.evaluator),
                "evaluator": session.evaluator,
            }

    def compute_code(self, evaluator: str) -> str:
        digest = hmac.new(
            self.secret.encode(),
            f"completion:{self.campaign.id}:{evaluator}".encode(),
            hashlib.sha256,
        )
        return digest.hexdigest()[:12]

    def verify_code(self, evaluator: str, code: str) -> bool:
        return hmac.compare_digest(self.compute_code(evaluator), code)

    def closed(self) -> bool:
        """A campaign closes when every assigned evaluator finished."""
        with self.lock:
            for evaluator in self.campaign.assignments:
                token = self._token_for(evaluator)
                session = self.sessions.get(token)
                if session is None or not session.complete():
                    return False
            return True

    def report(self) -> CorrectnessReport:
        with self.lock:
            if not self.closed():
                raise CampaignClosed("campaign is still open; reports need a closed campaign")
            return correctness_report(self.campaign, self.judgments)


# --------------------------------------------------------------------------
# HTTP layer

_NEXT_RE = re.compile(r"^/api/campaigns/([^/]+)/next$")
_REPORT_RE = re.compile(r"^/api/reports/([^/]+)$")

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


def make_handler(service: AnnotationService, static_dir=None):
    static_root = Path(static_dir).resolve() if static_dir else None

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):  # tests stay quiet
            pass

        def _send_json(self, obj, status=200):
            body = json.dumps(obj).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_error_obj(self, exc: ServiceError):
            self._send_json(
                {"error": exc.code, "message": str(exc)}, status=exc.http_status
            )

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length", 0))
            if length == 0:
                return {}
            return json.loads(self.rfile.read(length).decode("utf-8"))

        def do_GET(self):
            parsed = urlparse(self.path)
            query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
            try:
                match = _NEXT_RE.match(parsed.path)
                if match:
                    if match.group(1) != service.campaign.id:
                        raise UnknownSession("unknown campaign")
                    self._send_json(service.next_task(query.get("session", "")))
                    return
                if parsed.path == "/api/completion-code":
                    self._send_json(service.completion_code(query.get("session", "")))
                    return
                if parsed.path == "/api/verify-code":
                    self._send_json(
                        {
                            "valid": service.verify_code(
                                query.get("evaluator", ""), query.get("code", "")
                            )
                        }
                    )
                    return
                match = _REPORT_RE.match(parsed.path)
                if match:
                    if match.group(1) != service.campaign.id:
                        raise UnknownSession("unknown campaign")
                    report = service.report()
                    self._send_json(
                        {
                            "campaign": service.campaign.id,
                            "mode": report.mode.value,
                            "rows": [
                                {
                                    "frame": r.frame,
                                    "correct": r.correct,
                                    "incorrect": r.incorrect,
                                    "original_better": r.original_better,
                                    "ratio": r.ratio,
                                }
                                for r in report.rows
                            ],
                            "overall_correct": report.overall_correct,
                            "overall_total": report.overall_total,
                            "overall_ratio": report.overall_ratio,
                            "flagged_evaluators": list(report.flagged_evaluators),
                        }
                    )
                    return
                if parsed.path == "/api/campaign":
                    self._send_json(
                        {
                            "campaign": service.campaign.id,
                            "mode": service.campaign.mode.value,
                            "closed": service.closed(),
                        }
                    )
                    return
                self._serve_static(parsed.path)
            except ServiceError as exc:
                self._send_error_obj(exc)

        def do_POST(self):
            parsed = urlparse(self.path)
            try:
                body = self._read_body()
                if parsed.path == "/api/sessions":
                    self._send_json(service.create_session(str(body.get("evaluator", ""))))
                    return
                if parsed.path == "/api/judgments":
                    self._send_json(
                        service.submit_judgment(
                            str(body.get("session", "")),
                            str(body.get("item", "")),
                            body.get("verdict", ""),
                            suggested_frame=body.get("suggested_frame"),
                            followup=bool(body.get("followup", False)),
                        )
                    )
                    return
                self._send_json({"error": "not_found"}, status=404)
            except ServiceError as exc:
                self._send_error_obj(exc)
            except (json.JSONDecodeError, ValueError) as exc:
                self._send_json({"error": "bad_request", "message": str(exc)}, status=400)

        def _serve_static(self, path: str):
            if static_root is None:
                self._send_json({"error": "not_found"}, status=404)
                return
            rel = path.lstrip("/") or "index.html"
            target = (static_root / rel).resolve()
            if not str(target).startswith(str(static_root)) or not target.is_file():
                self._send_json({"error": "not_found"}, status=404)
                return
            body = target.read_bytes()
            self.send_response(200)
            self.send_header(
                "Content-Type",
                _CONTENT_TYPES.get(target.suffix, "application/octet-stream"),
            )
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return Handler


def make_server(
    service: AnnotationService, host="127.0.0.1", port=0, static_dir=None
) -> ThreadingHTTPServer:
    return ThreadingHTTPServer((host, port), make_handler(service, static_dir))


def serve(campaign_path, journal_path, host="127.0.0.1", port=8750, static_dir=None):
    campaign = load_campaign(campaign_path)
    service = AnnotationService(campaign, journal_path)
    server = make_server(service, host, port, static_dir)
    print(f"serving campaign {campaign.id} on http://{host}:{server.server_address[1]}/")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()

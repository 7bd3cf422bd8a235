import hashlib
import hmac
import json
import threading
import urllib.error
import urllib.request

import pytest

from seframe.evaluation import Campaign, CampaignMode, GoldItem, Item, Verdict
from seframe.service import (
    AnnotationService,
    CampaignClosed,
    DuplicateConflicting,
    IncompleteSession,
    NoTasksRemaining,
    OutOfOrderSubmission,
    UnknownSession,
    make_server,
)

SECRET = "test-secret"


def make_item(item_id, frame, batch=None, original=None):
    return Item(
        id=item_id,
        sentence_id=f"sent-{item_id}",
        sentence=f"sentence shown for {item_id}",
        frame=frame,
        target={"start": 0, "end": 8, "text": "sentence"},
        definition=f"what {frame} means",
        elements=(("Target", "shown"),) if frame == "Execution" else (),
        original_frame=original,
        batch=batch,
    )


def small_campaign(mode=CampaignMode.ROBUSTNESS, evaluators=("e1", "e2"), n_items=3):
    frames = ["Using", "Execution", "Causation", "Capability", "Likelihood"][:n_items]
    original = {"name": "Arriving", "definition": "reaching a goal"}
    items = {}
    batch = []
    for frame in frames:
        item_id = f"i-{frame}"
        items[item_id] = make_item(
            item_id, frame, batch=0,
            original=original if mode is CampaignMode.CORRECTNESS else None,
        )
        batch.append(item_id)
    golds = (
        GoldItem(make_item("gold-pass", "Success_or_failure"), Verdict.CORRECT, "first"),
        GoldItem(make_item("gold-trap", "Roadways"), Verdict.INCORRECT, "last"),
    )
    for gold in golds:
        items[gold.item.id] = gold.item
    return Campaign(
        id="camp-1",
        mode=mode,
        items=items,
        batches=(tuple(batch),),
        assignments={e: (0,) for e in evaluators},
        gold_items=golds,
        secret=SECRET,
    )


@pytest.fixture()
def journal(tmp_path):
    return tmp_path / "journal.jsonl"


def run_session(service, evaluator, answer=Verdict.CORRECT, golds=(Verdict.CORRECT, Verdict.INCORRECT)):
    token = service.create_session(evaluator)["session"]
    while True:
        try:
            task = service.next_task(token)
        except NoTasksRemaining:
            break
        if task["item_id"] == "gold-pass":
            verdict = golds[0]
        elif task["item_id"] == "gold-trap":
            verdict = golds[1]
        else:
            verdict = answer
        service.submit_judgment(token, task["item_id"], verdict,
                                followup=task["kind"] == "followup")
    return token


# --- sessions and task order -----------------------------------------------------

def test_session_sequence_golds_first_and_last(journal):
    service = AnnotationService(small_campaign(), journal)
    token = service.create_session("e1")["session"]
    first = service.next_task(token)
    assert first["item_id"] == "gold-pass"
    assert first["total"] == 5  # 3 items + 2 golds
    # nothing in the payload may reveal the gold status
    assert "gold" not in json.dumps(first).replace("gold-pass", "x")


def test_create_session_unknown_evaluator(journal):
    service = AnnotationService(small_campaign(), journal)
    with pytest.raises(UnknownSession):
        service.create_session("stranger")


def test_create_session_idempotent(journal):
    service = AnnotationService(small_campaign(), journal)
    a = service.create_session("e1")
    b = service.create_session("e1")
    assert a["session"] == b["session"]


def test_next_task_replay_identical(journal):
    service = AnnotationService(small_campaign(), journal)
    token = service.create_session("e1")["session"]
    assert service.next_task(token) == service.next_task(token)


def test_submission_flow_and_ordering(journal):
    service = AnnotationService(small_campaign(), journal)
    token = service.create_session("e1")["session"]
    task = service.next_task(token)

    with pytest.raises(OutOfOrderSubmission):
        service.submit_judgment(token, "i-Using", Verdict.CORRECT)

    ack = service.submit_judgment(token, task["item_id"], Verdict.CORRECT)
    assert ack["ok"] and ack["next_available"]

    # idempotent retry of the same verdict
    again = service.submit_judgment(token, task["item_id"], Verdict.CORRECT)
    assert again["ok"]

    with pytest.raises(DuplicateConflicting):
        service.submit_judgment(token, task["item_id"], Verdict.INCORRECT)


def test_wrong_verdict_family_rejected(journal):
    from seframe.service import ServiceError

    service = AnnotationService(small_campaign(), journal)
    token = service.create_session("e1")["session"]
    task = service.next_task(token)
    with pytest.raises(ServiceError):
        service.submit_judgment(token, task["item_id"], Verdict.VALID)


def test_exhausted_session_raises(journal):
    service = AnnotationService(small_campaign(), journal)
    token = run_session(service, "e1")
    with pytest.raises(NoTasksRemaining):
        service.next_task(token)


# --- correctness follow-up ----------------------------------------------------------

def test_incorrect_triggers_followup_with_original_frame(journal):
    service = AnnotationService(small_campaign(mode=CampaignMode.CORRECTNESS), journal)
    token = service.create_session("e1")["session"]
    service.submit_judgment(token, "gold-pass", Verdict.CORRECT)

    task = service.next_task(token)
    assert task["kind"] == "task"
    service.submit_judgment(token, task["item_id"], Verdict.INCORRECT)

    followup = service.next_task(token)
    assert followup["kind"] == "followup"
    assert followup["item_id"] == task["item_id"]
    assert followup["original_frame"] == {"name": "Arriving", "definition": "reaching a goal"}

    with pytest.raises(OutOfOrderSubmission):
        service.submit_judgment(token, "i-Execution", Verdict.CORRECT)

    service.submit_judgment(
        token, task["item_id"], Verdict.INCORRECT_ORIGINAL_BETTER, followup=True
    )
    assert service.next_task(token)["item_id"] != task["item_id"]
    # last write wins for the item
    latest = {(j.evaluator, j.item): j.verdict for j in service.judgments}
    assert latest[("e1", task["item_id"])] is Verdict.INCORRECT_ORIGINAL_BETTER


# --- completion codes -----------------------------------------------------------------

def test_completion_code_requires_finished_session(journal):
    service = AnnotationService(small_campaign(), journal)
    token = service.create_session("e1")["session"]
    with pytest.raises(IncompleteSession):
        service.completion_code(token)


def test_completion_code_keyed_hash(journal):
    service = AnnotationService(small_campaign(), journal)
    token = run_session(service, "e1")
    code = service.completion_code(token)["code"]
    assert len(code) == 12
    # independent recomputation of the documented keyed hash
    expected = hmac.new(
        SECRET.encode(), b"completion:camp-1:e1", hashlib.sha256
    ).hexdigest()[:12]
    assert code == expected
    assert service.verify_code("e1", code)
    assert not service.verify_code("e2", code)


def test_completion_codes_distinct_per_evaluator(journal):
    service = AnnotationService(small_campaign(), journal)
    t1 = run_session(service, "e1")
    t2 = run_session(service, "e2")
    assert service.completion_code(t1)["code"] != service.completion_code(t2)["code"]


# --- journal replay ---------------------------------------------------------------------

def test_restart_resumes_sessions_and_state(journal):
    campaign = small_campaign()
    service = AnnotationService(campaign, journal)
    token = service.create_session("e1")["session"]
    service.submit_judgment(token, "gold-pass", Verdict.CORRECT)
    service.submit_judgment(token, "i-Using", Verdict.CORRECT)
    current = service.next_task(token)

    resumed = AnnotationService(campaign, journal)
    assert resumed.next_task(token) == current
    assert resumed.secret == service.secret


def test_report_only_for_closed_campaign(journal):
    campaign = small_campaign()
    service = AnnotationService(campaign, journal)
    run_session(service, "e1")
    with pytest.raises(CampaignClosed):
        service.report()
    run_session(service, "e2", golds=(Verdict.CORRECT, Verdict.CORRECT))
    report = service.report()
    assert report.flagged_evaluators == ("e2",)
    assert {r.frame for r in report.rows} <= {"Using", "Execution", "Causation"}


def test_generated_secret_persisted(tmp_path):
    campaign = Campaign(
        id="nosecret",
        mode=CampaignMode.ROBUSTNESS,
        items={"i": make_item("i", "Using", batch=0)},
        batches=(("i",),),
        assignments={"e1": (0,)},
    )
    journal = tmp_path / "j.jsonl"
    service = AnnotationService(campaign, journal)
    assert service.secret
    resumed = AnnotationService(campaign, journal)
    assert resumed.secret == service.secret


# --- HTTP layer ---------------------------------------------------------------------------

@pytest.fixture()
def http_service(journal, tmp_path):
    static = tmp_path / "static"
    static.mkdir()
    (static / "index.html").write_text("<!doctype html><title>tasks</title>")
    service = AnnotationService(small_campaign(), journal)
    server = make_server(service, port=0, static_dir=static)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    yield base
    server.shutdown()
    server.server_close()
    thread.join(timeout=2)


def http(base, path, payload=None):
    if payload is None:
        request = urllib.request.Request(base + path)
    else:
        request = urllib.request.Request(
            base + path,
            data=json.dumps(payload).encode(),
            headers={"Content-Type": "application/json"},
        )
    with urllib.request.urlopen(request) as response:
        return json.loads(response.read())


def test_http_full_session(http_service):
    base = http_service
    session = http(base, "/api/sessions", {"evaluator": "e1"})["session"]
    judged = 0
    while True:
        try:
            task = http(base, f"/api/campaigns/camp-1/next?session={session}")
        except urllib.error.HTTPError as err:
            assert err.code == 404
            assert json.loads(err.read())["error"] == "no_tasks_remaining"
            break
        verdict = "incorrect" if task["item_id"] == "gold-trap" else "correct"
        ack = http(base, "/api/judgments",
                   {"session": session, "item": task["item_id"], "verdict": verdict})
        assert ack["ok"]
        judged += 1
    assert judged == 5
    code = http(base, f"/api/completion-code?session={session}")["code"]
    assert len(code) == 12


def test_http_error_shapes(http_service):
    base = http_service
    with pytest.raises(urllib.error.HTTPError) as err:
        http(base, "/api/campaigns/camp-1/next?session=bogus")
    assert err.value.code == 404

    with pytest.raises(urllib.error.HTTPError) as err:
        http(base, "/api/reports/camp-1")
    assert err.value.code == 409
    assert json.loads(err.value.read())["error"] == "campaign_closed"


def test_http_verify_code(http_service):
    base = http_service
    session = http(base, "/api/sessions", {"evaluator": "e1"})["session"]
    while True:
        try:
            task = http(base, f"/api/campaigns/camp-1/next?session={session}")
        except urllib.error.HTTPError:
            break
        verdict = "incorrect" if task["item_id"] == "gold-trap" else "correct"
        http(base, "/api/judgments",
             {"session": session, "item": task["item_id"], "verdict": verdict})
    code = http(base, f"/api/completion-code?session={session}")["code"]
    assert http(base, f"/api/verify-code?evaluator=e1&code={code}") == {"valid": True}
    assert http(base, f"/api/verify-code?evaluator=e2&code={code}") == {"valid": False}


def test_http_static_mount(http_service):
    request = urllib.request.Request(http_service + "/index.html")
    with urllib.request.urlopen(request) as response:
        body = response.read().decode()
    assert "tasks" in body
    with pytest.raises(urllib.error.HTTPError):
        http(http_service, "/../etc/passwd")

"""Loopback HTTP/JSON API backing the trainer UI.

Thin by construction: every behavior is a call into the training session.
Mutating requests serialize onto one session lock; the confirm flow (reload
gate, escalation, next-page check, auto-advance) runs on a single worker
thread because it can block on operator prompts, which the UI answers via
POST /prompt/answer while polling GET /session/state.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .dom import absolute_path
from .errors import Busy, CrawlerError, NoNextPage, WrongPageState
from .fetch import TicketBundle
from .locators import Locator, NeedsManual, resolve
from .training import DONE, PENDING, STABILITY_CHECK, TrainingSession
from .xpath import evaluate_xpath

logger = logging.getLogger(__name__)


def _locator_json(outcome: Locator | NeedsManual) -> dict:
    if isinstance(outcome, NeedsManual):
        return {"needs_manual": True,
                "failures": [[s.name, msg] for s, msg in outcome.failures]}
    return {"needs_manual": False, "locator": outcome.to_dict()}


class TrainingService:
    """Session plus the prompt mailbox and the single confirm worker."""

    def __init__(self, session: TrainingSession) -> None:
        self.session = session
        session.prompter = self._prompt
        self._lock = threading.RLock()
        self._worker: threading.Thread | None = None
        self._prompt_cv = threading.Condition()
        self.pending_prompt: dict | None = None
        self._answer: str | None = None
        self.last_gate: dict | None = None
        self.last_error: str | None = None

    # --- prompts (worker thread blocks here; UI answers over HTTP) ---

    def _prompt(self, kind: str, message: str) -> str:
        with self._prompt_cv:
            self.pending_prompt = {"kind": kind, "message": message}
            while self._answer is None:
                self._prompt_cv.wait(timeout=0.5)
            answer, self._answer = self._answer, None
            self.pending_prompt = None
            return answer

    def answer_prompt(self, answer: str) -> None:
        with self._prompt_cv:
            if self.pending_prompt is None:
                raise WrongPageState("no prompt is pending")
            self._answer = answer
            self._prompt_cv.notify_all()

    # --- serialized session calls ---

    def call(self, fn, *args, **kwargs):
        if not self._lock.acquire(blocking=False):
            raise Busy("a long-running training step is in progress")
        try:
            return fn(*args, **kwargs)
        finally:
            self._lock.release()

    @property
    def busy(self) -> bool:
        return self._worker is not None and self._worker.is_alive()

    def start_confirm_flow(self, page_type: str) -> None:
        """confirm -> stability gate -> next-page check -> advance queue."""
        if self.busy:
            raise Busy("confirm flow already running")
        self.call(self.session.confirm_page, page_type)

        def flow() -> None:
            with self._lock:
                try:
                    result = self.session.run_stability_gate(page_type)
                    self.last_gate = {
                        "page_type": page_type,
                        "passed": result.passed,
                        "escalated": {k: v.to_dict()
                                      for k, v in result.escalated.items()},
                        "needs_manual": sorted(result.needs_manual),
                        "dropped": list(result.dropped),
                        "exhausted": result.exhausted,
                        "outcomes": {
                            label: {"status": o.status, "surplus": o.surplus}
                            for label, o in (result.report.outcomes.items()
                                             if result.report else ())},
                    }
                    if result.passed and \
                            self.session.page_state(page_type) == STABILITY_CHECK:
                        try:
                            self.session.verify_next_navigation(page_type)
                        except NoNextPage:
                            pass
                    if self.session.page_state(page_type) == DONE:
                        upcoming = self.session.current_page()
                        if upcoming and \
                                self.session.page_state(upcoming[0]) == PENDING:
                            self.session.load_page(upcoming[0])
                except CrawlerError as exc:
                    self.last_error = str(exc)

        self._worker = threading.Thread(target=flow, daemon=True)
        self._worker.start()

    # --- views ---

    def state_json(self) -> dict:
        session = self.session
        current = session.current_page()
        return {
            "queue": [{"page_type": pt, "url": url,
                       "state": session.states[pt]}
                      for pt, url in session.queue],
            "current": current[0] if current else None,
            "busy": self.busy,
            "pending_prompt": self.pending_prompt,
            "last_gate": self.last_gate,
            "last_error": self.last_error,
            "notes": list(session.notes),
            "manual_pending": {pt: sorted(labels)
                               for pt, labels in session.manual_pending.items()
                               if labels},
            "locators": {pt: {label: loc.to_dict()
                              for label, loc in locs.items()}
                         for pt, locs in session.locators.items()},
            "assignments": {pt: {label: list(paths)
                                 for label, paths in labels.items()}
                            for pt, labels in session.assignments.items()},
        }

    def current_page_json(self, page_type: str | None = None) -> dict:
        if page_type is None:
            current = self.session.current_page()
            if current is None:
                return {"page_type": None, "url": None, "html": None,
                        "state": None}
            page_type = current[0]
        url = dict(self.session.queue).get(page_type)
        handle = self.session.handles.get(page_type)
        html = None
        if handle is not None:
            html = handle.snapshot.raw_bytes.decode("utf-8", "replace")
        return {"page_type": page_type, "url": url, "html": html,
                "state": self.session.states.get(page_type)}

    def resolve_preview(self, expression: str | None,
                        page_type: str | None = None,
                        label: str | None = None) -> list[str]:
        """Paths matched by a raw expression, or by a trained label's
        locator with its ignore list applied."""
        if page_type is None:
            current = self.session.current_page()
            if current is None:
                raise WrongPageState("no current page to resolve against")
            page_type = current[0]
        snapshot = self.session.snapshots.get(page_type)
        if snapshot is None:
            raise WrongPageState(f"{page_type} has not been loaded")
        if label is not None:
            locator = self.session.locators.get(page_type, {}).get(label)
            if locator is None:
                raise ValueError(f"{label} has no trained locator on {page_type}")
            nodes = resolve(snapshot, locator)
        else:
            if not expression:
                raise ValueError("expr or label query parameter required")
            nodes = evaluate_xpath(snapshot, expression)
        return [absolute_path(snapshot, node).serialize() for node in nodes]


class _Routes:
    """Route table translating HTTP verbs/paths onto the service."""

    def __init__(self, service: TrainingService) -> None:
        self.service = service

    def get(self, path: str, query: dict):
        service = self.service
        if path == "/session/state":
            return service.state_json()
        if path == "/page/current":
            return service.current_page_json(
                (query.get("page_type") or [None])[0])
        if path == "/resolve":
            expr = (query.get("expr") or [None])[0]
            page_type = (query.get("page_type") or [None])[0]
            label = (query.get("label") or [None])[0]
            return {"paths": service.resolve_preview(expr, page_type, label)}
        return None

    def post(self, path: str, body: dict):
        service = self.service
        session = service.session
        if path == "/page/load":
            page_type = body.get("page_type") or \
                (session.current_page() or (None,))[0]
            service.call(session.load_page, page_type)
            return {"state": session.page_state(page_type)}
        if path == "/page/labels":
            results = service.call(
                session.submit_labels, body["page_type"],
                body.get("assignments", {}), body.get("date_formats"))
            return {label: _locator_json(out) for label, out in results.items()}
        if path == "/page/ignore":
            results = service.call(
                session.correct_labels, body["page_type"],
                ignore={body["label"]: body.get("paths", [])})
            return {label: _locator_json(out) for label, out in results.items()}
        if path == "/page/retrain":
            results = service.call(
                session.correct_labels, body["page_type"],
                retrain=tuple(body.get("labels", ())))
            return {label: _locator_json(out) for label, out in results.items()}
        if path == "/page/manual-xpath":
            locator = service.call(
                session.submit_manual_xpath, body["page_type"],
                body["label"], body["expr"])
            return _locator_json(locator)
        if path == "/page/script":
            handle = service.call(
                session.attach_script, body["page_type"],
                body.get("source", ""), not body.get("dry_run", False))
            return {"html": handle.snapshot.raw_bytes.decode("utf-8", "replace")}
        if path == "/page/confirm":
            service.start_confirm_flow(body["page_type"])
            return {"state": session.page_state(body["page_type"])}
        if path == "/page/reset":
            service.call(session.correct_labels, body["page_type"], reset=True)
            return {"state": session.page_state(body["page_type"])}
        if path == "/prompt/answer":
            service.answer_prompt(body.get("answer", ""))
            return {"accepted": True}
        if path == "/tickets":
            bundle = TicketBundle(tuple((k, v) for k, v in body.get("pairs", [])))
            session.adapter.inject_tickets(bundle)
            return {"injected": len(bundle.pairs)}
        if path == "/profile/finalize":
            profile = service.call(session.finalize_profile)
            return profile.to_dict()
        return None


def serve_api(service: TrainingService, host: str = "127.0.0.1",
              port: int = 0, ui_dir: str | Path | None = None,
              ) -> ThreadingHTTPServer:
    """Bind the API to loopback; port 0 picks an ephemeral one."""
    routes = _Routes(service)
    static_root = Path(ui_dir) if ui_dir else None

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):
            logger.debug("api: %s", args)

        def _send(self, payload: dict, status: int = 200) -> None:
            body = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_static(self, rel: str) -> bool:
            if static_root is None:
                return False
            candidate = (static_root / rel.lstrip("/")).resolve()
            if not str(candidate).startswith(str(static_root.resolve())):
                return False
            if candidate.is_dir():
                candidate = candidate / "index.html"
            if not candidate.is_file():
                return False
            types = {".html": "text/html", ".js": "text/javascript",
                     ".css": "text/css", ".map": "application/json"}
            body = candidate.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type",
                             types.get(candidate.suffix, "application/octet-stream"))
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return True

        def _handle(self, verb: str) -> None:
            parsed = urlparse(self.path)
            try:
                if verb == "GET":
                    result = routes.get(parsed.path, parse_qs(parsed.query))
                    if result is None and self._send_static(parsed.path):
                        return
                else:
                    length = int(self.headers.get("Content-Length") or 0)
                    body = json.loads(self.rfile.read(length)) if length else {}
                    result = routes.post(parsed.path, body)
                if result is None:
                    self._send({"error": f"no such endpoint {parsed.path}"}, 404)
                    return
                self._send(result)
            except (WrongPageState, Busy) as exc:
                self._send({"error": str(exc)}, 409)
            except (KeyError, ValueError, CrawlerError) as exc:
                self._send({"error": f"{type(exc).__name__}: {exc}"}, 422)

        def do_GET(self):
            self._handle("GET")

        def do_POST(self):
            self._handle("POST")

    server = ThreadingHTTPServer((host, port), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server

"""Live adapter speaking the W3C WebDriver wire protocol over HTTP.

Drives a real browser through a local driver endpoint (geckodriver or
compatible), optionally through a SOCKS proxy. Load completion is an
explicit criterion (readyState poll plus a settle window under a hard
timeout) so a stuck navigation surfaces as Timeout instead of hanging.
Clicks resolve locators against the local snapshot first, then address the
chosen node in the browser by its absolute path, so ignore lists behave
identically to the fixture adapter.
"""

from __future__ import annotations

import json
from typing import Callable

import requests

from .clock import Clock, SystemClock
from .dom import DomSnapshot, absolute_path, parse_snapshot
from .errors import (
    InjectionFailed,
    MaskFailed,
    NetworkError,
    NotFound,
    ScriptError,
    Timeout,
)
from .fetch import (
    CaptchaMarker,
    DEFAULT_CAPTCHA_MARKERS,
    FetchAdapter,
    PageHandle,
    PromptCallback,
    TicketBundle,
    validate_ticket_bundle,
)
from .locators import Locator, resolve

ELEMENT_KEY = "element-6066-11e4-a52e-4f735466cecf"

MASK_AUTOMATION_SCRIPT = (
    "Object.defineProperty(navigator, 'webdriver', "
    "{get: () => undefined}); return true;"
)


class WebDriverAdapter(FetchAdapter):
    def __init__(self, driver_url: str,
                 clock: Clock | None = None,
                 proxy: str | None = None,
                 load_timeout_s: float = 60.0,
                 settle_s: float = 0.5,
                 mask: bool = True,
                 download_images: bool = True,
                 archiver: Callable[[str, bytes], str] | None = None,
                 markers: tuple[CaptchaMarker, ...] = DEFAULT_CAPTCHA_MARKERS,
                 prompter: PromptCallback | None = None) -> None:
        super().__init__(markers=markers, prompter=prompter)
        self.driver_url = driver_url.rstrip("/")
        self.clock = clock or SystemClock()
        self.proxy = proxy
        self.load_timeout_s = load_timeout_s
        self.settle_s = settle_s
        self.mask = mask
        self.download_images = download_images
        self.archiver = archiver
        self.session_id: str | None = None
        self._http = requests.Session()

    # --- wire plumbing ---

    def _request(self, method: str, path: str, payload: dict | None = None):
        url = f"{self.driver_url}{path}"
        try:
            response = self._http.request(
                method, url,
                data=json.dumps(payload) if payload is not None else None,
                headers={"Content-Type": "application/json"},
                timeout=self.load_timeout_s + 10)
        except requests.RequestException as exc:
            raise NetworkError(f"wire request failed: {exc}") from exc
        try:
            body = response.json()
        except ValueError as exc:
            raise NetworkError(f"non-JSON driver response: {exc}") from exc
        value = body.get("value")
        if response.status_code >= 400 or (
                isinstance(value, dict) and "error" in value):
            error = (value or {}).get("error", f"http {response.status_code}")
            message = (value or {}).get("message", "")
            if error == "no such element":
                raise NotFound(message or error)
            if error in ("javascript error", "script timeout"):
                raise ScriptError(message or error)
            if error == "timeout":
                raise Timeout(message or error)
            raise NetworkError(f"{error}: {message}")
        return value

    def _session_path(self, suffix: str = "") -> str:
        return f"/session/{self.session_id}{suffix}"

    # --- session lifecycle ---

    def start(self) -> None:
        always_match: dict = {}
        if self.proxy:
            host = self.proxy.split("://", 1)[-1]
            always_match["proxy"] = {"proxyType": "manual",
                                     "socksProxy": host,
                                     "socksVersion": 5}
        if not self.download_images:
            always_match.setdefault("moz:firefoxOptions", {})["prefs"] = {
                "permissions.default.image": 2}
        value = self._request("POST", "/session",
                              {"capabilities": {"alwaysMatch": always_match}})
        self.session_id = value["sessionId"]
        if self.mask:
            self.mask_automation()

    def close(self) -> None:
        if self.session_id is not None:
            try:
                self._request("DELETE", self._session_path())
            except NetworkError:
                pass
            self.session_id = None

    # --- navigation and snapshots ---

    def _execute(self, script: str, args: list | None = None):
        return self._request("POST", self._session_path("/execute/sync"),
                             {"script": script, "args": args or []})

    def _wait_ready(self) -> None:
        waited = 0.0
        while waited <= self.load_timeout_s:
            state = self._execute("return document.readyState;")
            if state == "complete":
                self.clock.sleep(self.settle_s)  # quiescence window
                return
            self.clock.sleep(0.1)
            waited += 0.1
        raise Timeout(f"page did not reach readyState=complete "
                      f"within {self.load_timeout_s}s")

    def _snapshot(self) -> tuple[str, DomSnapshot]:
        url = self._request("GET", self._session_path("/url"))
        source = self._request("GET", self._session_path("/source"))
        raw = source.encode("utf-8")
        snapshot = parse_snapshot(raw, url, fetched_at=self.clock.now())
        return url, snapshot

    def _refresh_handle(self, handle: PageHandle | None) -> PageHandle:
        if self.mask:
            self._install_mask()
        url, snapshot = self._snapshot()
        archive_path = None
        if self.archiver is not None:
            archive_path = self.archiver(url, snapshot.raw_bytes)
        if handle is None:
            return PageHandle(self.session_id or "", url, snapshot, archive_path)
        handle.current_url = url
        handle.snapshot = snapshot
        handle.archive_path = archive_path
        return handle

    def open(self, url: str) -> PageHandle:
        with self._navigation():
            try:
                self._request("POST", self._session_path("/url"), {"url": url})
                self._wait_ready()
            except (NetworkError, Timeout):
                self.log(url, self.clock.now(), "error:network")
                raise
            self.log(url, self.clock.now(), "ok")
            return self._refresh_handle(None)

    def _element_for(self, handle: PageHandle, locator: Locator) -> str:
        nodes = resolve(handle.snapshot, locator)
        if not nodes:
            raise NotFound(f"no match for {locator.expr.expression}")
        path = absolute_path(handle.snapshot, nodes[0]).serialize()
        value = self._request("POST", self._session_path("/element"),
                              {"using": "xpath", "value": path})
        return value[ELEMENT_KEY]

    def click(self, handle: PageHandle, locator: Locator) -> PageHandle:
        with self._navigation():
            element = self._element_for(handle, locator)
            self._request("POST",
                          self._session_path(f"/element/{element}/click"), {})
            self._wait_ready()
            handle = self._refresh_handle(handle)
            self.log(handle.current_url, self.clock.now(), "ok")
            return handle

    def fill(self, handle: PageHandle, locator: Locator, text: str) -> None:
        element = self._element_for(handle, locator)
        self._request("POST", self._session_path(f"/element/{element}/clear"), {})
        self._request("POST", self._session_path(f"/element/{element}/value"),
                      {"text": text})

    def execute_script(self, handle: PageHandle, source: str) -> PageHandle:
        if not source.strip():
            return handle
        self._execute(source)
        return self._refresh_handle(handle)

    # --- countermeasure plumbing ---

    def _install_mask(self) -> None:
        try:
            self._execute(MASK_AUTOMATION_SCRIPT)
        except (NetworkError, ScriptError) as exc:
            raise MaskFailed(f"could not install automation mask: {exc}") from exc

    def mask_automation(self) -> None:
        self._install_mask()

    def inject_tickets(self, bundle: TicketBundle) -> None:
        validate_ticket_bundle(bundle)
        failures: list[tuple[str, str]] = []
        for key, value in bundle.pairs:
            script = ("window.localStorage.setItem(arguments[0], arguments[1]);"
                      " return true;")
            try:
                self._execute(script, [key, value])
            except (NetworkError, ScriptError):
                failures.append((key, value))
        if failures:
            raise InjectionFailed(failures)

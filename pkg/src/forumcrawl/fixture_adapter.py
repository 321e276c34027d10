"""Adapter serving an on-disk synthetic forum with scripted dynamic behaviors.

The fixture directory holds plain HTML files plus a manifest.json declaring
the adversarial behaviors a page exhibits, so every anti-crawler case is
reproducible offline:

  id_randomization   __UID__ tokens re-rolled to _xfUid-1-<n> on every serve
  ticket_gate        listed pages serve the interstitial until all required
                     ticket keys have been injected
  fail_first         first N opens of a page raise NetworkError
  mutate_after_visit page serves a variant file from its second serve onward
  script_effects     execute_script swaps in a variant when the submitted
                     source clicks a declared XPath or contains a marker
  auth               credential check wired to the login button

Scripts cannot actually run here; a cheap bracket/quote balance check stands
in for the browser's syntax errors.
"""

from __future__ import annotations

import itertools
import json
import re
from pathlib import Path
from typing import Callable
from urllib.parse import urljoin, urlparse

from .clock import Clock, SystemClock
from .dom import DomSnapshot, parse_snapshot
from .errors import NetworkError, NotFound, ScriptError
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

_UID_TOKEN = "__UID__"
_SCRIPT_XPATH_RE = re.compile(r"""document\.evaluate\(\s*(['"])(.*?)\1""")


class FixtureAdapter(FetchAdapter):
    """Serves fixture pages as if they were a live forum."""

    def __init__(self, root: str | Path,
                 clock: Clock | None = None,
                 download_images: bool = True,
                 archiver: Callable[[str, bytes], str] | None = None,
                 markers: tuple[CaptchaMarker, ...] = DEFAULT_CAPTCHA_MARKERS,
                 prompter: PromptCallback | None = None) -> None:
        super().__init__(markers=markers, prompter=prompter)
        self.root = Path(root)
        self.clock = clock or SystemClock()
        self.download_images = download_images
        self.archiver = archiver
        manifest_path = self.root / "manifest.json"
        self.manifest: dict = (json.loads(manifest_path.read_text(encoding="utf-8"))
                               if manifest_path.exists() else {})
        self.host = self.manifest.get("host", "fixture.forum")
        self.base_url = f"https://{self.host}/"
        self._started = False
        self._serve_counts: dict[str, int] = {}
        self._uid_counter = itertools.count(1_655_700_000)
        self._tickets: dict[str, str] = {}
        self._form_values: dict[str, str] = {}
        self._masked = False

    # --- session ---

    def start(self) -> None:
        self._started = True

    def close(self) -> None:
        self._started = False

    def url_for(self, page: str) -> str:
        return urljoin(self.base_url, page)

    def _page_path(self, url: str) -> str:
        parsed = urlparse(url)
        return parsed.path.lstrip("/")

    # --- serving pipeline ---

    def _serve_bytes(self, page: str) -> tuple[bytes, str]:
        """Raw bytes for a page after all manifest behaviors, plus an outcome."""
        fails = self.manifest.get("fail_first", {})
        if page in fails and self._serve_counts.get("fail:" + page, 0) < fails[page]:
            self._serve_counts["fail:" + page] = \
                self._serve_counts.get("fail:" + page, 0) + 1
            raise NetworkError(f"injected failure for {page}")

        gate = self.manifest.get("ticket_gate")
        if gate and page in gate.get("pages", ()):
            required = gate.get("required_keys", ())
            if not all(key in self._tickets for key in required):
                interstitial = self.root / gate["interstitial"]
                return interstitial.read_bytes(), "interstitial"

        serves = self._serve_counts.get(page, 0)
        self._serve_counts[page] = serves + 1
        mutations = self.manifest.get("mutate_after_visit", {})
        file_name = page
        if page in mutations and serves >= 1:
            file_name = mutations[page]
        path = self.root / file_name
        if not path.exists():
            raise NetworkError(f"no such fixture page: {file_name}")
        raw = path.read_bytes()

        randomized = self.manifest.get("id_randomization", {})
        if page in randomized.get("pages", ()):
            # Each occurrence gets its own value, re-rolled on every serve.
            raw = re.sub(
                _UID_TOKEN.encode(),
                lambda _: f"_xfUid-1-{next(self._uid_counter)}".encode(),
                raw)
        return raw, "ok"

    def _snapshot_page(self, url: str, raw: bytes) -> DomSnapshot:
        return parse_snapshot(raw, url, fetched_at=self.clock.now())

    def _log_images(self, snapshot: DomSnapshot, url: str) -> None:
        if not self.download_images:
            return
        for img in snapshot.by_tag("img"):
            src = img.attrs.get("src")
            if src:
                self.log(urljoin(url, src), self.clock.now(), "image")

    def _load(self, url: str, handle: PageHandle | None) -> PageHandle:
        page = self._page_path(url)
        try:
            raw, outcome = self._serve_bytes(page)
        except NetworkError:
            self.log(url, self.clock.now(), "error:network")
            raise
        self.log(url, self.clock.now(), outcome)
        snapshot = self._snapshot_page(url, raw)
        archive_path = None
        if self.archiver is not None:
            archive_path = self.archiver(url, raw)
        if handle is None:
            handle = PageHandle("fixture-1", url, snapshot, archive_path)
        else:
            handle.current_url = url
            handle.snapshot = snapshot
            handle.archive_path = archive_path
        self._log_images(snapshot, url)
        return handle

    # --- adapter surface ---

    def open(self, url: str) -> PageHandle:
        with self._navigation():
            return self._load(url, None)

    def reload(self, handle: PageHandle) -> PageHandle:
        with self._navigation():
            return self._load(handle.current_url, handle)

    def click(self, handle: PageHandle, locator: Locator) -> PageHandle:
        with self._navigation():
            nodes = resolve(handle.snapshot, locator)
            if not nodes:
                raise NotFound(f"no match for {locator.expr.expression}")
            node = nodes[0]
            if node.tag == "a" and node.attrs.get("href"):
                target = urljoin(handle.current_url, node.attrs["href"])
                return self._load(target, handle)
            if node.attrs.get("type") == "submit" or node.tag == "button":
                return self._submit_login(handle)
            return handle  # click with no navigation effect

    def fill(self, handle: PageHandle, locator: Locator, text: str) -> None:
        nodes = resolve(handle.snapshot, locator)
        if not nodes:
            raise NotFound(f"no match for {locator.expr.expression}")
        name = nodes[0].attrs.get("name") or nodes[0].attrs.get("id") or "field"
        self._form_values[name] = text

    def _submit_login(self, handle: PageHandle) -> PageHandle:
        auth = self.manifest.get("auth")
        if not auth:
            return handle
        expected = (auth.get("username", ""), auth.get("secret", ""))
        got = tuple(self._form_values.get(k, "") for k in auth.get("fields",
                    ("username", "password")))
        target = auth["success"] if got == expected else auth["failure"]
        return self._load(self.url_for(target), handle)

    def execute_script(self, handle: PageHandle, source: str) -> PageHandle:
        if not source.strip():
            return handle
        _check_script_syntax(source)
        page = self._page_path(handle.current_url)
        effects = self.manifest.get("script_effects", {}).get(page, ())
        clicked = set(m.group(2) for m in _SCRIPT_XPATH_RE.finditer(source))
        for effect in effects:
            required = effect.get("xpaths", ())
            marker = effect.get("substring")
            xpath_hit = required and all(x in clicked or x in source
                                         for x in required)
            marker_hit = marker is not None and marker in source
            if xpath_hit or marker_hit:
                raw = (self.root / effect["variant"]).read_bytes()
                handle.snapshot = self._snapshot_page(handle.current_url, raw)
                if self.archiver is not None:
                    handle.archive_path = self.archiver(handle.current_url, raw)
                break
        return handle

    def inject_tickets(self, bundle: TicketBundle) -> None:
        validate_ticket_bundle(bundle)
        for key, value in bundle.pairs:
            self._tickets[key] = value

    def mask_automation(self) -> None:
        self._masked = True  # fixtures never expose the flag; no-op success


def _check_script_syntax(source: str) -> None:
    """Bracket/quote balance sanity check standing in for a JS parser."""
    pairs = {")": "(", "]": "[", "}": "{"}
    stack: list[str] = []
    quote: str | None = None
    prev = ""
    for ch in source:
        if quote is not None:
            if ch == quote and prev != "\\":
                quote = None
        elif ch in "'\"`":
            quote = ch
        elif ch in "([{":
            stack.append(ch)
        elif ch in ")]}":
            if not stack or stack.pop() != pairs[ch]:
                raise ScriptError(f"unbalanced {ch!r} in injected script")
        prev = ch
    if stack or quote is not None:
        raise ScriptError("unterminated bracket or quote in injected script")

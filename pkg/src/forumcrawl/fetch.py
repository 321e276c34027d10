"""Page-acquisition abstraction shared by the fixture and live adapters.

One adapter session drives one logical navigator; every network-bound action
appends exactly one fetch-log entry, concurrent navigation on one session
fails fast with Busy, and CAPTCHA detection runs over the already-parsed
snapshot against a configurable marker table.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime
from typing import Callable, Mapping

from .dom import DomSnapshot
from .errors import Busy, InjectionFailed, LoginFailed
from .locators import Locator, resolve
from .profile import LOGIN_BUTTON, PASSWORD_FIELD, USERNAME_FIELD

INTERSTITIAL_CHALLENGE = "interstitial_challenge"
INLINE_WIDGET = "inline_widget"

PROMPT_CAPTCHA = "captcha"
PROMPT_STILL_VISIBLE = "still_visible"

# Answer an operator gives once a CAPTCHA is solved in the browser.
CAPTCHA_SOLVED_ANSWER = "solved"

PromptCallback = Callable[[str, str], str]


@dataclass
class PageHandle:
    session_id: str
    current_url: str
    snapshot: DomSnapshot
    archive_path: str | None = None


@dataclass(frozen=True)
class TicketBundle:
    """Challenge-bypass tickets as ordered key-value pairs."""

    pairs: tuple[tuple[str, str], ...]

    CLOUDFLARE_KEYS = ("cf-commitment-2.58", "cf-tokens")

    def keys(self) -> list[str]:
        return [k for k, _ in self.pairs]

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "TicketBundle":
        return cls(tuple(mapping.items()))


@dataclass(frozen=True)
class CaptchaSignal:
    kind: str  # INTERSTITIAL_CHALLENGE | INLINE_WIDGET
    matched_marker: str


@dataclass(frozen=True)
class CaptchaMarker:
    kind: str
    where: str  # "title" | "class" | attribute name prefixed "attr:"
    pattern: str  # lowercase substring


DEFAULT_CAPTCHA_MARKERS: tuple[CaptchaMarker, ...] = (
    CaptchaMarker(INTERSTITIAL_CHALLENGE, "title", "just a moment"),
    CaptchaMarker(INTERSTITIAL_CHALLENGE, "title", "attention required"),
    CaptchaMarker(INTERSTITIAL_CHALLENGE, "title", "checking your browser"),
    CaptchaMarker(INTERSTITIAL_CHALLENGE, "class", "cf-challenge"),
    CaptchaMarker(INLINE_WIDGET, "class", "g-recaptcha"),
    CaptchaMarker(INLINE_WIDGET, "class", "h-captcha"),
    CaptchaMarker(INLINE_WIDGET, "attr:data-sitekey", ""),
)


def detect_captcha(snapshot: DomSnapshot,
                   markers: tuple[CaptchaMarker, ...] = DEFAULT_CAPTCHA_MARKERS,
                   ) -> CaptchaSignal | None:
    """First marker hit wins; None on a clean page."""
    titles = snapshot.by_tag("title")
    title_text = " ".join(
        "".join(t.data for t in el.children if hasattr(t, "data"))
        for el in titles).lower()
    for marker in markers:
        if marker.where == "title":
            if marker.pattern in title_text:
                return CaptchaSignal(marker.kind, marker.pattern)
        elif marker.where == "class":
            for el in snapshot.elements():
                if marker.pattern in el.attrs.get("class", "").lower():
                    return CaptchaSignal(marker.kind, marker.pattern)
        elif marker.where.startswith("attr:"):
            attr = marker.where[5:]
            for el in snapshot.elements():
                if attr in el.attrs and marker.pattern in el.attrs[attr].lower():
                    return CaptchaSignal(marker.kind, f"{attr}={marker.pattern}")
    return None


@dataclass(frozen=True)
class FetchLogEntry:
    url: str
    timestamp: datetime
    outcome: str  # "ok" | "error:<kind>" | "interstitial" | "image"


class FetchAdapter:
    """Base adapter: session bookkeeping, busy-guard, shared login flow.

    Subclasses implement _navigate/_click_node/_fill_node/_run_script and may
    override captcha markers and ticket injection.
    """

    def __init__(self, markers: tuple[CaptchaMarker, ...] = DEFAULT_CAPTCHA_MARKERS,
                 prompter: PromptCallback | None = None) -> None:
        self.markers = markers
        self.prompter = prompter
        self.fetch_log: list[FetchLogEntry] = []
        self._nav_lock = threading.Lock()

    @contextmanager
    def _navigation(self):
        if not self._nav_lock.acquire(blocking=False):
            raise Busy("a navigation is already in flight on this session")
        try:
            yield
        finally:
            self._nav_lock.release()

    def log(self, url: str, timestamp: datetime, outcome: str) -> None:
        self.fetch_log.append(FetchLogEntry(url, timestamp, outcome))

    def detect_captcha(self, snapshot: DomSnapshot) -> CaptchaSignal | None:
        return detect_captcha(snapshot, self.markers)

    def _await_captcha(self, signal: CaptchaSignal) -> None:
        if self.prompter is None:
            return
        while True:
            answer = self.prompter(
                PROMPT_CAPTCHA,
                f"CAPTCHA detected ({signal.kind}: {signal.matched_marker}); "
                f"solve it in the browser and answer "
                f"'{CAPTCHA_SOLVED_ANSWER}'")
            if answer.strip().lower() == CAPTCHA_SOLVED_ANSWER:
                return

    def login(self, handle: PageHandle, login_locators: Mapping[str, Locator],
              credentials: tuple[str, str]) -> PageHandle:
        """Fill the trained fields, click the login button, verify the result."""
        signal = self.detect_captcha(handle.snapshot)
        if signal is not None:
            self._await_captcha(signal)
        username_loc = login_locators.get(USERNAME_FIELD)
        password_loc = login_locators.get(PASSWORD_FIELD)
        button_loc = login_locators.get(LOGIN_BUTTON)
        if username_loc is None or password_loc is None or button_loc is None:
            raise LoginFailed("login locators incomplete "
                              "(need username_field, password_field, login_button)")
        self.fill(handle, username_loc, credentials[0])
        self.fill(handle, password_loc, credentials[1])
        handle = self.click(handle, button_loc)
        signal = self.detect_captcha(handle.snapshot)
        if signal is not None:
            self._await_captcha(signal)
        still_login = (resolve(handle.snapshot, username_loc)
                       and resolve(handle.snapshot, password_loc))
        if still_login:
            raise LoginFailed("post-login page still presents login fields")
        return handle

    # --- subclass surface ---

    def start(self) -> None:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError

    def open(self, url: str) -> PageHandle:
        raise NotImplementedError

    def reload(self, handle: PageHandle) -> PageHandle:
        return self.open(handle.current_url)

    def click(self, handle: PageHandle, locator: Locator) -> PageHandle:
        raise NotImplementedError

    def fill(self, handle: PageHandle, locator: Locator, text: str) -> None:
        raise NotImplementedError

    def execute_script(self, handle: PageHandle, source: str) -> PageHandle:
        raise NotImplementedError

    def inject_tickets(self, bundle: TicketBundle) -> None:
        raise NotImplementedError

    def mask_automation(self) -> None:
        raise NotImplementedError


def validate_ticket_bundle(bundle: TicketBundle) -> None:
    """Keys must be non-empty; failures are reported pair by pair."""
    failures = [(k, v) for k, v in bundle.pairs if not k.strip()]
    if failures:
        raise InjectionFailed(failures)

"""Crawl engine: execute a trained profile like one patient human would.

The loop is strictly sequential: login, then for every trained section (and
subsection when trained) enumerate threads, open the unvisited interesting
ones in random order one at a time, traverse each thread to its end with
WPM-based reading delays, and page the listing until exhausted. Non-thread
navigation idles 5-15 s. A command channel delivers pause/resume/terminate,
observed at wait points and page boundaries. Posts of a thread and its
durable visited mark commit together only when the thread completes, which
is what makes crash-resume produce the same record set as an uninterrupted
run.
"""

from __future__ import annotations

import collections
import logging
import random
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable, Mapping
from urllib.parse import parse_qsl, urlencode, urljoin, urlsplit, urlunsplit

from .clock import Clock, SystemClock
from .config import CrawlConfiguration, KeywordPolicy
from .dom import DomSnapshot, Element, text_content, to_html
from .errors import (
    AdapterError,
    FetchFailed,
    InvalidTransition,
    NoSpine,
    ProfileLocatorMissing,
)
from .fetch import FetchAdapter, PageHandle, TicketBundle
from .locators import Locator, resolve
from .profile import (
    AUTHOR_POPULARITY,
    AUTHOR_POST_COUNT,
    AUTHOR_REGISTRATION_DATE,
    FIRST_PAGE_BUTTON,
    HOME,
    LOGIN,
    NEXT_PAGE,
    POST_AUTHOR,
    POST_CONTENT,
    POST_DATE,
    SECTION,
    SECTION_LINK,
    SUBSECTION,
    SUBSECTION_LINK,
    THREAD,
    THREAD_LINK,
    THREAD_TITLE,
    TrainedProfile,
)
from .schedule import compile_schedule, navigation_delay, next_action, reading_delay
from .schedule import Action

logger = logging.getLogger(__name__)

RUNNING = "running"
PAUSED = "paused"
TERMINATED = "terminated"

PAUSE = "pause"
RESUME = "resume"
TERMINATE = "terminate"

FETCH_RETRIES = 3

_INT_RE = re.compile(r"\d[\d,.'  ]*")


@dataclass
class PostRecord:
    forum_id: str
    section_path: tuple[str, ...]
    thread_title: str
    thread_url: str
    page_number: int
    ordinal: int
    content_text: str
    content_html: str
    retrieved_at: str
    author_name: str | None = None
    author_post_count: int | None = None
    author_popularity: str | None = None
    author_registration_date_raw: str | None = None
    author_registration_date: str | None = None
    post_date_raw: str | None = None
    post_date: str | None = None
    post_date_ok: bool = True

    def to_dict(self) -> dict:
        return {
            "forum_id": self.forum_id,
            "section_path": list(self.section_path),
            "thread_title": self.thread_title,
            "thread_url": self.thread_url,
            "page_number": self.page_number,
            "ordinal": self.ordinal,
            "author_name": self.author_name,
            "author_post_count": self.author_post_count,
            "author_popularity": self.author_popularity,
            "author_registration_date_raw": self.author_registration_date_raw,
            "author_registration_date": self.author_registration_date,
            "post_date_raw": self.post_date_raw,
            "post_date": self.post_date,
            "post_date_ok": self.post_date_ok,
            "content_text": self.content_text,
            "content_html": self.content_html,
            "retrieved_at": self.retrieved_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PostRecord":
        data = dict(data)
        data["section_path"] = tuple(data.get("section_path", ()))
        return cls(**data)


@dataclass
class ThreadRecord:
    thread_url: str
    title: str
    section_path: tuple[str, ...]
    pages_visited: list[int] = field(default_factory=list)
    posts: list[PostRecord] = field(default_factory=list)
    discarded: bool = False
    anomalies: list[str] = field(default_factory=list)


@dataclass
class CrawlState:
    visited_threads: set[str] = field(default_factory=set)
    skipped_titles: set[str] = field(default_factory=set)
    run_status: str = RUNNING


@dataclass
class CrawlSummary:
    threads: int = 0
    posts: int = 0
    threads_discarded: int = 0
    threads_skipped: int = 0
    pages_fetched: int = 0
    anomalies: list[str] = field(default_factory=list)
    thread_visit_order: list[str] = field(default_factory=list)
    terminated_early: bool = False


class CommandChannel:
    """Thread-safe pause/resume/terminate feed into the crawl loop."""

    def __init__(self) -> None:
        self._items: collections.deque[str] = collections.deque()
        self._lock = threading.Lock()

    def send(self, command: str) -> None:
        if command not in (PAUSE, RESUME, TERMINATE):
            raise ValueError(f"unknown command {command!r}")
        with self._lock:
            self._items.append(command)

    def poll(self) -> str | None:
        with self._lock:
            return self._items.popleft() if self._items else None


def handle_command(state: CrawlState, command: str) -> str:
    """Apply a runtime command; returns the new run status."""
    if command == RESUME:
        if state.run_status == TERMINATED:
            raise InvalidTransition("cannot resume a terminated crawl")
        state.run_status = RUNNING  # resume while running is a no-op
    elif command == PAUSE:
        if state.run_status == TERMINATED:
            raise InvalidTransition("cannot pause a terminated crawl")
        state.run_status = PAUSED
    elif command == TERMINATE:
        if state.run_status == TERMINATED:
            raise InvalidTransition("crawl already terminated")
        state.run_status = TERMINATED
    else:
        raise ValueError(f"unknown command {command!r}")
    return state.run_status


# --- keyword policy ---

def _regexes(words: tuple[str, ...]) -> list[re.Pattern]:
    return [re.compile(rf"(?<!\w){re.escape(w)}(?!\w)", re.IGNORECASE)
            for w in words]


def _matches_any(text: str, patterns: list[re.Pattern]) -> bool:
    return any(p.search(text) for p in patterns)


def should_open_thread(title: str, policy: KeywordPolicy) -> bool:
    """Title filter: blacklist blocks, whitelist requires a hit."""
    if policy.mode == KeywordPolicy.WHITELIST_ONLY:
        return _matches_any(title, _regexes(policy.whitelist))
    return not _matches_any(title, _regexes(policy.blacklist))


def censor_thread_posts(posts: list[PostRecord],
                        policy: KeywordPolicy) -> list[PostRecord] | None:
    """Keep(posts) or DiscardThread (None) when any post hits the blacklist."""
    if policy.mode != KeywordPolicy.ALL_EXCEPT_BLACKLIST or not policy.blacklist:
        return posts
    patterns = _regexes(policy.blacklist)
    for post in posts:
        if _matches_any(post.content_text, patterns) or \
                _matches_any(post.thread_title, patterns):
            return None
    return posts


def canonical_thread_url(url: str) -> str:
    """Fragment stripped, query parameters sorted; path kept verbatim."""
    parts = urlsplit(url)
    query = urlencode(sorted(parse_qsl(parts.query)))
    return urlunsplit((parts.scheme, parts.netloc, parts.path, query, ""))


# --- extraction ---

_PER_POST_LABELS = (POST_AUTHOR, AUTHOR_POST_COUNT, AUTHOR_POPULARITY,
                    AUTHOR_REGISTRATION_DATE, POST_DATE)


def _first_int(text: str) -> int | None:
    match = _INT_RE.search(text)
    if not match:
        return None
    digits = re.sub(r"\D", "", match.group())
    return int(digits) if digits else None


def _parse_date(raw: str, date_format: str | None) -> tuple[str | None, bool]:
    if not date_format:
        return None, False
    try:
        parsed = datetime.strptime(raw.strip(), date_format)
        return parsed.isoformat(), True
    except ValueError:
        return None, False


def _assign_to_posts(spine: list[Element],
                     nodes: list[Element]) -> dict[int, list[Element]]:
    """Group label nodes by nearest common ancestor with a spine node.

    Ancestors owned by exactly one post claim a node; nodes that only reach
    shared ancestors are ambiguous and dropped by the caller.
    """
    owner: dict[int, int | None] = {}
    for idx, post in enumerate(spine):
        cursor: Element | None = post
        while cursor is not None:
            key = id(cursor)
            if key in owner:
                if owner[key] != idx:
                    owner[key] = None  # shared between posts
            else:
                owner[key] = idx
            cursor = cursor.parent
    grouped: dict[int, list[Element]] = {}
    for node in nodes:
        cursor = node
        claimed: int | None = None
        while cursor is not None:
            hit = owner.get(id(cursor), "absent")
            if hit != "absent":
                claimed = hit  # may be None for shared ancestors
                break
            cursor = cursor.parent
        if claimed is not None:
            grouped.setdefault(claimed, []).append(node)
    return grouped


def extract_posts(snapshot: DomSnapshot, thread_locators: Mapping[str, Locator],
                  forum_id: str, section_path: tuple[str, ...],
                  thread_title: str, thread_url: str, page_number: int,
                  retrieved_at: str) -> tuple[list[PostRecord], list[str]]:
    """Structured records for one thread page; PostContent is the spine."""
    content_locator = thread_locators.get(POST_CONTENT)
    if content_locator is None:
        raise NoSpine("post_content is not trained for thread pages")
    spine = resolve(snapshot, content_locator)
    if not spine:
        raise NoSpine("post_content resolved to zero nodes")
    anomalies: list[str] = []
    aligned: dict[str, dict[int, list[Element]]] = {}
    for label in _PER_POST_LABELS:
        locator = thread_locators.get(label)
        if locator is None:
            continue
        nodes = resolve(snapshot, locator)
        grouped = _assign_to_posts(spine, nodes)
        placed = sum(len(v) for v in grouped.values())
        if placed < len(nodes):
            anomalies.append(
                f"{label}: {len(nodes) - placed} node(s) could not be "
                f"aligned to a post on page {page_number}")
        aligned[label] = grouped

    def first_text(label: str, idx: int) -> str | None:
        nodes = aligned.get(label, {}).get(idx)
        if not nodes:
            return None
        return text_content(nodes[0])[0]

    records: list[PostRecord] = []
    for idx, node in enumerate(spine):
        text, _ = text_content(node)
        reg_raw = first_text(AUTHOR_REGISTRATION_DATE, idx)
        reg_locator = thread_locators.get(AUTHOR_REGISTRATION_DATE)
        reg_iso, _ = _parse_date(reg_raw, reg_locator.date_format) \
            if reg_raw and reg_locator else (None, False)
        date_raw = first_text(POST_DATE, idx)
        date_locator = thread_locators.get(POST_DATE)
        date_iso, date_ok = _parse_date(date_raw, date_locator.date_format) \
            if date_raw and date_locator else (None, False)
        count_text = first_text(AUTHOR_POST_COUNT, idx)
        records.append(PostRecord(
            forum_id=forum_id,
            section_path=section_path,
            thread_title=thread_title,
            thread_url=thread_url,
            page_number=page_number,
            ordinal=idx + 1,
            author_name=first_text(POST_AUTHOR, idx),
            author_post_count=_first_int(count_text) if count_text else None,
            author_popularity=first_text(AUTHOR_POPULARITY, idx),
            author_registration_date_raw=reg_raw,
            author_registration_date=reg_iso,
            post_date_raw=date_raw,
            post_date=date_iso,
            post_date_ok=date_ok if date_raw is not None else True,
            content_text=text,
            content_html=to_html(node),
            retrieved_at=retrieved_at,
        ))
    return records, anomalies


# --- the crawl loop ---

class _Terminated(Exception):
    pass


class _Pacer:
    """All waiting goes through here: commands, schedule, delays."""

    def __init__(self, clock: Clock, state: CrawlState,
                 commands: CommandChannel | None,
                 config: CrawlConfiguration,
                 rng: random.Random) -> None:
        self.clock = clock
        self.state = state
        self.commands = commands
        self.config = config
        self.rng = rng
        self._spans_cache: dict = {}

    def _poll_commands(self) -> str | None:
        if self.commands is None:
            return None
        command = self.commands.poll()
        if command is None:
            return None
        handle_command(self.state, command)
        if self.state.run_status == TERMINATED:
            raise _Terminated()
        return command

    def _hold_while_paused(self) -> None:
        while self.state.run_status == PAUSED:
            command = self.commands.poll() if self.commands else None
            if command is not None:
                handle_command(self.state, command)
                if self.state.run_status == TERMINATED:
                    raise _Terminated()
                continue
            time.sleep(0.005)  # real wall wait; commands come from outside

    def wait(self, seconds: float) -> None:
        """Sleep with command observation; resume cuts the wait short."""
        deadline = self.clock.now() + timedelta(seconds=max(seconds, 0.0))
        while True:
            command = self._poll_commands()
            if command == RESUME:
                return
            if self.state.run_status == PAUSED:
                self._hold_while_paused()
                continue
            remaining = (deadline - self.clock.now()).total_seconds()
            if remaining <= 0:
                return
            self.clock.sleep(min(remaining, 0.25))

    def checkpoint(self) -> None:
        """Page-boundary stop: commands, pause hold, schedule pauses."""
        command = self._poll_commands()
        if command is not None and self.state.run_status == PAUSED:
            self._hold_while_paused()
        self._obey_schedule()

    def _spans_for(self, day) -> list:
        if day not in self._spans_cache:
            seed = f"{self.config.forum_id}:{day.isoformat()}"
            self._spans_cache[day] = compile_schedule(
                self.config.schedule, day, random.Random(seed))
        return self._spans_cache[day]

    def _obey_schedule(self) -> None:
        if not self.config.schedule.windows:
            return
        for _ in range(400):  # bounded look-ahead, > one year of days
            now = self.clock.now()
            action = next_action(self._spans_for(now.date()), now)
            if action.kind == Action.RUN_UNTIL:
                return
            if action.kind == Action.PAUSE_UNTIL:
                self.wait((action.until - now).total_seconds())
                continue
            # Day over: jump to the next day's first span.
            next_day = now.date() + timedelta(days=1)
            midnight = datetime.combine(next_day, datetime.min.time(),
                                        tzinfo=now.tzinfo)
            self.wait((midnight - now).total_seconds())
        raise FetchFailed("schedule has no runnable window within look-ahead")

    def non_thread_delay(self) -> None:
        self.checkpoint()
        self.wait(navigation_delay(self.rng))

    def thread_reading_delay(self, word_count: int) -> None:
        self.checkpoint()
        self.wait(reading_delay(word_count, self.config.wpm_range, self.rng))


class Crawler:
    def __init__(self, profile: TrainedProfile, config: CrawlConfiguration,
                 adapter: FetchAdapter, store, clock: Clock | None = None,
                 rng: random.Random | int | None = None,
                 commands: CommandChannel | None = None,
                 archive=None,
                 on_thread_complete: Callable[[str], None] | None = None,
                 tickets: TicketBundle | None = None) -> None:
        self.profile = profile
        self.config = config
        self.adapter = adapter
        self.store = store
        self.clock = clock or SystemClock()
        self.rng = rng if isinstance(rng, random.Random) else random.Random(rng)
        self.commands = commands
        self.archive = archive
        self.on_thread_complete = on_thread_complete
        self.tickets = tickets
        self.state = CrawlState()
        self.summary = CrawlSummary()
        self.pacer = _Pacer(self.clock, self.state, commands, config, self.rng)

    # --- plumbing ---

    def _open_with_retry(self, url: str) -> PageHandle:
        last: Exception | None = None
        for attempt in range(FETCH_RETRIES):
            try:
                return self.adapter.open(url)
            except AdapterError as exc:
                last = exc
                logger.warning("fetch attempt %d for %s failed: %s",
                               attempt + 1, url, exc)
                self.pacer.wait(navigation_delay(self.rng))
        raise FetchFailed(f"{url}: {last}")

    def _prepare_page(self, handle: PageHandle, page_type: str) -> PageHandle:
        """Fig-style page preparation: CAPTCHA hand-off, then page script."""
        signal = self.adapter.detect_captcha(handle.snapshot)
        if signal is not None:
            self.adapter._await_captcha(signal)
        script = self.profile.script(page_type)
        if script:
            handle = self.adapter.execute_script(handle, script)
        return handle

    def _links(self, handle: PageHandle, locator: Locator) -> list[tuple[str, str]]:
        """(text, absolute URL) for every non-ignored anchor match."""
        out: list[tuple[str, str]] = []
        for node in resolve(handle.snapshot, locator):
            href = node.attrs.get("href")
            if not href:
                continue
            out.append((text_content(node)[0],
                        urljoin(handle.current_url, href)))
        return out

    def _require(self, page_type: str, label: str) -> Locator:
        locator = self.profile.locator(page_type, label)
        if locator is None:
            raise ProfileLocatorMissing(page_type, label)
        return locator

    # --- main flow ---

    def run(self) -> CrawlSummary:
        self.adapter.start()
        try:
            if self.tickets is not None:
                self.adapter.inject_tickets(self.tickets)
            self.pacer.checkpoint()
            home_handle = self._login_and_home()
            home_handle = self._prepare_page(home_handle, HOME)
            sections = self._links(home_handle,
                                   self._require(HOME, SECTION_LINK))
            for section_title, section_url in sections:
                self._crawl_section(section_title, section_url)
        except _Terminated:
            self.summary.terminated_early = True
        finally:
            self._flush_fetch_log()
            self.adapter.close()
        return self.summary

    def _login_and_home(self) -> PageHandle:
        login_locators = (self.profile.pages.get(LOGIN).locators
                          if self.profile.pages.get(LOGIN) else {})
        login_url = self.config.urls.get(LOGIN)
        if login_url and login_locators:
            handle = self._open_with_retry(login_url)
            self.pacer.non_thread_delay()  # a human pauses to type credentials
            handle = self.adapter.login(
                handle, login_locators,
                (self.config.username, self.config.secret))
            self.pacer.non_thread_delay()
        home_url = self.config.urls.get(HOME)
        return self._open_with_retry(home_url)

    def _crawl_section(self, title: str, url: str) -> None:
        self.pacer.non_thread_delay()
        try:
            handle = self._open_with_retry(url)
        except FetchFailed as exc:
            self.summary.anomalies.append(f"section {title}: {exc}")
            return
        handle = self._prepare_page(handle, SECTION)
        sub_locator = (self.profile.locator(SECTION, SUBSECTION_LINK)
                       if SUBSECTION in self.profile.pages else None)
        subsections = self._links(handle, sub_locator) if sub_locator else []
        if subsections:
            for sub_title, sub_url in subsections:
                self.pacer.non_thread_delay()
                self._sweep_listing(sub_url, SUBSECTION, (title, sub_title))
        else:
            self._sweep_listing_handle(handle, SECTION, (title,))

    def _sweep_listing(self, url: str, page_type: str,
                       section_path: tuple[str, ...]) -> None:
        try:
            handle = self._open_with_retry(url)
        except FetchFailed as exc:
            self.summary.anomalies.append(f"listing {url}: {exc}")
            return
        handle = self._prepare_page(handle, page_type)
        self._sweep_listing_handle(handle, page_type, section_path)

    def _sweep_listing_handle(self, handle: PageHandle, page_type: str,
                              section_path: tuple[str, ...]) -> None:
        """Random-order thread sweep, then page the listing via next_page."""
        thread_locator = self._require(page_type, THREAD_LINK)
        next_locator = self.profile.locator(page_type, NEXT_PAGE)
        while True:
            threads = self._links(handle, thread_locator)
            candidates = []
            for title, url in threads:
                canonical = canonical_thread_url(url)
                if canonical in self.state.visited_threads or \
                        self.store.visited_check(canonical):
                    continue
                if not should_open_thread(title, self.config.keyword_policy):
                    if canonical not in self.state.skipped_titles:
                        self.state.skipped_titles.add(canonical)
                        self.summary.threads_skipped += 1
                    continue
                candidates.append((title, url, canonical))
            if candidates:
                title, url, canonical = candidates[
                    self.rng.randrange(len(candidates))]
                listing_url = handle.current_url
                self._traverse_thread(title, url, canonical, section_path)
                self.pacer.non_thread_delay()
                try:
                    handle = self._open_with_retry(listing_url)
                except FetchFailed as exc:
                    self.summary.anomalies.append(f"listing {listing_url}: {exc}")
                    return
                handle = self._prepare_page(handle, page_type)
                continue
            if next_locator is None or not resolve(handle.snapshot, next_locator):
                return  # listing exhausted
            self.pacer.non_thread_delay()
            handle = self.adapter.click(handle, next_locator)
            handle = self._prepare_page(handle, page_type)

    def _traverse_thread(self, title: str, url: str, canonical: str,
                         section_path: tuple[str, ...]) -> None:
        self.state.visited_threads.add(canonical)
        self.pacer.non_thread_delay()
        try:
            handle = self._open_with_retry(url)
        except FetchFailed as exc:
            self.summary.anomalies.append(f"thread {title}: {exc}")
            return
        try:
            record = self._collect_thread(handle, title, canonical, section_path)
        except AdapterError as exc:
            # Mid-thread failure: nothing committed, a later run re-crawls it.
            self.summary.anomalies.append(f"thread {title}: {exc}")
            return
        if record.discarded:
            self.summary.threads_discarded += 1
            return
        self.store.commit_thread(canonical, record.posts)
        self.summary.threads += 1
        self.summary.posts += len(record.posts)
        self.summary.thread_visit_order.append(canonical)
        self.summary.anomalies.extend(record.anomalies)
        if self.on_thread_complete is not None:
            self.on_thread_complete(canonical)

    def _collect_thread(self, handle: PageHandle, title: str, canonical: str,
                        section_path: tuple[str, ...]) -> ThreadRecord:
        thread_page = self.profile.pages.get(THREAD)
        locators = thread_page.locators if thread_page else {}
        record = ThreadRecord(canonical, title, section_path)
        archive_paths: list[str] = []
        handle = self._prepare_page(handle, THREAD)
        if handle.archive_path:
            archive_paths.append(handle.archive_path)
        first_locator = locators.get(FIRST_PAGE_BUTTON)
        if first_locator is not None and resolve(handle.snapshot, first_locator):
            handle = self.adapter.click(handle, first_locator)
            handle = self._prepare_page(handle, THREAD)
            if handle.archive_path:
                archive_paths.append(handle.archive_path)
        next_locator = locators.get(NEXT_PAGE)
        page_number = 1
        while True:
            title_locator = locators.get(THREAD_TITLE)
            if title_locator is not None:
                matches = resolve(handle.snapshot, title_locator)
                if matches:
                    record.title = text_content(matches[0])[0]
            try:
                posts, anomalies = extract_posts(
                    handle.snapshot, locators, self.config.forum_id,
                    section_path, record.title, canonical, page_number,
                    self.clock.now().isoformat())
                record.anomalies.extend(anomalies)
            except NoSpine as exc:
                record.anomalies.append(
                    f"extraction empty on page {page_number}: {exc}")
                posts = []
            kept = censor_thread_posts(record.posts + posts,
                                       self.config.keyword_policy)
            if kept is None:
                record.discarded = True
                record.posts = []
                if self.archive is not None and archive_paths:
                    self.archive.delete(archive_paths)
                self.store.visited_mark(canonical)
                return record
            record.posts = kept
            record.pages_visited.append(page_number)
            if next_locator is None or not resolve(handle.snapshot, next_locator):
                return record
            word_count = text_content(handle.snapshot.root)[1]
            self.pacer.thread_reading_delay(word_count)
            handle = self.adapter.click(handle, next_locator)
            handle = self._prepare_page(handle, THREAD)
            if handle.archive_path:
                archive_paths.append(handle.archive_path)
            page_number += 1

    def _flush_fetch_log(self) -> None:
        if hasattr(self.store, "log_fetches"):
            self.store.log_fetches(self.adapter.fetch_log)
        self.summary.pages_fetched = sum(
            1 for entry in self.adapter.fetch_log if entry.outcome == "ok")


def run_crawl(profile: TrainedProfile, config: CrawlConfiguration,
              adapter: FetchAdapter, store, clock: Clock | None = None,
              rng: random.Random | int | None = None,
              commands: CommandChannel | None = None,
              archive=None,
              on_thread_complete: Callable[[str], None] | None = None,
              tickets: TicketBundle | None = None) -> CrawlSummary:
    """Full crawl of a trained forum; see Crawler for the moving parts."""
    crawler = Crawler(profile, config, adapter, store, clock=clock, rng=rng,
                      commands=commands, archive=archive,
                      on_thread_complete=on_thread_complete, tickets=tickets)
    return crawler.run()

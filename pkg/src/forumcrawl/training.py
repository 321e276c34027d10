"""Supervised training sessions: label pages, infer locators, verify stability.

A session walks a queue of example pages (login, home, section, optionally
subsection, thread). Per page the operator assigns labels to nodes, the
inference cascade turns each label into a locator independently, and the
page must survive a reload-based stability gate (with strategy escalation
bounded at one round per remaining strategy) plus a next-page navigation
check before it counts as Done. Scripts attached during training are
persisted per page type and re-run at crawl time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .config import CrawlConfiguration
from .dom import AbsolutePath, DomSnapshot, absolute_path, node_at
from .errors import (
    InvalidLabelForPage,
    IncompleteSession,
    MissingUrl,
    NoMatch,
    NoNextPage,
    WrongPageState,
)
from .fetch import PROMPT_STILL_VISIBLE, PageHandle, PromptCallback
from .locators import (
    LabelStability,
    Locator,
    NeedsManual,
    StabilityReport,
    Strategy,
    apply_ignore,
    infer_cascade,
    resolve,
    verify_stability,
)
from .profile import (
    DATE_LABELS,
    LABELS_BY_PAGE,
    NEXT_PAGE,
    PAGE_TYPES,
    PageTraining,
    TrainedProfile,
)
from .xpath import XPathExpr

logger = logging.getLogger(__name__)

PENDING = "pending"
LABELING = "labeling"
VERIFYING = "verifying"
STABILITY_CHECK = "stability_check"
DONE = "done"

MAX_GATE_ROUNDS = 4  # one per remaining strategy

REQUIRED_PAGE_URLS = ("login", "home", "section", "thread")


@dataclass
class GateResult:
    passed: bool
    report: StabilityReport | None = None
    escalated: dict[str, Locator] = field(default_factory=dict)
    needs_manual: dict[str, NeedsManual] = field(default_factory=dict)
    dropped: tuple[str, ...] = ()
    exhausted: bool = False


class TrainingSession:
    """One forum's training run; mutated only by the control surface."""

    def __init__(self, config: CrawlConfiguration, adapter,
                 prompter: PromptCallback | None = None,
                 seed: TrainedProfile | None = None) -> None:
        missing = config.validate_urls(REQUIRED_PAGE_URLS)
        if missing:
            raise MissingUrl(f"configuration lacks URLs for: {', '.join(missing)}")
        self.config = config
        self.adapter = adapter
        self.prompter = prompter
        self.seed = seed
        self.queue: list[tuple[str, str]] = [
            (page_type, config.urls[page_type])
            for page_type in PAGE_TYPES
            if config.urls.get(page_type)
        ]
        self.states: dict[str, str] = {pt: PENDING for pt, _ in self.queue}
        self.assignments: dict[str, dict[str, list[str]]] = {}
        self.locators: dict[str, dict[str, Locator]] = {}
        self.trained_counts: dict[str, dict[str, int]] = {}
        self.manual_pending: dict[str, dict[str, NeedsManual]] = {}
        self.scripts: dict[str, str] = {}
        self.date_formats: dict[str, dict[str, str]] = {}
        self.handles: dict[str, PageHandle] = {}
        self.snapshots: dict[str, DomSnapshot] = {}
        self.gate_passed: dict[str, bool] = {}
        self.notes: list[str] = []

    # --- queue navigation ---

    def current_page(self) -> tuple[str, str] | None:
        for page_type, url in self.queue:
            if self.states[page_type] != DONE:
                return page_type, url
        return None

    def page_state(self, page_type: str) -> str:
        if page_type not in self.states:
            raise WrongPageState(f"{page_type} is not in this session's queue")
        return self.states[page_type]

    def _require_state(self, page_type: str, *allowed: str) -> None:
        state = self.page_state(page_type)
        if state not in allowed:
            raise WrongPageState(
                f"{page_type} is {state}, needs {' or '.join(allowed)}")

    # --- page lifecycle ---

    def load_page(self, page_type: str) -> PageHandle:
        """Open the example page, hand off CAPTCHAs, apply any seeded state."""
        self._require_state(page_type, PENDING)
        url = dict(self.queue)[page_type]
        handle = self.adapter.open(url)
        signal = self.adapter.detect_captcha(handle.snapshot)
        if signal is not None and self.prompter is not None:
            self.adapter._await_captcha(signal)
        seeded = self.seed.pages.get(page_type) if self.seed else None
        if seeded and seeded.script:
            handle = self.adapter.execute_script(handle, seeded.script)
            self.scripts[page_type] = seeded.script
        self.handles[page_type] = handle
        self.snapshots[page_type] = handle.snapshot
        if seeded and seeded.locators:
            self.locators[page_type] = dict(seeded.locators)
            self.trained_counts[page_type] = {}
            self.assignments[page_type] = {}
            self.date_formats[page_type] = {}
            for label, locator in seeded.locators.items():
                nodes = resolve(handle.snapshot, locator)
                self.assignments[page_type][label] = [
                    _path_of(handle.snapshot, node) for node in nodes]
                self.trained_counts[page_type][label] = len(nodes)
                if locator.date_format:
                    self.date_formats[page_type][label] = locator.date_format
            self.states[page_type] = VERIFYING
        else:
            self.states[page_type] = LABELING
        return handle

    def attach_script(self, page_type: str, source: str,
                      persist: bool = True) -> PageHandle:
        """Execute a page script via the adapter and re-snapshot."""
        self._require_state(page_type, LABELING, VERIFYING)
        handle = self.handles[page_type]
        if source.strip():
            handle = self.adapter.execute_script(handle, source)
            self.handles[page_type] = handle
            self.snapshots[page_type] = handle.snapshot
        if persist:
            self.scripts[page_type] = source
        return handle

    # --- labeling and inference ---

    def submit_labels(self, page_type: str,
                      assignments: dict[str, list[str]],
                      date_formats: dict[str, str] | None = None,
                      ) -> dict[str, Locator | NeedsManual]:
        """Run the cascade per label independently; move to Verifying."""
        self._require_state(page_type, LABELING)
        allowed = LABELS_BY_PAGE[page_type]
        for label in assignments:
            if label not in allowed:
                raise InvalidLabelForPage(f"{label} is not valid on {page_type}")
        snapshot = self.snapshots[page_type]
        formats = date_formats or {}
        results: dict[str, Locator | NeedsManual] = {}
        page_assignments = self.assignments.setdefault(page_type, {})
        page_locators = self.locators.setdefault(page_type, {})
        page_counts = self.trained_counts.setdefault(page_type, {})
        page_manual = self.manual_pending.setdefault(page_type, {})
        for label, paths in assignments.items():
            if not paths:
                continue  # unassigned labels stay absent; nothing is mandatory
            nodes = [node_at(snapshot, AbsolutePath.from_string(p))
                     for p in paths]
            fmt = formats.get(label) if label in DATE_LABELS else None
            outcome = infer_cascade(snapshot, nodes,
                                    live=self.handles.get(page_type),
                                    date_format=fmt)
            page_assignments[label] = list(paths)
            if fmt:
                self.date_formats.setdefault(page_type, {})[label] = fmt
            if isinstance(outcome, NeedsManual):
                page_manual[label] = outcome
            else:
                page_locators[label] = outcome
                page_counts[label] = len(resolve(snapshot, outcome))
                page_manual.pop(label, None)
            results[label] = outcome
        self.states[page_type] = VERIFYING
        return results

    def correct_labels(self, page_type: str,
                       retrain: tuple[str, ...] = (),
                       ignore: dict[str, list[str]] | None = None,
                       reset: bool = False,
                       ) -> dict[str, Locator | NeedsManual]:
        """Escalate rejected labels, extend ignore lists, or reset the page."""
        self._require_state(page_type, VERIFYING)
        if reset:
            self.assignments.pop(page_type, None)
            self.locators.pop(page_type, None)
            self.trained_counts.pop(page_type, None)
            self.manual_pending.pop(page_type, None)
            self.date_formats.pop(page_type, None)
            self.states[page_type] = LABELING
            return {}
        snapshot = self.snapshots[page_type]
        results: dict[str, Locator | NeedsManual] = {}
        for label, paths in (ignore or {}).items():
            locator = self.locators[page_type][label]
            nodes = [node_at(snapshot, AbsolutePath.from_string(p))
                     for p in paths]
            updated = apply_ignore(locator, nodes, snapshot)
            self.locators[page_type][label] = updated
            self.trained_counts[page_type][label] = len(resolve(snapshot, updated))
            results[label] = updated
        for label in retrain:
            results[label] = self._escalate(page_type, label)
        return results

    def _escalate(self, page_type: str, label: str) -> Locator | NeedsManual:
        current = self.locators.get(page_type, {}).get(label)
        floor = (Strategy(current.strategy + 1) if current is not None
                 and current.strategy < Strategy.MANUAL else None)
        if current is None:
            # Label already in manual territory; nothing lower to run.
            outcome: Locator | NeedsManual = NeedsManual(())
        elif floor is None or floor == Strategy.MANUAL:
            outcome = NeedsManual(())
        else:
            snapshot = self.snapshots[page_type]
            paths = self.assignments[page_type][label]
            nodes = [node_at(snapshot, AbsolutePath.from_string(p))
                     for p in paths]
            fmt = self.date_formats.get(page_type, {}).get(label)
            outcome = infer_cascade(snapshot, nodes,
                                    live=self.handles.get(page_type),
                                    start=floor, date_format=fmt)
        if isinstance(outcome, NeedsManual):
            self.manual_pending.setdefault(page_type, {})[label] = outcome
            self.locators.get(page_type, {}).pop(label, None)
        else:
            self.locators[page_type][label] = outcome
            self.trained_counts[page_type][label] = len(
                resolve(self.snapshots[page_type], outcome))
            self.manual_pending.get(page_type, {}).pop(label, None)
        return outcome

    def submit_manual_xpath(self, page_type: str, label: str,
                            expression: str) -> Locator:
        """Operator-supplied expression; must match on the current snapshot."""
        pending = self.manual_pending.get(page_type, {})
        if label not in pending:
            raise WrongPageState(f"{label} on {page_type} is not awaiting "
                                 "a manual expression")
        expr = XPathExpr(expression)
        snapshot = self.snapshots[page_type]
        fmt = self.date_formats.get(page_type, {}).get(label)
        locator = Locator(expr, Strategy.MANUAL, date_format=fmt)
        matches = resolve(snapshot, locator)
        if not matches:
            raise NoMatch(f"{expression} matches nothing on the current page")
        self.locators.setdefault(page_type, {})[label] = locator
        self.trained_counts.setdefault(page_type, {})[label] = len(matches)
        del pending[label]
        return locator

    # --- gates ---

    def confirm_page(self, page_type: str) -> None:
        self._require_state(page_type, VERIFYING)
        if self.manual_pending.get(page_type):
            raise WrongPageState(
                f"{page_type} has labels awaiting manual expressions: "
                f"{sorted(self.manual_pending[page_type])}")
        self.states[page_type] = STABILITY_CHECK

    def run_stability_gate(self, page_type: str) -> GateResult:
        """Reload, re-resolve, escalate Missing labels; at most 4 rounds."""
        self._require_state(page_type, STABILITY_CHECK)
        handle = self.handles[page_type]
        result = GateResult(passed=False)
        for _ in range(MAX_GATE_ROUNDS):
            report = verify_stability(
                lambda: self.adapter.reload(handle).snapshot,
                self.locators.get(page_type, {}),
                self.trained_counts.get(page_type, {}))
            result.report = report
            over = [lbl for lbl, o in report.outcomes.items()
                    if o.status == LabelStability.OVERMATCHING]
            if over:
                # Surplus matches are the user's call: back to Verifying
                # so they can extend ignore lists.
                self.states[page_type] = VERIFYING
                return result
            missing = report.missing_labels()
            if not missing:
                result.passed = True
                self.gate_passed[page_type] = True
                self._maybe_finish_page(page_type)
                return result
            for label in missing:
                if self.prompter is not None:
                    answer = self.prompter(
                        PROMPT_STILL_VISIBLE,
                        f"'{label}' was not found after reload; can you "
                        f"still see the element? (yes/no)")
                    if answer.strip().lower() not in ("y", "yes"):
                        self._drop_label(page_type, label)
                        result.dropped += (label,)
                        continue
                outcome = self._escalate(page_type, label)
                if isinstance(outcome, NeedsManual):
                    result.needs_manual[label] = outcome
                else:
                    result.escalated[label] = outcome
            if result.needs_manual:
                self.states[page_type] = VERIFYING
                return result
            if not self.locators.get(page_type):
                break
        result.exhausted = True
        self.states[page_type] = VERIFYING
        for label in (result.report.missing_labels() if result.report else ()):  # type: ignore[union-attr]
            if label in self.locators.get(page_type, {}):
                self.manual_pending.setdefault(page_type, {})[label] = \
                    NeedsManual(())
                result.needs_manual[label] = self.manual_pending[page_type][label]
        return result

    def _drop_label(self, page_type: str, label: str) -> None:
        self.locators.get(page_type, {}).pop(label, None)
        self.trained_counts.get(page_type, {}).pop(label, None)
        self.assignments.get(page_type, {}).pop(label, None)
        self.notes.append(f"{page_type}/{label}: dropped, no longer visible "
                          "after reload")

    def _maybe_finish_page(self, page_type: str) -> None:
        if NEXT_PAGE not in self.locators.get(page_type, {}):
            if NEXT_PAGE in LABELS_BY_PAGE[page_type]:
                self.notes.append(f"{page_type}: next-page check skipped, "
                                  "next_page untrained")
            self.states[page_type] = DONE
        # otherwise verify_next_navigation still has to pass

    def verify_next_navigation(self, page_type: str) -> bool:
        """Click next and require every trained locator to resolve there.

        Runs on a probe handle so the session's training page stays anchored
        to its example URL for later reloads.
        """
        if not self.gate_passed.get(page_type):
            raise WrongPageState(f"{page_type} has not passed the stability gate")
        locators = self.locators.get(page_type, {})
        next_locator = locators.get(NEXT_PAGE)
        if next_locator is None:
            self.notes.append(f"{page_type}: next-page check skipped, "
                              "next_page untrained")
            self.states[page_type] = DONE
            return True
        url = dict(self.queue)[page_type]
        probe = self.adapter.open(url)
        if not resolve(probe.snapshot, next_locator):
            self.notes.append(f"{page_type}: next-page check skipped, "
                              "single-page fixture")
            self.states[page_type] = DONE
            raise NoNextPage(f"{page_type} has no next page to click")
        probe = self.adapter.click(probe, next_locator)
        missing = [label for label, locator in locators.items()
                   if not resolve(probe.snapshot, locator)]
        if missing:
            self.states[page_type] = VERIFYING
            self.gate_passed[page_type] = False
            self.notes.append(
                f"{page_type}: locators missing on the next page: {missing}")
            return False
        self.states[page_type] = DONE
        return True

    # --- finalization ---

    def finalize_profile(self) -> TrainedProfile:
        pending = [pt for pt, _ in self.queue if self.states[pt] != DONE]
        if pending:
            raise IncompleteSession(pending)
        pages: dict[str, PageTraining] = {}
        for page_type, _ in self.queue:
            pages[page_type] = PageTraining(
                locators=dict(self.locators.get(page_type, {})),
                script=self.scripts.get(page_type))
        return TrainedProfile(forum_id=self.config.forum_id, pages=pages)


def _path_of(snapshot: DomSnapshot, node) -> str:
    return absolute_path(snapshot, node).serialize()


def start_training(config: CrawlConfiguration, adapter,
                   prompter: PromptCallback | None = None,
                   seed: TrainedProfile | None = None) -> TrainingSession:
    """New session; with a seed profile, prior labels come pre-assigned."""
    return TrainingSession(config, adapter, prompter=prompter, seed=seed)

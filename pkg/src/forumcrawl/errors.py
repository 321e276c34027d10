"""Exception hierarchy shared across the package.

Strategy failures are ordinary control flow for the inference cascade and
subclass StrategyFailure so the cascade can catch them uniformly; everything
else derives straight from CrawlerError.
"""

from __future__ import annotations


class CrawlerError(Exception):
    """Base class for all errors raised by this package."""


# --- DOM / XPath ---

class EmptyInput(CrawlerError):
    """Zero-length document after decoding."""


class ForeignNode(CrawlerError):
    """Node does not belong to the snapshot it was used with."""


class UnsupportedSyntax(CrawlerError):
    """Expression falls outside the supported XPath subset."""

    def __init__(self, message: str, token: str = "") -> None:
        super().__init__(message)
        self.token = token


# --- locator inference ---

class StrategyFailure(CrawlerError):
    """A single inference strategy failed; the cascade may fall through."""


class NotUnique(StrategyFailure):
    """S1 found no uniquely-matching expression within its search budget."""


class MultiTarget(StrategyFailure):
    """S1 was given more than one target node."""


class ShapeMismatch(StrategyFailure):
    """S2 targets have absolute paths of different lengths or tags."""


class NoCommonClass(StrategyFailure):
    """S3 targets share no class token (or differ in tag name)."""


class LiveResolveFailed(StrategyFailure):
    """S4 could not relocate a target in the live DOM."""


class NotAMatch(CrawlerError):
    """Ignore candidate does not match the locator it should restrict."""


class FetchFailed(CrawlerError):
    """Page re-fetch failed at the network level (distinct from Missing)."""


# --- training ---

class MissingUrl(CrawlerError):
    """Configuration lacks a required example URL."""


class WrongPageState(CrawlerError):
    """Operation not valid for the page's current training state."""


class InvalidLabelForPage(CrawlerError):
    """Label is not assignable on this page type."""


class NoMatch(CrawlerError):
    """Manual expression matched zero nodes on the current snapshot."""


class NoNextPage(CrawlerError):
    """Fixture has a single page; next-page verification gate is skipped."""


class IncompleteSession(CrawlerError):
    """finalize_profile called while some pages are not Done."""

    def __init__(self, pending: list[str]) -> None:
        super().__init__(f"pages not Done: {', '.join(pending)}")
        self.pending = pending


# --- scheduling ---

class ZeroRange(CrawlerError):
    """WPM range is invalid (lower bound <= 0 or upper < lower)."""


# --- crawling ---

class LoginFailed(CrawlerError):
    """Post-login page still presents login fields."""


class ProfileLocatorMissing(CrawlerError):
    """A navigation locator required mid-crawl is absent from the profile."""

    def __init__(self, page_type: str, label: str) -> None:
        super().__init__(f"profile has no {label} locator for {page_type}")
        self.page_type = page_type
        self.label = label


class NoSpine(CrawlerError):
    """PostContent locator resolved to zero nodes on a thread page."""


class InvalidTransition(CrawlerError):
    """Runtime command not valid in the current run status."""


# --- fetch adapter ---

class AdapterError(CrawlerError):
    """Base for page-acquisition failures."""


class Timeout(AdapterError):
    """Navigation did not reach load completion in time."""


class NetworkError(AdapterError):
    """Page fetch failed; retryable by the caller."""


class NotFound(AdapterError):
    """Click target resolved to zero nodes."""


class ScriptError(AdapterError):
    """Injected script failed; message carries the page's error text."""


class InjectionFailed(AdapterError):
    """A ticket pair could not be written to extension storage."""

    def __init__(self, failures: list[tuple[str, str]]) -> None:
        super().__init__(f"{len(failures)} ticket pair(s) failed: "
                         + ", ".join(k for k, _ in failures))
        self.failures = failures


class MaskFailed(AdapterError):
    """Automation-flag masking could not be installed."""


class Busy(AdapterError):
    """A navigation is already in flight on this adapter session."""


# --- datastore ---

class SchemaMismatch(CrawlerError):
    """Persisted document carries an unknown schema version."""

"""Trained profiles: per page type, the label-to-locator map plus scripts.

The profile is the output of a training session and the only input the
crawl engine needs besides the run configuration. No label is mandatory;
absent labels simply disable the behavior they would drive (an untrained
next_page stops thread traversal at the entry page, for example).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import SchemaMismatch
from .locators import Locator

PROFILE_SCHEMA_VERSION = 1

LOGIN = "login"
HOME = "home"
SECTION = "section"
SUBSECTION = "subsection"
THREAD = "thread"

PAGE_TYPES = (LOGIN, HOME, SECTION, SUBSECTION, THREAD)

# Labels
HOME_LINK = "home_link"
USERNAME_FIELD = "username_field"
PASSWORD_FIELD = "password_field"
LOGIN_BUTTON = "login_button"
SECTION_LINK = "section_link"
SUBSECTION_LINK = "subsection_link"
THREAD_LINK = "thread_link"
NEXT_PAGE = "next_page"
PREV_PAGE = "prev_page"
FIRST_PAGE_BUTTON = "first_page_button"
THREAD_TITLE = "thread_title"
THREAD_SECTION = "thread_section"
POST_AUTHOR = "post_author"
AUTHOR_POST_COUNT = "author_post_count"
AUTHOR_POPULARITY = "author_popularity"
AUTHOR_REGISTRATION_DATE = "author_registration_date"
POST_DATE = "post_date"
POST_CONTENT = "post_content"

_LISTING_LABELS = frozenset({HOME_LINK, SECTION_LINK, SUBSECTION_LINK,
                             THREAD_LINK, NEXT_PAGE, PREV_PAGE})

LABELS_BY_PAGE: dict[str, frozenset[str]] = {
    LOGIN: frozenset({HOME_LINK, USERNAME_FIELD, PASSWORD_FIELD, LOGIN_BUTTON}),
    HOME: frozenset({HOME_LINK, SECTION_LINK, SUBSECTION_LINK}),
    SECTION: _LISTING_LABELS,
    SUBSECTION: _LISTING_LABELS,
    THREAD: frozenset({HOME_LINK, NEXT_PAGE, PREV_PAGE, FIRST_PAGE_BUTTON,
                       THREAD_TITLE, THREAD_SECTION, POST_AUTHOR,
                       AUTHOR_POST_COUNT, AUTHOR_POPULARITY,
                       AUTHOR_REGISTRATION_DATE, POST_DATE, POST_CONTENT}),
}

# Labels whose locators may carry a date format.
DATE_LABELS = frozenset({AUTHOR_REGISTRATION_DATE, POST_DATE})


@dataclass
class PageTraining:
    locators: dict[str, Locator] = field(default_factory=dict)
    script: str | None = None


@dataclass
class TrainedProfile:
    forum_id: str
    pages: dict[str, PageTraining] = field(default_factory=dict)
    created_at: str = ""

    def __post_init__(self) -> None:
        if not self.created_at:
            self.created_at = datetime.now(timezone.utc).isoformat()

    def locator(self, page_type: str, label: str) -> Locator | None:
        page = self.pages.get(page_type)
        return page.locators.get(label) if page else None

    def script(self, page_type: str) -> str | None:
        page = self.pages.get(page_type)
        return page.script if page else None

    def to_dict(self) -> dict:
        return {
            "schema_version": PROFILE_SCHEMA_VERSION,
            "forum_id": self.forum_id,
            "created_at": self.created_at,
            "pages": [
                {
                    "page_type": page_type,
                    "labels": [
                        {"label": label, **locator.to_dict()}
                        for label, locator in sorted(training.locators.items())
                    ],
                    "script": training.script,
                }
                for page_type, training in self.pages.items()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainedProfile":
        version = data.get("schema_version")
        if version != PROFILE_SCHEMA_VERSION:
            raise SchemaMismatch(f"unknown profile schema version {version!r}")
        pages: dict[str, PageTraining] = {}
        for entry in data.get("pages", ()):
            locators = {
                item["label"]: Locator.from_dict(item)
                for item in entry.get("labels", ())
            }
            pages[entry["page_type"]] = PageTraining(
                locators=locators, script=entry.get("script"))
        return cls(forum_id=data["forum_id"], pages=pages,
                   created_at=data.get("created_at", ""))


def save_profile(profile: TrainedProfile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(profile.to_dict(), indent=2),
                          encoding="utf-8")


def load_profile(path: str | Path) -> TrainedProfile:
    return TrainedProfile.from_dict(
        json.loads(Path(path).read_text(encoding="utf-8")))

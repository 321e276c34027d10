"""Crawl configuration: example URLs, credentials, pacing, keyword policy.

Configurations are stored as human-editable JSON with a schema version;
loading an unknown version fails loudly rather than guessing. The secret is
kept out of reprs and must never reach exports or logs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaMismatch
from .schedule import Schedule

SCHEMA_VERSION = 1

PAGE_URL_KEYS = ("login", "home", "section", "subsection", "thread")


@dataclass(frozen=True)
class KeywordPolicy:
    """Thread filter: blacklist everything matched, or whitelist-only."""

    mode: str = "all_except_blacklist"
    blacklist: tuple[str, ...] = ()
    whitelist: tuple[str, ...] = ()

    ALL_EXCEPT_BLACKLIST = "all_except_blacklist"
    WHITELIST_ONLY = "whitelist_only"

    def __post_init__(self) -> None:
        if self.mode not in (self.ALL_EXCEPT_BLACKLIST, self.WHITELIST_ONLY):
            raise ValueError(f"unknown keyword policy mode {self.mode!r}")
        for keyword in (*self.blacklist, *self.whitelist):
            if not keyword or not keyword.strip():
                raise ValueError("keywords must be non-empty strings")

    def to_dict(self) -> dict:
        return {"mode": self.mode, "blacklist": list(self.blacklist),
                "whitelist": list(self.whitelist)}

    @classmethod
    def from_dict(cls, data: dict) -> "KeywordPolicy":
        return cls(mode=data.get("mode", cls.ALL_EXCEPT_BLACKLIST),
                   blacklist=tuple(data.get("blacklist", ())),
                   whitelist=tuple(data.get("whitelist", ())))


@dataclass
class CrawlConfiguration:
    forum_id: str
    urls: dict[str, str] = field(default_factory=dict)
    username: str = ""
    secret: str = field(default="", repr=False)
    timezone: str = "UTC"
    wpm_range: tuple[float, float] = (180.0, 240.0)
    keyword_policy: KeywordPolicy = field(default_factory=KeywordPolicy)
    schedule: Schedule = field(default_factory=Schedule)
    download_images: bool = True
    proxy: str | None = None  # socks5://host:port, operator-supplied
    needs_cf_tickets: bool = False
    load_timeout_s: float = 60.0
    skip_training: bool = False

    def validate_urls(self, require: tuple[str, ...]) -> list[str]:
        """Names of required page URLs that are absent or blank."""
        return [key for key in require if not self.urls.get(key)]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "forum_id": self.forum_id,
            "urls": dict(self.urls),
            "username": self.username,
            "secret": self.secret,
            "timezone": self.timezone,
            "wpm_range": list(self.wpm_range),
            "keyword_policy": self.keyword_policy.to_dict(),
            "schedule": self.schedule.to_dict(),
            "download_images": self.download_images,
            "proxy": self.proxy,
            "needs_cf_tickets": self.needs_cf_tickets,
            "load_timeout_s": self.load_timeout_s,
            "skip_training": self.skip_training,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CrawlConfiguration":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaMismatch(f"unknown configuration schema version {version!r}")
        wpm = data.get("wpm_range", (180.0, 240.0))
        return cls(
            forum_id=data["forum_id"],
            urls=dict(data.get("urls", {})),
            username=data.get("username", ""),
            secret=data.get("secret", ""),
            timezone=data.get("timezone", "UTC"),
            wpm_range=(float(wpm[0]), float(wpm[1])),
            keyword_policy=KeywordPolicy.from_dict(data.get("keyword_policy", {})),
            schedule=Schedule.from_dict(data.get("schedule", {})),
            download_images=data.get("download_images", True),
            proxy=data.get("proxy"),
            needs_cf_tickets=data.get("needs_cf_tickets", False),
            load_timeout_s=data.get("load_timeout_s", 60.0),
            skip_training=data.get("skip_training", False),
        )


def save_configuration(config: CrawlConfiguration, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2), encoding="utf-8")


def load_configuration(path: str | Path) -> CrawlConfiguration:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return CrawlConfiguration.from_dict(data)

"""Trainable forum crawler.

Learn a forum's structure from labeled example pages (robust locator
inference with a strategy cascade), then crawl it under a configurable
human-behavior model: weekday schedules with jitter and random interrupts,
WPM reading delays, keyword censoring, script injection, and anti-bot
plumbing. Everything is testable offline against generated forum fixtures.
"""

from .clock import SimulatedClock, SystemClock
from .config import CrawlConfiguration, KeywordPolicy
from .crawl import (
    CommandChannel,
    CrawlSummary,
    PostRecord,
    canonical_thread_url,
    censor_thread_posts,
    extract_posts,
    handle_command,
    run_crawl,
    should_open_thread,
)
from .dom import (
    AbsolutePath,
    DomSnapshot,
    Element,
    absolute_path,
    node_at,
    parse_snapshot,
    text_content,
    to_html,
)
from .fetch import CaptchaSignal, PageHandle, TicketBundle, detect_captcha
from .fixture_adapter import FixtureAdapter
from .fixture_gen import ForumSpec, default_profile, generate_forum
from .locators import (
    Locator,
    NeedsManual,
    StabilityReport,
    Strategy,
    apply_ignore,
    infer_cascade,
    infer_s1,
    infer_s2,
    infer_s3,
    infer_s4,
    resolve,
    verify_stability,
)
from .profile import TrainedProfile, load_profile, save_profile
from .schedule import (
    ActivitySpan,
    Schedule,
    WorkWindow,
    compile_schedule,
    navigation_delay,
    next_action,
    reading_delay,
)
from .store import DataStore, PageArchive
from .training import TrainingSession, start_training
from .xpath import XPathExpr, evaluate_xpath

__version__ = "0.1.0"

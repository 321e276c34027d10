"""Weekday schedules, jitter, random interrupts, and human pacing delays.

compile_schedule turns a weekly schedule into concrete UTC activity spans
for one calendar day: work windows and breaks get uniform jitter within the
configured variances, and random interrupts are packed into run segments
(max-fit slots at minimum gap, thinned by fair coin flips) so traffic never
shows a clean daily pattern. All randomness flows through one seeded RNG,
so identical (schedule, date, seed) inputs compile to identical spans.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from zoneinfo import ZoneInfo

from .errors import ZeroRange

RUN = "run"
BREAK = "break"
INTERRUPT = "interrupt"

NAVIGATION_DELAY_RANGE = (5.0, 15.0)  # seconds, non-thread page moves

WEEKDAY_NAMES = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")


@dataclass(frozen=True)
class BreakWindow:
    start: str  # "HH:MM" local
    end: str


@dataclass(frozen=True)
class WorkWindow:
    start: str
    end: str
    breaks: tuple[BreakWindow, ...] = ()


@dataclass(frozen=True)
class Schedule:
    timezone: str = "UTC"
    windows: dict[int, tuple[WorkWindow, ...]] = field(default_factory=dict)
    session_variance_min: float = 0.0
    break_variance_min: float = 0.0
    interrupt_duration_range: tuple[float, float] = (0.0, 0.0)  # minutes
    interrupt_min_gap_min: float = 0.0

    def validate(self) -> None:
        if self.session_variance_min < 0 or self.break_variance_min < 0:
            raise ValueError("variances must be non-negative")
        for weekday, windows in self.windows.items():
            if not 0 <= weekday <= 6:
                raise ValueError(f"weekday out of range: {weekday}")
            for window in windows:
                w_start, w_end = _parse_hm(window.start), _parse_hm(window.end)
                if w_start >= w_end:
                    raise ValueError(f"window start must precede end: {window}")
                prev_end = None
                for brk in window.breaks:
                    b_start, b_end = _parse_hm(brk.start), _parse_hm(brk.end)
                    if not (w_start <= b_start < b_end <= w_end):
                        raise ValueError(f"break not nested in window: {brk}")
                    if prev_end is not None and b_start < prev_end:
                        raise ValueError(f"breaks overlap: {brk}")
                    prev_end = b_end

    def to_dict(self) -> dict:
        return {
            "timezone": self.timezone,
            "windows": {
                WEEKDAY_NAMES[d]: [
                    {"start": w.start, "end": w.end,
                     "breaks": [{"start": b.start, "end": b.end} for b in w.breaks]}
                    for w in ws
                ]
                for d, ws in sorted(self.windows.items())
            },
            "session_variance_min": self.session_variance_min,
            "break_variance_min": self.break_variance_min,
            "interrupt_duration_range": list(self.interrupt_duration_range),
            "interrupt_min_gap_min": self.interrupt_min_gap_min,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Schedule":
        windows: dict[int, tuple[WorkWindow, ...]] = {}
        for name, ws in data.get("windows", {}).items():
            day = WEEKDAY_NAMES.index(name.lower())
            windows[day] = tuple(
                WorkWindow(
                    start=w["start"], end=w["end"],
                    breaks=tuple(BreakWindow(b["start"], b["end"])
                                 for b in w.get("breaks", ())),
                )
                for w in ws
            )
        rng_range = data.get("interrupt_duration_range", (0.0, 0.0))
        return cls(
            timezone=data.get("timezone", "UTC"),
            windows=windows,
            session_variance_min=data.get("session_variance_min", 0.0),
            break_variance_min=data.get("break_variance_min", 0.0),
            interrupt_duration_range=(float(rng_range[0]), float(rng_range[1])),
            interrupt_min_gap_min=data.get("interrupt_min_gap_min", 0.0),
        )


@dataclass(frozen=True)
class ActivitySpan:
    kind: str  # RUN | BREAK | INTERRUPT
    start: datetime  # UTC
    end: datetime


@dataclass(frozen=True)
class Action:
    kind: str  # "run" | "pause" | "day_over"
    until: datetime | None = None

    RUN_UNTIL = "run"
    PAUSE_UNTIL = "pause"
    DAY_OVER = "day_over"


def _parse_hm(text: str) -> time:
    hours, minutes = text.split(":")
    return time(int(hours), int(minutes))


def _as_rng(rng: random.Random | int | None) -> random.Random:
    if isinstance(rng, random.Random):
        return rng
    return random.Random(rng)


def compile_schedule(schedule: Schedule, day: date,
                     rng: random.Random | int | None = None,
                     ) -> list[ActivitySpan]:
    """Concrete UTC spans for one day; empty list when nothing is scheduled."""
    schedule.validate()
    rand = _as_rng(rng)
    windows = schedule.windows.get(day.weekday(), ())
    if not windows:
        return []
    tz = ZoneInfo(schedule.timezone)

    def utc(hm: str) -> datetime:
        local = datetime.combine(day, _parse_hm(hm), tzinfo=tz)
        return local.astimezone(timezone.utc)

    def jitter(instant: datetime, variance_min: float) -> datetime:
        if variance_min <= 0:
            return instant
        return instant + timedelta(minutes=rand.uniform(-variance_min, variance_min))

    spans: list[ActivitySpan] = []
    last_slot_end: datetime | None = None
    prev_window_end: datetime | None = None
    for window in windows:
        w_start = jitter(utc(window.start), schedule.session_variance_min)
        w_end = jitter(utc(window.end), schedule.session_variance_min)
        if prev_window_end is not None:
            w_start = max(w_start, prev_window_end)
        if w_end <= w_start:
            continue
        prev_window_end = w_end

        pauses: list[ActivitySpan] = []
        prev_end = w_start
        for brk in window.breaks:
            b_start = jitter(utc(brk.start), schedule.break_variance_min)
            b_end = jitter(utc(brk.end), schedule.break_variance_min)
            b_start = min(max(b_start, prev_end), w_end)
            b_end = min(max(b_end, b_start), w_end)
            if b_end > b_start:
                pauses.append(ActivitySpan(BREAK, b_start, b_end))
                prev_end = b_end

        segments: list[tuple[datetime, datetime]] = []
        cursor = w_start
        for brk in pauses:
            if brk.start > cursor:
                segments.append((cursor, brk.start))
            cursor = brk.end
        if w_end > cursor:
            segments.append((cursor, w_end))

        d_min, d_max = schedule.interrupt_duration_range
        if d_max > 0:
            gap = timedelta(minutes=schedule.interrupt_min_gap_min)
            width = timedelta(minutes=d_max)
            for seg_start, seg_end in segments:
                cursor = seg_start
                if last_slot_end is not None:
                    cursor = max(cursor, last_slot_end + gap)
                while cursor + width <= seg_end:
                    slot = (cursor, cursor + width)
                    last_slot_end = slot[1]
                    cursor = last_slot_end + gap
                    if rand.random() < 0.5:
                        duration = timedelta(minutes=rand.uniform(d_min, d_max))
                        slack = (slot[1] - slot[0] - duration).total_seconds()
                        offset = timedelta(seconds=rand.random() * slack)
                        pauses.append(ActivitySpan(INTERRUPT, slot[0] + offset,
                                                   slot[0] + offset + duration))

        pauses.sort(key=lambda s: s.start)
        cursor = w_start
        for pause in pauses:
            if pause.start > cursor:
                spans.append(ActivitySpan(RUN, cursor, pause.start))
            spans.append(pause)
            cursor = pause.end
        if w_end > cursor:
            spans.append(ActivitySpan(RUN, cursor, w_end))
    return spans


def next_action(spans: list[ActivitySpan], now: datetime) -> Action:
    """Pure lookup; boundary instants belong to the later span."""
    if not spans or now >= spans[-1].end:
        return Action(Action.DAY_OVER)
    for span in spans:
        if span.start <= now < span.end:
            if span.kind == RUN:
                return Action(Action.RUN_UNTIL, span.end)
            return Action(Action.PAUSE_UNTIL, span.end)
    upcoming = min((s for s in spans if s.start > now), key=lambda s: s.start)
    return Action(Action.PAUSE_UNTIL, upcoming.start)


def reading_delay(word_count: int, wpm_range: tuple[float, float],
                  rng: random.Random | int | None = None) -> float:
    """Seconds a human would spend reading word_count words."""
    lo, hi = wpm_range
    if lo <= 0 or hi < lo:
        raise ZeroRange(f"invalid WPM range ({lo}, {hi})")
    if word_count <= 0:
        return 0.0
    wpm = _as_rng(rng).uniform(lo, hi)
    return word_count / wpm * 60.0


def navigation_delay(rng: random.Random | int | None = None) -> float:
    """Seconds to idle between non-thread page moves."""
    lo, hi = NAVIGATION_DELAY_RANGE
    return _as_rng(rng).uniform(lo, hi)

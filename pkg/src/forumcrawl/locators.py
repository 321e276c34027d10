"""Locator inference: the four-strategy cascade plus manual fallback.

A locator is the unit of trained knowledge: an XPath-subset expression, the
strategy that produced it, an ignore-list of blacklisted absolute paths, and
an optional date format for date-bearing labels. Strategies fall back in a
fixed order:

  S1  shortest unique attribute-prioritized expression (single element only)
  S2  common absolute path with disagreeing indices dropped
  S3  shared tag plus common class tokens
  S4  S2 re-run on paths recomputed from the live rendered DOM
  MANUAL  operator-supplied expression

S1 is a bounded breadth-first search over expression transformations
(specialize tag, add attribute predicate, add position, prepend an ancestor
level), refining the head step only; the first candidate that uniquely
matches the target wins.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Callable, Iterable, Mapping, Sequence

from .dom import AbsolutePath, DomSnapshot, Element, absolute_path, node_at, text_content
from .errors import (
    AdapterError,
    FetchFailed,
    LiveResolveFailed,
    MultiTarget,
    NoCommonClass,
    NotAMatch,
    NotUnique,
    ShapeMismatch,
    StrategyFailure,
)
from .xpath import XPathExpr, evaluate_xpath, token_predicate, xpath_literal

S1_BUDGET = 10_000

PRIORITY_ATTRIBUTES = ("id", "name", "class", "title", "alt", "value")
BLACKLISTED_ATTRIBUTES = frozenset({"src", "href", "onclick", "style",
                                    "height", "width"})


class Strategy(IntEnum):
    """Fallback order is the numeric order: S1 < S2 < S3 < S4 < MANUAL."""

    S1 = 1  # robust attribute (single element)
    S2 = 2  # common absolute path
    S3 = 3  # common class tokens
    S4 = 4  # live-DOM re-resolution
    MANUAL = 5


@dataclass(frozen=True)
class Locator:
    expr: XPathExpr
    strategy: Strategy
    ignore: frozenset[str] = frozenset()  # serialized absolute paths
    date_format: str | None = None

    def with_ignore(self, paths: Iterable[str]) -> "Locator":
        return replace(self, ignore=self.ignore | frozenset(paths))

    def to_dict(self) -> dict:
        return {
            "expr": self.expr.expression,
            "strategy": self.strategy.name,
            "ignore": sorted(self.ignore),
            "date_format": self.date_format,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Locator":
        return cls(
            expr=XPathExpr(data["expr"]),
            strategy=Strategy[data["strategy"]],
            ignore=frozenset(data.get("ignore", ())),
            date_format=data.get("date_format"),
        )


@dataclass(frozen=True)
class NeedsManual:
    """Not an error: the cascade is exhausted and wants operator input."""

    failures: tuple[tuple[Strategy, str], ...]


@dataclass(frozen=True)
class LabelStability:
    status: str  # "stable" | "missing" | "overmatching"
    surplus: int = 0

    STABLE = "stable"
    MISSING = "missing"
    OVERMATCHING = "overmatching"


@dataclass(frozen=True)
class StabilityReport:
    outcomes: dict[str, LabelStability]
    reload_count: int = 1

    def missing_labels(self) -> list[str]:
        return [k for k, v in self.outcomes.items() if v.status == LabelStability.MISSING]

    def all_stable(self) -> bool:
        return all(v.status == LabelStability.STABLE for v in self.outcomes.values())


# --- S1: bounded breadth-first search over expression transformations ---

@dataclass(frozen=True)
class _CandStep:
    tag: str  # '*' until specialized
    preds: tuple[tuple[str, str], ...] = ()
    position: int | None = None

    def serialize(self) -> str:
        parts = [self.tag]
        for attr, value in self.preds:
            parts.append(f"[@{attr}={xpath_literal(value)}]")
        if self.position is not None:
            parts.append(f"[{self.position}]")
        return "".join(parts)


def _candidate_expr(steps: tuple[_CandStep, ...]) -> str:
    return "//" + "/".join(s.serialize() for s in steps)


def _attr_order(node: Element) -> list[str]:
    ordered = [a for a in PRIORITY_ATTRIBUTES if a in node.attrs]
    extras = sorted(a for a in node.attrs
                    if a not in PRIORITY_ATTRIBUTES
                    and a not in BLACKLISTED_ATTRIBUTES)
    return ordered + extras


def _position_of(node: Element, among_tag: str) -> int:
    assert node.parent is not None
    index = 0
    for sibling in node.parent.children:
        if isinstance(sibling, Element) and (among_tag == "*" or sibling.tag == among_tag):
            index += 1
            if sibling is node:
                return index
    raise AssertionError("node not among its parent's children")


def _refinements(steps: tuple[_CandStep, ...],
                 ancestors: list[Element]) -> list[tuple[_CandStep, ...]]:
    """Children of a candidate; head-step refinements plus one more level."""
    out: list[tuple[_CandStep, ...]] = []
    head = steps[0]
    head_node = ancestors[len(steps) - 1]
    if head.tag == "*":
        out.append((replace(head, tag=head_node.tag),) + steps[1:])
    used = {attr for attr, _ in head.preds}
    for attr in _attr_order(head_node):
        if attr in used:
            continue
        value = head_node.attrs[attr]
        if "'" in value and '"' in value:
            continue
        out.append((replace(head, preds=head.preds + ((attr, value),)),) + steps[1:])
    if head.position is None:
        out.append((replace(head, position=_position_of(head_node, head.tag)),)
                   + steps[1:])
    if len(steps) < len(ancestors):
        out.append((_CandStep("*"),) + steps)
    return out


def infer_s1(snapshot: DomSnapshot, targets: Sequence[Element],
             budget: int = S1_BUDGET) -> Locator:
    """Shortest unique expression over prioritized attributes for one node."""
    if len(targets) != 1:
        raise MultiTarget(f"single-element strategy given {len(targets)} nodes")
    target = targets[0]
    ancestors: list[Element] = []
    cur: Element | None = target
    while cur is not None and cur is not snapshot.document:
        ancestors.append(cur)
        cur = cur.parent

    start = (_CandStep("*"),)
    queue: list[tuple[_CandStep, ...]] = [start]
    seen: set[str] = {_candidate_expr(start)}
    evaluated = 0
    qi = 0
    while qi < len(queue) and evaluated < budget:
        steps = queue[qi]
        qi += 1
        expr = _candidate_expr(steps)
        evaluated += 1
        matches = evaluate_xpath(snapshot, expr)
        if len(matches) == 1 and matches[0] is target:
            return Locator(XPathExpr(expr), Strategy.S1)
        for child in _refinements(steps, ancestors):
            key = _candidate_expr(child)
            if key not in seen:
                seen.add(key)
                queue.append(child)
    raise NotUnique(f"no unique expression within {evaluated} candidates")


# --- S2: generalized common absolute path ---

def _common_path_expr(snapshot: DomSnapshot, targets: Sequence[Element]) -> str:
    paths = [absolute_path(snapshot, t) for t in targets]
    first = paths[0]
    if len(paths) == 1:
        return first.serialize()
    for p in paths[1:]:
        if len(p.steps) != len(first.steps):
            raise ShapeMismatch(
                f"path lengths differ: {len(first.steps)} vs {len(p.steps)}")
        for (tag_a, _), (tag_b, _) in zip(first.steps, p.steps):
            if tag_a != tag_b:
                raise ShapeMismatch(f"tags differ at a step: {tag_a} vs {tag_b}")
    pieces: list[str] = []
    for depth, (tag, index) in enumerate(first.steps):
        indices = {p.steps[depth][1] for p in paths}
        if len(indices) == 1:
            pieces.append(f"/{tag}[{index}]")
        else:
            pieces.append(f"/{tag}")
    return "".join(pieces)


def infer_s2(snapshot: DomSnapshot, targets: Sequence[Element]) -> Locator:
    """Common absolute path; indices where targets disagree are dropped."""
    if not targets:
        raise ValueError("at least one target required")
    return Locator(XPathExpr(_common_path_expr(snapshot, targets)), Strategy.S2)


# --- S3: common class tokens ---

def infer_s3(snapshot: DomSnapshot, targets: Sequence[Element]) -> Locator:
    if not targets:
        raise ValueError("at least one target required")
    tags = {t.tag for t in targets}
    if len(tags) != 1:
        raise NoCommonClass(f"tag names differ: {sorted(tags)}")
    common = set(targets[0].class_tokens())
    for t in targets[1:]:
        common &= set(t.class_tokens())
    if not common:
        raise NoCommonClass("no class token shared by all targets")
    ordered = [tok for tok in targets[0].class_tokens() if tok in common]
    tag = targets[0].tag
    expr = f"//{tag}" + "".join(f"[{token_predicate('class', tok)}]"
                                for tok in ordered)
    return Locator(XPathExpr(expr), Strategy.S3)


# --- S4: re-resolve against the live rendered DOM ---

def _fingerprint(node: Element) -> tuple:
    text, _ = text_content(node)
    return (node.tag, tuple(sorted(node.attrs.items())), text)


def infer_s4(page, snapshot: DomSnapshot,
             targets: Sequence[Element]) -> Locator:
    """Relocate targets in the live DOM, then derive S2's common path there.

    Relocation matches on a structural fingerprint (tag + attributes +
    normalized text) that must be unique in the live DOM.
    """
    if not targets:
        raise ValueError("at least one target required")
    live = page.snapshot
    live_nodes: list[Element] = []
    for target in targets:
        fp = _fingerprint(target)
        matches = [el for el in live.elements() if _fingerprint(el) == fp]
        if len(matches) != 1:
            raise LiveResolveFailed(
                f"{target!r} matched {len(matches)} live nodes, need exactly 1")
        live_nodes.append(matches[0])
    return Locator(XPathExpr(_common_path_expr(live, live_nodes)), Strategy.S4)


# --- cascade ---

def infer_cascade(snapshot: DomSnapshot, targets: Sequence[Element],
                  live=None, start: Strategy = Strategy.S1,
                  date_format: str | None = None) -> Locator | NeedsManual:
    """Run strategies from `start` upward; first success wins.

    Returns NeedsManual (a value, not a fault) carrying the failure trail
    when every runnable strategy fails. S4 only runs when a live page
    handle is supplied; without one it is skipped silently.
    """
    failures: list[tuple[Strategy, str]] = []
    for strategy in (Strategy.S1, Strategy.S2, Strategy.S3, Strategy.S4):
        if strategy < start:
            continue
        try:
            if strategy == Strategy.S1:
                result = infer_s1(snapshot, targets)
            elif strategy == Strategy.S2:
                result = infer_s2(snapshot, targets)
            elif strategy == Strategy.S3:
                result = infer_s3(snapshot, targets)
            else:
                if live is None:
                    continue
                result = infer_s4(live, snapshot, targets)
        except StrategyFailure as exc:
            failures.append((strategy, str(exc)))
            continue
        if date_format is not None:
            result = replace(result, date_format=date_format)
        return result
    return NeedsManual(tuple(failures))


# --- ignore lists and resolution ---

def apply_ignore(locator: Locator, unwanted: Sequence[Element],
                 snapshot: DomSnapshot) -> Locator:
    """Blacklist the unwanted nodes' absolute paths on this locator."""
    if not unwanted:
        return locator
    matched = {el.doc_order for el in evaluate_xpath(snapshot, locator.expr)}
    paths: list[str] = []
    for node in unwanted:
        if node.doc_order not in matched or not snapshot.contains(node):
            raise NotAMatch(f"{node!r} does not match {locator.expr.expression}")
        paths.append(absolute_path(snapshot, node).serialize())
    return locator.with_ignore(paths)


def resolve(snapshot: DomSnapshot, locator: Locator) -> list[Element]:
    """evaluate_xpath minus ignored nodes; dangling ignore entries are inert."""
    matches = evaluate_xpath(snapshot, locator.expr)
    if not locator.ignore:
        return matches
    ignored: set[int] = set()
    for raw in locator.ignore:
        try:
            node = node_at(snapshot, AbsolutePath.from_string(raw))
        except Exception:
            continue
        ignored.add(node.doc_order)
    return [el for el in matches if el.doc_order not in ignored]


# --- stability verification ---

def verify_stability(refetch: Callable[[], DomSnapshot],
                     locators: Mapping[str, Locator],
                     expected_counts: Mapping[str, int] | None = None,
                     ) -> StabilityReport:
    """Reload once and re-resolve every locator.

    A label is Stable when it resolves to a non-empty set no larger than its
    training-time count; zero matches is Missing (caller asks the user and
    escalates); a surplus over the training count is Overmatching.
    """
    try:
        snap = refetch()
    except (AdapterError, OSError) as exc:
        raise FetchFailed(f"re-fetch failed: {exc}") from exc
    outcomes: dict[str, LabelStability] = {}
    for label, locator in locators.items():
        count = len(resolve(snap, locator))
        expected = expected_counts.get(label) if expected_counts else None
        if count == 0:
            outcomes[label] = LabelStability(LabelStability.MISSING)
        elif expected is not None and count > expected:
            outcomes[label] = LabelStability(LabelStability.OVERMATCHING,
                                             surplus=count - expected)
        else:
            outcomes[label] = LabelStability(LabelStability.STABLE)
    return StabilityReport(outcomes)

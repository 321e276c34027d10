"""Bounded XPath subset: parser and evaluator.

Supported grammar (everything the inference strategies emit, plus the manual
expressions operators paste in):

    union     := path ('|' path)*
    path      := (('/' | '//') step)+
    step      := (NAME | '*') predicate*
    predicate := '[' INTEGER ']'
                 | '[@' NAME '=' LITERAL ']'
                 | '[contains(@' NAME ',' LITERAL ')]'
                 | '[contains(concat(' ' ', normalize-space(@' NAME '), ' ' '), LITERAL)]'

Anything outside the subset raises UnsupportedSyntax naming the offending
token; there is no silent approximation. Every expression is also valid
XPath 1.0, so trained locators evaluate identically inside a real browser.
Positional predicates follow XPath semantics: they index the step's matches
per context node, so //a[1] selects every a that is its parent's first a.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .dom import DomSnapshot, Element
from .errors import UnsupportedSyntax

_TOKEN_RE = re.compile(r"""
    (?P<dslash>//)
  | (?P<slash>/)
  | (?P<union>\|)
  | (?P<lbracket>\[)
  | (?P<rbracket>\])
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<comma>,)
  | (?P<at>@)
  | (?P<eq>=)
  | (?P<star>\*)
  | (?P<number>\d+)
  | (?P<string>'[^']*'|"[^"]*")
  | (?P<name>[a-zA-Z_][a-zA-Z0-9_.-]*)
  | (?P<ws>\s+)
  | (?P<bad>.)
""", re.X)


@dataclass(frozen=True)
class Position:
    index: int


@dataclass(frozen=True)
class AttrEquals:
    attr: str
    value: str


@dataclass(frozen=True)
class AttrContains:
    attr: str
    value: str


@dataclass(frozen=True)
class TokenContains:
    """The contains(concat(' ',normalize-space(@a),' '),' tok ') idiom."""

    attr: str
    literal: str  # verbatim literal, normally ' tok '


Predicate = Position | AttrEquals | AttrContains | TokenContains


@dataclass(frozen=True)
class Step:
    name: str  # lowercase tag or '*'
    predicates: tuple[Predicate, ...]


@dataclass(frozen=True)
class Path:
    steps: tuple[tuple[str, Step], ...]  # (axis '/' or '//', step)


class XPathExpr:
    """A parsed expression; equality and hashing go by the source text."""

    def __init__(self, expression: str) -> None:
        self.expression = expression
        self.paths: tuple[Path, ...] = _parse(expression)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, XPathExpr) and other.expression == self.expression

    def __hash__(self) -> int:
        return hash(self.expression)

    def __repr__(self) -> str:
        return f"XPathExpr({self.expression!r})"

    def __str__(self) -> str:
        return self.expression


class _Tokens:
    def __init__(self, text: str) -> None:
        self.text = text
        self.items: list[tuple[str, str]] = []
        for m in _TOKEN_RE.finditer(text):
            kind = m.lastgroup
            if kind == "ws":
                continue
            if kind == "bad":
                raise UnsupportedSyntax(
                    f"unsupported token {m.group()!r} in {text!r}", m.group())
            self.items.append((kind, m.group()))
        self.pos = 0

    def peek(self) -> tuple[str, str]:
        if self.pos >= len(self.items):
            return ("eof", "")
        return self.items[self.pos]

    def next(self) -> tuple[str, str]:
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, kind: str) -> str:
        got_kind, got = self.next()
        if got_kind != kind:
            raise UnsupportedSyntax(
                f"expected {kind} but found {got or 'end of input'!r} "
                f"in {self.text!r}", got)
        return got


def _strip_literal(raw: str) -> str:
    return raw[1:-1]


def _parse(text: str) -> tuple[Path, ...]:
    toks = _Tokens(text)
    paths = [_parse_path(toks)]
    while toks.peek()[0] == "union":
        toks.next()
        paths.append(_parse_path(toks))
    kind, value = toks.peek()
    if kind != "eof":
        raise UnsupportedSyntax(f"trailing {value!r} in {text!r}", value)
    return tuple(paths)


def _parse_path(toks: _Tokens) -> Path:
    steps: list[tuple[str, Step]] = []
    kind, value = toks.peek()
    if kind not in ("slash", "dslash"):
        raise UnsupportedSyntax(
            f"paths must be absolute; found {value or 'end of input'!r} "
            f"in {toks.text!r}", value)
    while toks.peek()[0] in ("slash", "dslash"):
        kind, _ = toks.next()
        axis = "//" if kind == "dslash" else "/"
        steps.append((axis, _parse_step(toks)))
    return Path(tuple(steps))


def _parse_step(toks: _Tokens) -> Step:
    kind, value = toks.next()
    if kind == "star":
        name = "*"
    elif kind == "name":
        name = value.lower()
    else:
        raise UnsupportedSyntax(
            f"expected a tag name or * but found {value or 'end of input'!r} "
            f"in {toks.text!r}", value)
    predicates: list[Predicate] = []
    while toks.peek()[0] == "lbracket":
        toks.next()
        predicates.append(_parse_predicate(toks))
        toks.expect("rbracket")
    return Step(name, tuple(predicates))


def _parse_predicate(toks: _Tokens) -> Predicate:
    kind, value = toks.next()
    if kind == "number":
        return Position(int(value))
    if kind == "at":
        attr = toks.expect("name")
        toks.expect("eq")
        literal = toks.expect("string")
        return AttrEquals(attr.lower(), _strip_literal(literal))
    if kind == "name" and value == "contains":
        toks.expect("lparen")
        inner_kind, inner = toks.next()
        if inner_kind == "at":
            attr = toks.expect("name")
            toks.expect("comma")
            literal = toks.expect("string")
            toks.expect("rparen")
            return AttrContains(attr.lower(), _strip_literal(literal))
        if inner_kind == "name" and inner == "concat":
            return _parse_token_contains(toks)
        raise UnsupportedSyntax(
            f"contains() supports @attr or the class-token concat idiom, "
            f"found {inner!r} in {toks.text!r}", inner)
    raise UnsupportedSyntax(
        f"unsupported predicate starting at {value!r} in {toks.text!r}", value)


def _parse_token_contains(toks: _Tokens) -> TokenContains:
    # contains(concat(' ',normalize-space(@a),' '),' tok ')
    toks.expect("lparen")
    pad1 = _strip_literal(toks.expect("string"))
    toks.expect("comma")
    fn = toks.expect("name")
    if fn != "normalize-space":
        raise UnsupportedSyntax(
            f"expected normalize-space inside concat, found {fn!r}", fn)
    toks.expect("lparen")
    toks.expect("at")
    attr = toks.expect("name")
    toks.expect("rparen")
    toks.expect("comma")
    pad2 = _strip_literal(toks.expect("string"))
    toks.expect("rparen")
    toks.expect("comma")
    literal = _strip_literal(toks.expect("string"))
    toks.expect("rparen")
    if pad1 != " " or pad2 != " ":
        raise UnsupportedSyntax(
            "concat padding must be single spaces in the class-token idiom",
            pad1 or pad2)
    return TokenContains(attr.lower(), literal)


# --- evaluation ---

def _matches_name(el: Element, name: str) -> bool:
    return name == "*" or el.tag == name


def _attr_passes(el: Element, pred: Predicate) -> bool:
    if isinstance(pred, AttrEquals):
        return el.attrs.get(pred.attr) == pred.value
    if isinstance(pred, AttrContains):
        value = el.attrs.get(pred.attr)
        return value is not None and pred.value in value
    if isinstance(pred, TokenContains):
        value = el.attrs.get(pred.attr)
        if value is None:
            return False
        padded = " " + " ".join(value.split()) + " "
        return pred.literal in padded
    raise TypeError(pred)


def _apply_predicates(candidates: list[Element],
                      predicates: tuple[Predicate, ...]) -> list[Element]:
    current = candidates
    for pred in predicates:
        if isinstance(pred, Position):
            current = [current[pred.index - 1]] if len(current) >= pred.index else []
        else:
            current = [el for el in current if _attr_passes(el, pred)]
        if not current:
            break
    return current


def _child_matches(context: Element, step: Step) -> list[Element]:
    candidates = [c for c in context.children
                  if isinstance(c, Element) and _matches_name(c, step.name)]
    return _apply_predicates(candidates, step.predicates)


def _indexed_descendant_step(snapshot: DomSnapshot, step: Step) -> list[Element]:
    """Fast path for a document-rooted // step, via the per-tag index."""
    base = (snapshot.by_tag(step.name) if step.name != "*"
            else snapshot.elements())
    if not any(isinstance(p, Position) for p in step.predicates):
        return [el for el in base
                if all(_attr_passes(el, p) for p in step.predicates)]
    by_parent: dict[int, list[Element]] = {}
    for el in base:
        by_parent.setdefault(id(el.parent), []).append(el)
    result: list[Element] = []
    for group in by_parent.values():
        result.extend(_apply_predicates(group, step.predicates))
    return sorted(result, key=lambda e: e.doc_order)


def _eval_path(snapshot: DomSnapshot, path: Path) -> list[Element]:
    contexts: list[Element] = [snapshot.document]
    for axis, step in path.steps:
        if axis == "//":
            if len(contexts) == 1 and contexts[0] is snapshot.document:
                contexts = _indexed_descendant_step(snapshot, step)
                continue
            expanded: list[Element] = []
            seen: set[int] = set()
            for ctx in contexts:
                for node in [ctx] + snapshot.descendants_of(ctx):
                    if node.doc_order not in seen:
                        seen.add(node.doc_order)
                        expanded.append(node)
            contexts = sorted(expanded, key=lambda e: e.doc_order)
        result: list[Element] = []
        taken: set[int] = set()
        for ctx in contexts:
            for el in _child_matches(ctx, step):
                if el.doc_order not in taken:
                    taken.add(el.doc_order)
                    result.append(el)
        contexts = sorted(result, key=lambda e: e.doc_order)
    return contexts


def evaluate_xpath(snapshot: DomSnapshot, expr: XPathExpr | str) -> list[Element]:
    """All matches in document order, duplicate-free; unions are set unions."""
    if isinstance(expr, str):
        expr = XPathExpr(expr)
    merged: list[Element] = []
    seen: set[int] = set()
    for path in expr.paths:
        for el in _eval_path(snapshot, path):
            if el.doc_order not in seen:
                seen.add(el.doc_order)
                merged.append(el)
    return sorted(merged, key=lambda e: e.doc_order)


def xpath_literal(value: str) -> str:
    """Quote a string as an XPath literal; raises if both quote kinds occur."""
    if "'" not in value:
        return f"'{value}'"
    if '"' not in value:
        return f'"{value}"'
    raise UnsupportedSyntax(
        f"cannot express a literal containing both quote kinds: {value!r}", value)


def token_predicate(attr: str, token: str) -> str:
    """Class-token containment predicate in its XPath 1.0 spelling."""
    return (f"contains(concat(' ',normalize-space(@{attr}),' ')," +
            xpath_literal(f" {token} ") + ")")

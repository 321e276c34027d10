"""Immutable HTML page snapshots with stable node identities.

A snapshot is parsed once from raw bytes and never mutated; node identity is
Python object identity, and every element knows its absolute structural path
(root-to-node steps indexed among same-tag siblings). Error recovery follows
the HTML5 tree-construction rules real forum markup relies on: implied
html/head/body, void elements, auto-closing p/li/dt/dd/tr/td/th/option,
stray end tags ignored, content after </html> appended to body.
"""

from __future__ import annotations

import codecs
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from html import escape
from html.parser import HTMLParser

from .errors import EmptyInput, ForeignNode

VOID_ELEMENTS = frozenset({
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
})

# Start tags that imply </p> when a p element is open.
_P_CLOSERS = frozenset({
    "address", "article", "aside", "blockquote", "div", "dl", "fieldset",
    "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5",
    "h6", "header", "hr", "main", "nav", "ol", "p", "pre", "section",
    "table", "ul",
})

_HEAD_ONLY = frozenset({"base", "link", "meta", "title", "style"})

_CHARSET_RE = re.compile(rb"""<meta[^>]+charset\s*=\s*["']?([a-zA-Z0-9_.:-]+)""", re.I)


class TextNode:
    """Character data inside an element."""

    __slots__ = ("data", "parent")

    def __init__(self, data: str, parent: "Element | None" = None) -> None:
        self.data = data
        self.parent = parent

    def __repr__(self) -> str:
        return f"TextNode({self.data[:30]!r})"


class Element:
    """An element node; identity is object identity within one snapshot."""

    __slots__ = ("tag", "attrs", "children", "parent",
                 "doc_order", "subtree_end", "snapshot")

    def __init__(self, tag: str, attrs: dict[str, str] | None = None) -> None:
        self.tag = tag
        self.attrs: dict[str, str] = attrs or {}
        self.children: list[Element | TextNode] = []
        self.parent: Element | None = None
        self.doc_order = -1
        self.subtree_end = -1
        self.snapshot: DomSnapshot | None = None

    def element_children(self) -> list["Element"]:
        return [c for c in self.children if isinstance(c, Element)]

    def iter_elements(self):
        """Depth-first over this element and all element descendants."""
        yield self
        for child in self.children:
            if isinstance(child, Element):
                yield from child.iter_elements()

    def class_tokens(self) -> list[str]:
        return self.attrs.get("class", "").split()

    def __repr__(self) -> str:
        ident = self.attrs.get("id")
        suffix = f" id={ident!r}" if ident else ""
        return f"<Element {self.tag}{suffix} #{self.doc_order}>"


@dataclass(frozen=True)
class AbsolutePath:
    """Root-to-node steps; each index counts same-tag siblings, 1-based."""

    steps: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        if not self.steps or self.steps[0] != ("html", 1):
            raise ValueError(f"absolute path must start at /html[1]: {self.steps!r}")

    def serialize(self) -> str:
        return "".join(f"/{tag}[{idx}]" for tag, idx in self.steps)

    @classmethod
    def from_string(cls, text: str) -> "AbsolutePath":
        parts = re.findall(r"/([a-zA-Z][a-zA-Z0-9_-]*)\[(\d+)\]", text)
        rebuilt = "".join(f"/{t}[{i}]" for t, i in parts)
        if not parts or rebuilt != text:
            raise ValueError(f"not a serialized absolute path: {text!r}")
        return cls(tuple((t.lower(), int(i)) for t, i in parts))

    def __str__(self) -> str:
        return self.serialize()


class DomSnapshot:
    """Parsed page: immutable tree plus document-order indexes."""

    def __init__(self, root: Element, source_url: str, raw_bytes: bytes,
                 fetched_at: datetime) -> None:
        self.root = root
        self.source_url = source_url
        self.raw_bytes = raw_bytes
        self.fetched_at = fetched_at
        self.document = Element("#document")
        self.document.children = [root]
        root.parent = self.document
        self._elements: list[Element] = []
        self._by_tag: dict[str, list[Element]] = {}
        self._index()

    def _index(self) -> None:
        order = 0
        self.document.doc_order = order
        self.document.snapshot = self

        def visit(el: Element) -> None:
            nonlocal order
            order += 1
            el.doc_order = order
            el.snapshot = self
            self._elements.append(el)
            self._by_tag.setdefault(el.tag, []).append(el)
            for child in el.children:
                if isinstance(child, Element):
                    visit(child)
                else:
                    child.parent = el
            el.subtree_end = order

        visit(self.root)
        self.document.subtree_end = self.root.subtree_end

    def contains(self, node: Element) -> bool:
        return isinstance(node, Element) and node.snapshot is self

    def elements(self) -> list[Element]:
        """All element nodes in document order."""
        return list(self._elements)

    def by_tag(self, tag: str) -> list[Element]:
        return list(self._by_tag.get(tag, ()))

    def descendants_of(self, node: Element) -> list[Element]:
        """Element descendants of node (excluding node), document order."""
        if node is self.document:
            return list(self._elements)
        lo, hi = node.doc_order, node.subtree_end
        return [e for e in self._elements if lo < e.doc_order <= hi]

    def __repr__(self) -> str:
        return f"DomSnapshot({self.source_url!r}, {len(self._elements)} elements)"


class _TreeBuilder(HTMLParser):
    """HTML5-style tree construction on top of the stdlib tokenizer."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.root = Element("html")
        self.head: Element | None = None
        self.body: Element | None = None
        self.stack: list[Element] = [self.root]
        self.saw_explicit_html = False

    # --- insertion helpers ---

    def _current(self) -> Element:
        return self.stack[-1]

    def _insert(self, el: Element, push: bool) -> None:
        parent = self._current()
        el.parent = parent
        parent.children.append(el)
        if push:
            self.stack.append(el)

    def _ensure_head(self) -> None:
        if self.head is None:
            self.head = Element("head")
            self.head.parent = self.root
            self.root.children.append(self.head)

    def _ensure_body(self) -> Element:
        if self.head is not None and self.head in self.stack:
            del self.stack[self.stack.index(self.head):]
        if self.body is None:
            self._ensure_head()
            self.body = Element("body")
            self.body.parent = self.root
            self.root.children.append(self.body)
        if self.body not in self.stack:
            del self.stack[1:]
            self.stack.append(self.body)
        return self.body

    def _close_up_to(self, tags: frozenset[str], stop: frozenset[str]) -> None:
        """Pop the innermost open element in tags, if reachable before stop."""
        for i in range(len(self.stack) - 1, 0, -1):
            t = self.stack[i].tag
            if t in tags:
                del self.stack[i:]
                return
            if t in stop or t in ("body", "html"):
                return

    # --- tokenizer callbacks ---

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        attr_map = _attr_dict(attrs)
        if tag == "html":
            self.saw_explicit_html = True
            _merge_attrs(self.root, attr_map)
            return
        if tag == "head":
            self._ensure_head()
            if self.body is None and self.head not in self.stack:
                self.stack.append(self.head)
            _merge_attrs(self.head, attr_map)
            return
        if tag == "body":
            body = self._ensure_body()
            _merge_attrs(body, attr_map)
            return

        if self.body is None and tag in _HEAD_ONLY:
            self._ensure_head()
            if self.head not in self.stack:
                self.stack.append(self.head)
            self._insert(Element(tag, attr_map), push=tag not in VOID_ELEMENTS)
            return
        if tag == "script" and self.body is None:
            self._ensure_head()
            if self.head not in self.stack:
                self.stack.append(self.head)
            self._insert(Element(tag, attr_map), push=True)
            return

        self._ensure_body()
        if tag in _P_CLOSERS:
            self._close_up_to(frozenset({"p"}), frozenset({"table", "td", "th"}))
        if tag == "li":
            self._close_up_to(frozenset({"li"}), frozenset({"ul", "ol"}))
        elif tag in ("dt", "dd"):
            self._close_up_to(frozenset({"dt", "dd"}), frozenset({"dl"}))
        elif tag == "tr":
            self._close_up_to(frozenset({"tr"}),
                              frozenset({"table", "thead", "tbody", "tfoot"}))
            if self._current().tag == "table":
                self._insert(Element("tbody"), push=True)
        elif tag in ("td", "th"):
            self._close_up_to(frozenset({"td", "th"}), frozenset({"tr", "table"}))
        elif tag == "option":
            self._close_up_to(frozenset({"option"}), frozenset({"select"}))
        elif tag in ("thead", "tbody", "tfoot"):
            self._close_up_to(frozenset({"thead", "tbody", "tfoot"}),
                              frozenset({"table"}))
        self._insert(Element(tag, attr_map), push=tag not in VOID_ELEMENTS)

    def handle_startendtag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        # Self-closing syntax only matters for void elements in HTML5;
        # anything else opens normally, so both cases route to starttag.
        self.handle_starttag(tag, attrs)

    def handle_endtag(self, tag: str) -> None:
        if tag in VOID_ELEMENTS:
            return
        if tag == "head":
            if self.head is not None and self.head in self.stack:
                del self.stack[self.stack.index(self.head):]
            return
        if tag in ("body", "html"):
            # Keep accepting content into body (late content is recovered).
            return
        for i in range(len(self.stack) - 1, 0, -1):
            el = self.stack[i]
            if el.tag == tag:
                del self.stack[i:]
                return
            if el.tag in ("body", "html"):
                break
        # Stray end tag: ignored.

    def handle_data(self, data: str) -> None:
        current = self._current()
        if current is self.root or current is self.head:
            if not data.strip():
                return
            self._ensure_body()
            current = self._current()
        current.children.append(TextNode(data, current))

    def finish(self) -> Element:
        self.close()
        if self.body is None:
            self._ensure_body()
        return self.root


def _attr_dict(attrs: list[tuple[str, str | None]]) -> dict[str, str]:
    out: dict[str, str] = {}
    for name, value in attrs:
        if name not in out:
            out[name] = value if value is not None else ""
    return out


def _merge_attrs(el: Element, attrs: dict[str, str]) -> None:
    for name, value in attrs.items():
        el.attrs.setdefault(name, value)


def sniff_encoding(raw: bytes) -> str:
    """BOM, then meta charset in the first 2048 bytes, else UTF-8."""
    if raw.startswith(codecs.BOM_UTF8):
        return "utf-8-sig"
    if raw.startswith(codecs.BOM_UTF16_LE) or raw.startswith(codecs.BOM_UTF16_BE):
        return "utf-16"
    match = _CHARSET_RE.search(raw[:2048])
    if match:
        name = match.group(1).decode("ascii", "replace")
        try:
            codecs.lookup(name)
            return name
        except LookupError:
            pass
    return "utf-8"


def parse_snapshot(html: bytes, source_url: str = "",
                   fetched_at: datetime | None = None) -> DomSnapshot:
    """Parse raw HTML bytes into an immutable snapshot.

    Malformed markup is recovered, never fatal; only a zero-length document
    raises EmptyInput.
    """
    if isinstance(html, str):
        html = html.encode("utf-8")
    text = html.decode(sniff_encoding(html), errors="replace")
    if len(text) == 0:
        raise EmptyInput("document is empty after decoding")
    builder = _TreeBuilder()
    builder.feed(text)
    root = builder.finish()
    when = fetched_at or datetime.now(timezone.utc)
    return DomSnapshot(root, source_url, html, when)


def absolute_path(snapshot: DomSnapshot, node: Element) -> AbsolutePath:
    """Fully indexed path from /html[1] down to node."""
    if not snapshot.contains(node):
        raise ForeignNode(f"node {node!r} is not from this snapshot")
    steps: list[tuple[str, int]] = []
    current = node
    while current is not snapshot.document:
        parent = current.parent
        assert parent is not None
        index = 0
        for sibling in parent.children:
            if isinstance(sibling, Element) and sibling.tag == current.tag:
                index += 1
                if sibling is current:
                    break
        steps.append((current.tag, index))
        current = parent
    return AbsolutePath(tuple(reversed(steps)))


def node_at(snapshot: DomSnapshot, path: AbsolutePath) -> Element:
    """Inverse of absolute_path; raises ForeignNode if the path dangles."""
    current = snapshot.document
    for tag, index in path.steps:
        count = 0
        found = None
        for child in current.children:
            if isinstance(child, Element) and child.tag == tag:
                count += 1
                if count == index:
                    found = child
                    break
        if found is None:
            raise ForeignNode(f"no node at {path.serialize()} (failed at {tag}[{index}])")
        current = found
    return current


def text_content(node: Element) -> tuple[str, int]:
    """Whitespace-normalized descendant text and its word count."""
    parts: list[str] = []

    def collect(el: Element) -> None:
        for child in el.children:
            if isinstance(child, TextNode):
                parts.append(child.data)
            else:
                collect(child)

    collect(node)
    words = " ".join(parts).split()
    return " ".join(words), len(words)


def to_html(node: Element) -> str:
    """Serialize the subtree rooted at node back to HTML."""
    out: list[str] = []

    def emit(el: Element) -> None:
        attrs = "".join(f' {k}="{escape(v, quote=True)}"' for k, v in el.attrs.items())
        if el.tag in VOID_ELEMENTS:
            out.append(f"<{el.tag}{attrs}>")
            return
        out.append(f"<{el.tag}{attrs}>")
        for child in el.children:
            if isinstance(child, TextNode):
                out.append(escape(child.data))
            else:
                emit(child)
        out.append(f"</{el.tag}>")

    emit(node)
    return "".join(out)


def structurally_equal(a: Element, b: Element) -> bool:
    """Same tags, attributes, and text layout, recursively."""
    if a.tag != b.tag or a.attrs != b.attrs:
        return False
    if len(a.children) != len(b.children):
        return False
    for ca, cb in zip(a.children, b.children):
        if isinstance(ca, TextNode) != isinstance(cb, TextNode):
            return False
        if isinstance(ca, TextNode):
            if ca.data != cb.data:
                return False
        elif not structurally_equal(ca, cb):
            return False
    return True

"""Shared fixtures: snapshot helpers and seeded random-tree generation."""

from __future__ import annotations

import random

import pytest

from forumcrawl.dom import DomSnapshot, parse_snapshot

_TAGS = ("div", "span", "p", "a", "ul", "li", "section", "article", "b", "em")
_WORDS = ("alpha", "beta", "gamma", "delta", "epsilon", "zeta")


def snap(html: str | bytes, url: str = "https://t.example/x") -> DomSnapshot:
    if isinstance(html, str):
        html = html.encode()
    return parse_snapshot(html, url)


def random_tree_html(seed: int, target_nodes: int) -> str:
    """Deterministic nested markup with roughly target_nodes elements."""
    rng = random.Random(seed)
    parts: list[str] = []
    count = 0

    def emit(depth: int) -> None:
        nonlocal count
        if count >= target_nodes:
            return
        tag = rng.choice(_TAGS)
        count += 1
        attrs = ""
        if rng.random() < 0.4:
            attrs += f' class="{rng.choice(_WORDS)} {rng.choice(_WORDS)}"'
        if rng.random() < 0.2:
            attrs += f' id="n{count}"'
        parts.append(f"<{tag}{attrs}>")
        if rng.random() < 0.5:
            parts.append(rng.choice(_WORDS))
        for _ in range(rng.randint(0, 3 if depth < 8 else 0)):
            emit(depth + 1)
        parts.append(f"</{tag}>")

    while count < target_nodes:
        emit(0)
    return "<html><head><title>rt</title></head><body>" + "".join(parts) + "</body></html>"


@pytest.fixture
def random_snapshot() -> DomSnapshot:
    return snap(random_tree_html(seed=101, target_nodes=400))

"""XPath subset: grammar bounds, evaluation semantics, union."""

from __future__ import annotations

import pytest

from forumcrawl.errors import UnsupportedSyntax
from forumcrawl.fixture_gen import ForumSpec, generate_forum
from forumcrawl.xpath import XPathExpr, evaluate_xpath, token_predicate, xpath_literal

from conftest import snap


def test_root_step():
    s = snap("<html><body><div></div></body></html>")
    assert evaluate_xpath(s, "/html[1]") == [s.root]
    assert evaluate_xpath(s, "/html") == [s.root]


def test_absolute_child_steps():
    s = snap("<html><body><div><a>1</a><a>2</a></div></body></html>")
    assert [text(n) for n in evaluate_xpath(s, "/html[1]/body[1]/div[1]/a[2]")] == ["2"]


def test_descendant_anywhere():
    s = snap("<body><div><p><a>x</a></p></div><a>y</a></body>")
    assert len(evaluate_xpath(s, "//a")) == 2


def test_positional_predicate_is_per_parent():
    s = snap("<body><div><a>1</a><a>2</a></div><div><a>3</a></div></body>")
    first_as = evaluate_xpath(s, "//a[1]")
    assert [text(n) for n in first_as] == ["1", "3"]


def test_attribute_equals_and_contains():
    s = snap('<body><a href="x" rel="nofollow external">1</a>'
             '<a rel="external">2</a></body>')
    assert len(evaluate_xpath(s, "//a[@rel='external']")) == 1
    assert len(evaluate_xpath(s, "//a[contains(@rel,'external')]")) == 2


def test_class_token_containment_is_exact_token():
    s = snap('<body><div class="post hot">a</div><div class="poster">b</div>'
             '<div class="post">c</div></body>')
    expr = f"//div[{token_predicate('class', 'post')}]"
    matches = evaluate_xpath(s, expr)
    assert [text(n) for n in matches] == ["a", "c"]  # 'poster' must not match


def test_preview_tooltip_attribute_on_generated_fixture(tmp_path):
    spec = ForumSpec(sections=1, subsections_per_section=1,
                     threads_per_listing=20, threads_per_listing_page=20,
                     pages_per_thread=1, posts_per_page=1)
    generate_forum(tmp_path, spec)
    s = snap((tmp_path / "sub-1-1-p1.html").read_bytes())
    nodes = evaluate_xpath(s, '//*[@data-xf-init="preview-tooltip"]')
    assert len(nodes) == 20


def test_union_against_per_branch_oracle(random_snapshot):
    s = random_snapshot
    # oracle: evaluate each branch independently, set-union, document order
    for left, right in [("//a[1]", "//b[1]"), ("//div", "//span[1]"),
                        ("//li", "//li[1]")]:
        branch_union = {n.doc_order: n for n in evaluate_xpath(s, left)}
        branch_union.update({n.doc_order: n for n in evaluate_xpath(s, right)})
        expected = [branch_union[k] for k in sorted(branch_union)]
        assert evaluate_xpath(s, f"{left} | {right}") == expected


def test_union_no_duplicates():
    s = snap("<body><div><a>1</a></div></body>")
    assert len(evaluate_xpath(s, "//a | //a[1] | //div/a")) == 1


def test_document_order_and_dedupe(random_snapshot):
    out = evaluate_xpath(random_snapshot, "//div | //span | //*")
    orders = [n.doc_order for n in out]
    assert orders == sorted(orders)
    assert len(set(orders)) == len(orders)


def test_wildcard():
    s = snap("<body><div><a>1</a></div></body>")
    assert {n.tag for n in evaluate_xpath(s, "//div/*")} == {"a"}


def test_mid_path_descendant():
    s = snap("<body><div><p><a>in</a></p></div><a>out</a></body>")
    assert [text(n) for n in evaluate_xpath(s, "//div//a")] == ["in"]


@pytest.mark.parametrize("expression, token", [
    ("//a[text()='1']", "text"),
    ("//a[last()]", "last"),
    ("div/a", "div"),
    ("//a[@href]", "]"),
    ("//child::a", ":"),
    ("//a[position()=1]", "position"),
    ("//a[1 and 2]", "and"),
    ("//a/..", "."),
    ("//a[starts-with(@id,'x')]", "starts-with"),
])
def test_unsupported_syntax_names_token(expression, token):
    with pytest.raises(UnsupportedSyntax) as err:
        XPathExpr(expression)
    assert token in str(err.value)


def test_xpath_literal_quoting():
    assert xpath_literal("plain") == "'plain'"
    assert xpath_literal("it's") == '"it\'s"'
    with pytest.raises(UnsupportedSyntax):
        xpath_literal("both ' and \" quotes")


def test_token_predicate_roundtrips_through_grammar():
    expr = f"//div[{token_predicate('class', 'message-body')}]"
    XPathExpr(expr)  # must parse under the subset grammar


def text(node) -> str:
    from forumcrawl.dom import text_content
    return text_content(node)[0]

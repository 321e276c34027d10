"""Strategy cascade: S1-S4, ignore lists, stability verification."""

from __future__ import annotations

import pytest

from forumcrawl.dom import absolute_path
from forumcrawl.errors import (
    FetchFailed,
    LiveResolveFailed,
    MultiTarget,
    NoCommonClass,
    NotAMatch,
    NotUnique,
    ShapeMismatch,
)
from forumcrawl.fetch import PageHandle
from forumcrawl.fixture_adapter import FixtureAdapter
from forumcrawl.fixture_gen import ForumSpec, generate_forum
from forumcrawl.locators import (
    LabelStability,
    Locator,
    NeedsManual,
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
from forumcrawl.xpath import evaluate_xpath

from conftest import snap


# --- S1 ---

def test_s1_unique_id():
    s = snap("<body><div>x</div><div id='nav'>y</div><div>z</div></body>")
    target = [el for el in s.by_tag("div") if el.attrs.get("id") == "nav"]
    locator = infer_s1(s, target)
    assert locator.expr.expression == "//*[@id='nav']"
    assert locator.strategy == Strategy.S1
    assert evaluate_xpath(s, locator.expr) == target


def test_s1_stable_autocomplete_attribute():
    # xss-style login: ids/names absent, the star form over-matches because
    # the form carries the attribute too, so the tagged form wins.
    s = snap(
        '<body><form autocomplete="username">'
        '<input type="text" class="input-field" autocomplete="username">'
        '<input type="password" class="input-field" autocomplete="current-password">'
        '</form><input type="text" class="search"></body>')
    target = [s.by_tag("input")[0]]
    locator = infer_s1(s, target)
    assert locator.expr.expression == "//input[@autocomplete='username']"
    # brute-force uniqueness oracle
    assert evaluate_xpath(s, locator.expr) == target


def test_s1_never_uses_blacklisted_attributes():
    s = snap('<body><a href="unique-h.html">1</a><a>2</a></body>')
    locator = infer_s1(s, [s.by_tag("a")[0]])
    assert "href" not in locator.expr.expression
    assert evaluate_xpath(s, locator.expr) == [s.by_tag("a")[0]]


def test_s1_multi_target():
    s = snap("<body><a>1</a><a>2</a></body>")
    with pytest.raises(MultiTarget):
        infer_s1(s, s.by_tag("a"))


def _adversarial_clone_page() -> str:
    """Two identical deep subtrees; only an index far up distinguishes them."""
    def subtree(depth: int) -> str:
        if depth == 0:
            return "<b class='leaf x y' title='t' alt='a'>end</b>"
        return (f"<div class='w{depth % 3} q' title='t{depth % 2}' alt='a'>"
                + subtree(depth - 1) * 2 + "</div>")
    return f"<html><body>{subtree(9)}{subtree(9)}</body></html>"


def test_s1_budget_exhaustion_not_unique():
    s = snap(_adversarial_clone_page())
    leaves = s.by_tag("b")
    target = [leaves[len(leaves) - 1]]
    with pytest.raises(NotUnique):
        infer_s1(s, target, budget=2000)


# --- S2 ---

XSS_SPEC = ForumSpec(forum_id="xss-style", sections=1,
                     subsections_per_section=8, threads_per_listing=20,
                     threads_per_listing_page=20, pages_per_thread=1,
                     posts_per_page=1, tagged_threads=True,
                     thread_link_class="listLink", tag_link_class="listLink")


@pytest.fixture(scope="module")
def xss_fixture(tmp_path_factory):
    root = tmp_path_factory.mktemp("xss")
    meta = generate_forum(root, XSS_SPEC)
    return root, meta


def test_s2_drops_only_disagreeing_index(xss_fixture):
    root, _ = xss_fixture
    s = snap((root / "home.html").read_bytes())
    subs = evaluate_xpath(s, "//h3/a")
    assert len(subs) == 8
    targets = [subs[4], subs[5]]  # the blocks at div[5] and div[6]
    paths = [absolute_path(s, t).serialize() for t in targets]
    assert "/div[5]/" in paths[0] and "/div[6]/" in paths[1]
    locator = infer_s2(s, targets)
    assert locator.strategy == Strategy.S2
    expected = paths[0].replace("/div[5]/", "/div/")
    assert locator.expr.expression == expected
    matches = evaluate_xpath(s, locator.expr)
    assert len(matches) == 8  # generalizes to all sibling subsections
    assert set(id(t) for t in targets) <= set(id(m) for m in matches)


def test_s2_single_target_is_identity(xss_fixture):
    root, _ = xss_fixture
    s = snap((root / "home.html").read_bytes())
    node = evaluate_xpath(s, "//h3/a")[0]
    locator = infer_s2(s, [node])
    assert locator.expr.expression == absolute_path(s, node).serialize()
    assert evaluate_xpath(s, locator.expr) == [node]


def test_s2_shape_mismatch():
    s = snap("<body><div><a>1</a></div><p><span><a>2</a></span></p></body>")
    with pytest.raises(ShapeMismatch):
        infer_s2(s, s.by_tag("a"))


def test_s2_overmatches_tagged_thread_links(xss_fixture):
    root, _ = xss_fixture
    s = snap((root / "sub-1-1-p1.html").read_bytes())
    threads = evaluate_xpath(s, '//*[@data-xf-init="preview-tooltip"]')
    assert len(threads) == 20
    # one tagged thread (link is a[2]) and one untagged (a[1])
    tagged = [t for t in threads
              if absolute_path(s, t).serialize().endswith("a[2]")]
    untagged = [t for t in threads
                if absolute_path(s, t).serialize().endswith("a[1]")]
    locator = infer_s2(s, [untagged[0], tagged[0]])
    matches = evaluate_xpath(s, locator.expr)
    assert len(matches) > 20  # thread links plus tag links


def test_s2_minimality_brute_force(xss_fixture):
    # Re-specializing any dropped index must exclude at least one target.
    root, _ = xss_fixture
    s = snap((root / "home.html").read_bytes())
    subs = evaluate_xpath(s, "//h3/a")
    targets = [subs[4], subs[5]]
    locator = infer_s2(s, targets)
    paths = [absolute_path(s, t) for t in targets]
    for depth, (tag, _) in enumerate(paths[0].steps):
        indices = {p.steps[depth][1] for p in paths}
        if len(indices) == 1:
            continue
        for index in indices:
            pieces = []
            for d, (t2, i2) in enumerate(paths[0].steps):
                if d == depth:
                    pieces.append(f"/{t2}[{index}]")
                elif len({p.steps[d][1] for p in paths}) == 1:
                    pieces.append(f"/{t2}[{i2}]")
                else:
                    pieces.append(f"/{t2}")
            matches = set(map(id, evaluate_xpath(s, "".join(pieces))))
            assert any(id(t) not in matches for t in targets)


# --- S3 ---

def test_s3_common_token():
    s = snap('<body><div class="post hot">a</div><div class="post new">b</div>'
             '<div class="post">c</div><div class="other">d</div></body>')
    targets = s.by_tag("div")[:3]
    locator = infer_s3(s, targets)
    assert locator.strategy == Strategy.S3
    matches = evaluate_xpath(s, locator.expr)
    # brute-force token-scan oracle
    expected = [el for el in s.elements()
                if el.tag == "div" and "post" in el.class_tokens()]
    assert matches == expected


def test_s3_identical_single_class():
    s = snap('<body><i class="ico">1</i><i class="ico">2</i></body>')
    locator = infer_s3(s, s.by_tag("i"))
    assert len(evaluate_xpath(s, locator.expr)) == 2


def test_s3_disjoint_classes():
    s = snap('<body><div class="a">1</div><div class="b">2</div></body>')
    with pytest.raises(NoCommonClass):
        infer_s3(s, s.by_tag("div"))


def test_s3_tag_mismatch():
    s = snap('<body><div class="a">1</div><span class="a">2</span></body>')
    with pytest.raises(NoCommonClass):
        infer_s3(s, [s.by_tag("div")[0], s.by_tag("span")[0]])


# --- S4 ---

def _handle(snapshot) -> PageHandle:
    return PageHandle("s4-test", snapshot.source_url, snapshot)


def test_s4_equals_s2_without_divergence(xss_fixture):
    root, _ = xss_fixture
    s = snap((root / "home.html").read_bytes())
    subs = evaluate_xpath(s, "//h3/a")
    targets = [subs[4], subs[5]]
    live = _handle(s)
    s4 = infer_s4(live, s, targets)
    s2 = infer_s2(s, targets)
    assert s4.expr.expression == s2.expr.expression
    assert s4.strategy == Strategy.S4


def test_s4_reflects_live_path_after_script_wrapper():
    training = snap("<body><div><a id='k'>go</a></div></body>")
    live_dom = snap("<body><div><section><a id='k'>go</a></section></div></body>")
    target = training.by_tag("a")
    locator = infer_s4(_handle(live_dom), training, target)
    # hand-computed live path includes the injected wrapper
    assert locator.expr.expression == "/html[1]/body[1]/div[1]/section[1]/a[1]"
    assert locator.expr.expression != infer_s2(training, target).expr.expression


def test_s4_target_removed():
    training = snap("<body><a id='k'>go</a></body>")
    live_dom = snap("<body><p>gone</p></body>")
    with pytest.raises(LiveResolveFailed):
        infer_s4(_handle(live_dom), training, training.by_tag("a"))


# --- cascade ---

def test_cascade_single_unique_id_stops_at_s1():
    s = snap("<body><div>x</div><a id='solo'>y</a></body>")
    result = infer_cascade(s, s.by_tag("a"))
    assert isinstance(result, Locator) and result.strategy == Strategy.S1


def test_cascade_multi_node_falls_to_s2():
    s = snap("<body><ul><li><a>1</a></li><li><a>2</a></li></ul></body>")
    result = infer_cascade(s, s.by_tag("a"))
    assert isinstance(result, Locator) and result.strategy == Strategy.S2


def test_cascade_exhaustion_records_three_failures():
    # multi-node (S1 fails), ragged paths (S2), disjoint classes (S3), no live
    s = snap("<body><div><a class='x'>1</a></div>"
             "<p><span><a class='y'>2</a></span></p></body>")
    result = infer_cascade(s, s.by_tag("a"))
    assert isinstance(result, NeedsManual)
    assert len(result.failures) == 3
    assert [f[0] for f in result.failures] == [Strategy.S1, Strategy.S2,
                                               Strategy.S3]


def test_cascade_monotonic_start():
    s = snap("<body><a id='solo'>y</a><div>x</div></body>")
    result = infer_cascade(s, s.by_tag("a"), start=Strategy.S2)
    assert isinstance(result, Locator)
    assert result.strategy == Strategy.S2  # S1 never ran


# --- ignore lists and resolve ---

def test_apply_ignore_narrows_to_interesting_subsections(xss_fixture):
    root, _ = xss_fixture
    s = snap((root / "home.html").read_bytes())
    subs = evaluate_xpath(s, "//h3/a")
    targets = [subs[4], subs[5]]
    locator = infer_s2(s, targets)
    assert len(resolve(s, locator)) == 8
    unwanted = [n for n in evaluate_xpath(s, locator.expr)
                if id(n) not in {id(t) for t in targets}]
    assert len(unwanted) == 6
    narrowed = apply_ignore(locator, unwanted, s)
    assert len(narrowed.ignore) == 6
    assert resolve(s, narrowed) == targets


def test_apply_ignore_empty_is_identity():
    s = snap("<body><a id='solo'>y</a></body>")
    locator = infer_s1(s, s.by_tag("a"))
    assert apply_ignore(locator, [], s) is locator


def test_apply_ignore_rejects_non_match():
    s = snap("<body><a id='solo'>y</a><p>z</p></body>")
    locator = infer_s1(s, s.by_tag("a"))
    with pytest.raises(NotAMatch):
        apply_ignore(locator, s.by_tag("p"), s)


def test_resolve_ignore_soundness(xss_fixture):
    root, _ = xss_fixture
    s = snap((root / "home.html").read_bytes())
    subs = evaluate_xpath(s, "//h3/a")
    locator = apply_ignore(infer_s2(s, subs[:2]), subs[2:5], s)
    resolved_paths = {absolute_path(s, n).serialize() for n in resolve(s, locator)}
    assert not (resolved_paths & locator.ignore)


def test_resolve_dangling_ignore_is_inert():
    s = snap("<body><a id='solo'>y</a></body>")
    locator = infer_s1(s, s.by_tag("a")).with_ignore(
        ["/html[1]/body[1]/div[9]/a[1]"])
    assert resolve(s, locator) == s.by_tag("a")


# --- stability verification ---

def test_stability_static_fixture_all_stable(tmp_path):
    generate_forum(tmp_path, ForumSpec(sections=1, subsections_per_section=1,
                                       threads_per_listing=2,
                                       pages_per_thread=1, posts_per_page=1))
    adapter = FixtureAdapter(tmp_path)
    adapter.start()
    handle = adapter.open(adapter.url_for("home.html"))
    s = handle.snapshot
    locators = {
        "section_link": infer_s2(s, evaluate_xpath(s, "//h2/a")),
        "subsection_link": infer_s2(s, evaluate_xpath(s, "//h3/a")),
    }
    counts = {k: len(resolve(s, v)) for k, v in locators.items()}
    report = verify_stability(lambda: adapter.reload(handle).snapshot,
                              locators, counts)
    assert report.all_stable()


def test_stability_randomized_id_escalates_to_s2(tmp_path):
    generate_forum(tmp_path, ForumSpec(sections=1, subsections_per_section=1,
                                       threads_per_listing=1,
                                       pages_per_thread=1, posts_per_page=1,
                                       id_randomization=True))
    adapter = FixtureAdapter(tmp_path)
    adapter.start()
    handle = adapter.open(adapter.url_for("login.html"))
    s = handle.snapshot
    username = [n for n in s.by_tag("input")
                if n.attrs.get("name") == "username"]
    s1_locator = infer_s1(s, username)
    assert "_xfUid-1-" in s1_locator.expr.expression  # trained on the volatile id
    report = verify_stability(lambda: adapter.reload(handle).snapshot,
                              {"username_field": s1_locator},
                              {"username_field": 1})
    assert report.outcomes["username_field"].status == LabelStability.MISSING
    # escalation: the cascade starting at S2 yields a stable absolute path
    s2_locator = infer_cascade(s, username, start=Strategy.S2)
    assert isinstance(s2_locator, Locator)
    for _ in range(3):
        report = verify_stability(lambda: adapter.reload(handle).snapshot,
                                  {"username_field": s2_locator},
                                  {"username_field": 1})
        assert report.all_stable()


def test_stability_overmatch_surplus_count():
    s1 = snap("<body><a class='n'>1</a></body>")
    s2 = snap("<body><a class='n'>1</a><a class='n'>2</a><a class='n'>3</a></body>")
    locator = infer_s3(s1, s1.by_tag("a"))
    report = verify_stability(lambda: s2, {"x": locator}, {"x": 1})
    outcome = report.outcomes["x"]
    assert outcome.status == LabelStability.OVERMATCHING and outcome.surplus == 2


def test_stability_nav_button_count_variance(tmp_path):
    # next-page button position/count varies across listing pages; the
    # class-based locator stays stable on both variants.
    generate_forum(tmp_path, ForumSpec(sections=1, subsections_per_section=1,
                                       threads_per_listing=25,
                                       threads_per_listing_page=10,
                                       pages_per_thread=1, posts_per_page=1))
    adapter = FixtureAdapter(tmp_path)
    adapter.start()
    p1 = adapter.open(adapter.url_for("sub-1-1-p1.html")).snapshot
    p2 = adapter.open(adapter.url_for("sub-1-1-p2.html")).snapshot
    assert len(evaluate_xpath(p1, "//nav/a")) != len(evaluate_xpath(p2, "//nav/a"))
    next_locator = infer_s3(p1, evaluate_xpath(
        p1, "//a[contains(@class,'pageNav-next')]"))
    for page in (p1, p2):
        assert len(resolve(page, next_locator)) == 1


def test_stability_fetch_failure_is_distinguished():
    def failing_refetch():
        from forumcrawl.errors import NetworkError
        raise NetworkError("boom")
    s = snap("<body><a id='solo'>x</a></body>")
    locator = infer_s1(s, s.by_tag("a"))
    with pytest.raises(FetchFailed):
        verify_stability(failing_refetch, {"x": locator}, {"x": 1})

"""Training sessions: labeling, correction, stability gate, finalization."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from forumcrawl.config import CrawlConfiguration
from forumcrawl.dom import absolute_path
from forumcrawl.errors import (
    IncompleteSession,
    InvalidLabelForPage,
    MissingUrl,
    NoMatch,
    WrongPageState,
)
from forumcrawl.fixture_adapter import FixtureAdapter
from forumcrawl.fixture_gen import ForumSpec, generate_forum
from forumcrawl.locators import Locator, NeedsManual, Strategy
from forumcrawl.profile import (
    HOME,
    LOGIN,
    LOGIN_BUTTON,
    NEXT_PAGE,
    PASSWORD_FIELD,
    SECTION,
    SUBSECTION,
    SUBSECTION_LINK,
    THREAD,
    THREAD_LINK,
    TrainedProfile,
    USERNAME_FIELD,
)
from forumcrawl.training import (
    DONE,
    LABELING,
    PENDING,
    VERIFYING,
    start_training,
)
from forumcrawl.xpath import evaluate_xpath


def make_config(meta, forum_id="fixture") -> CrawlConfiguration:
    urls = {k: v for k, v in meta["urls"].items() if v}
    return CrawlConfiguration(forum_id=forum_id, urls=urls,
                              username="operator", secret="hunter2")


def paths_for(snapshot, expr) -> list[str]:
    return [absolute_path(snapshot, n).serialize()
            for n in evaluate_xpath(snapshot, expr)]


@pytest.fixture
def xss_session(tmp_path):
    spec = ForumSpec(forum_id="xss-style", sections=1,
                     subsections_per_section=8, threads_per_listing=20,
                     threads_per_listing_page=20, pages_per_thread=1,
                     posts_per_page=1, tagged_threads=True,
                     thread_link_class="listLink", tag_link_class="listLink",
                     id_randomization=True)
    meta = generate_forum(tmp_path, spec)
    adapter = FixtureAdapter(tmp_path, prompter=lambda kind, msg: "yes")
    adapter.start()
    session = start_training(make_config(meta), adapter,
                             prompter=lambda kind, msg: "yes")
    return session, meta


def test_queue_order_and_length(xss_session):
    session, meta = xss_session
    assert [pt for pt, _ in session.queue] == [
        "login", "home", "section", "subsection", "thread"]
    assert all(session.page_state(pt) == PENDING
               for pt, _ in session.queue)


def test_queue_without_subsection(tmp_path):
    spec = ForumSpec(sections=1, subsections_per_section=0,
                     threads_per_listing=1, pages_per_thread=1,
                     posts_per_page=1)
    meta = generate_forum(tmp_path / "f", spec)
    adapter = FixtureAdapter(tmp_path / "f")
    adapter.start()
    session = start_training(make_config(meta), adapter)
    assert len(session.queue) == 4
    assert "subsection" not in dict(session.queue)


def test_missing_url_names_page_type(tmp_path):
    config = CrawlConfiguration(forum_id="x",
                                urls={"login": "a", "home": "b"})
    with pytest.raises(MissingUrl) as err:
        start_training(config, adapter=None)
    assert "section" in str(err.value) and "thread" in str(err.value)


def test_login_labels_yield_three_s1_locators(xss_session):
    session, _ = xss_session
    handle = session.load_page(LOGIN)
    s = handle.snapshot
    results = session.submit_labels(LOGIN, {
        USERNAME_FIELD: paths_for(s, "//input[@name='username']"),
        PASSWORD_FIELD: paths_for(s, "//input[@name='password']"),
        LOGIN_BUTTON: paths_for(s, "//button"),
    })
    assert all(isinstance(r, Locator) and r.strategy == Strategy.S1
               for r in results.values())
    assert session.page_state(LOGIN) == VERIFYING


def test_two_subsection_nodes_yield_one_s2_locator(xss_session):
    session, _ = xss_session
    handle = session.load_page(HOME)
    s = handle.snapshot
    subs = paths_for(s, "//h3/a")
    results = session.submit_labels(HOME, {SUBSECTION_LINK: [subs[4], subs[5]]})
    locator = results[SUBSECTION_LINK]
    assert isinstance(locator, Locator) and locator.strategy == Strategy.S2
    assert session.trained_counts[HOME][SUBSECTION_LINK] == 8


def test_empty_assignment_is_absent(xss_session):
    session, _ = xss_session
    session.load_page(LOGIN)
    results = session.submit_labels(LOGIN, {USERNAME_FIELD: []})
    assert results == {}
    assert USERNAME_FIELD not in session.locators.get(LOGIN, {})


def test_invalid_label_for_page(xss_session):
    session, _ = xss_session
    session.load_page(LOGIN)
    with pytest.raises(InvalidLabelForPage):
        session.submit_labels(LOGIN, {THREAD_LINK: ["/html[1]"]})


def test_wrong_state_rejected(xss_session):
    session, _ = xss_session
    with pytest.raises(WrongPageState):
        session.submit_labels(LOGIN, {})


def test_ignore_correction_narrows_subsections(xss_session):
    session, _ = xss_session
    handle = session.load_page(HOME)
    s = handle.snapshot
    subs = paths_for(s, "//h3/a")
    session.submit_labels(HOME, {SUBSECTION_LINK: [subs[4], subs[5]]})
    unwanted = [p for i, p in enumerate(subs) if i not in (4, 5)]
    results = session.correct_labels(HOME, ignore={SUBSECTION_LINK: unwanted})
    locator = results[SUBSECTION_LINK]
    assert len(locator.ignore) == 6
    assert session.trained_counts[HOME][SUBSECTION_LINK] == 2


def test_overmatch_escalation_ends_in_manual_preview_tooltip(xss_session):
    # Tagged threads: S2 over-matches tag links; the user keeps rejecting
    # until the cascade is exhausted, then supplies the stable attribute.
    session, _ = xss_session
    handle = session.load_page(SUBSECTION)
    s = handle.snapshot
    threads = evaluate_xpath(s, '//*[@data-xf-init="preview-tooltip"]')
    assert len(threads) == 20
    tagged = [t for t in threads
              if absolute_path(s, t).serialize().endswith("a[2]")]
    untagged = [t for t in threads
                if absolute_path(s, t).serialize().endswith("a[1]")]
    picks = [absolute_path(s, untagged[0]).serialize(),
             absolute_path(s, tagged[0]).serialize()]
    results = session.submit_labels(SUBSECTION, {THREAD_LINK: picks})
    locator = results[THREAD_LINK]
    assert isinstance(locator, Locator) and locator.strategy == Strategy.S2
    assert session.trained_counts[SUBSECTION][THREAD_LINK] > 20  # over-match

    outcome = session.correct_labels(SUBSECTION, retrain=(THREAD_LINK,))
    trail = [outcome[THREAD_LINK]]
    while isinstance(trail[-1], Locator):
        trail.append(
            session.correct_labels(SUBSECTION,
                                   retrain=(THREAD_LINK,))[THREAD_LINK])
    assert isinstance(trail[-1], NeedsManual)

    manual = session.submit_manual_xpath(
        SUBSECTION, THREAD_LINK, '//*[@data-xf-init="preview-tooltip"]')
    assert manual.strategy == Strategy.MANUAL
    assert session.trained_counts[SUBSECTION][THREAD_LINK] == 20


def test_manual_expressions_for_awkward_thread_fields(tmp_path):
    # Hand-written stable identifiers for post date and post content on a
    # layout whose generated locators kept misfiring.
    root = tmp_path / "nb"
    root.mkdir()
    (root / "thread.html").write_text(
        "<html><body>"
        '<article><time data-original-title="Original post time">'
        "2022-06-18</time>"
        '<div class="post-message flex-fill">hello there</div></article>'
        "</body></html>")
    for name in ("login.html", "home.html", "section.html"):
        (root / name).write_text("<html><body><p>stub</p></body></html>")
    (root / "manifest.json").write_text(json.dumps({"host": "nb.forum"}))
    adapter = FixtureAdapter(root)
    adapter.start()
    config = CrawlConfiguration(
        forum_id="nb",
        urls={"login": "https://nb.forum/login.html",
              "home": "https://nb.forum/home.html",
              "section": "https://nb.forum/section.html",
              "thread": "https://nb.forum/thread.html"})
    session = start_training(config, adapter)
    session.load_page(THREAD)
    session.states[THREAD] = VERIFYING
    session.manual_pending.setdefault(THREAD, {}).update(
        {"post_date": NeedsManual(()), "post_content": NeedsManual(())})
    date_locator = session.submit_manual_xpath(
        THREAD, "post_date", "//*[@data-original-title='Original post time']")
    content_locator = session.submit_manual_xpath(
        THREAD, "post_content", "//*[@class='post-message flex-fill']")
    assert date_locator.strategy == Strategy.MANUAL
    assert session.trained_counts[THREAD]["post_content"] == 1
    assert content_locator.strategy == Strategy.MANUAL


def test_manual_xpath_no_match_rejected(xss_session):
    session, _ = xss_session
    handle = session.load_page(SUBSECTION)
    s = handle.snapshot
    links = paths_for(s, "//h3/a") or paths_for(s, "//a")
    session.submit_labels(SUBSECTION, {THREAD_LINK: [links[0], links[1]]})
    # force a manual slot
    while THREAD_LINK not in session.manual_pending.get(SUBSECTION, {}):
        out = session.correct_labels(SUBSECTION, retrain=(THREAD_LINK,))
        if isinstance(out[THREAD_LINK], NeedsManual):
            break
    with pytest.raises(NoMatch):
        session.submit_manual_xpath(SUBSECTION, THREAD_LINK,
                                    "//a[@id='nothing-here']")


def test_reset_clears_assignments(xss_session):
    session, _ = xss_session
    handle = session.load_page(LOGIN)
    s = handle.snapshot
    session.submit_labels(LOGIN, {
        USERNAME_FIELD: paths_for(s, "//input[@name='username']")})
    session.correct_labels(LOGIN, reset=True)
    assert session.page_state(LOGIN) == LABELING
    assert LOGIN not in session.assignments or not session.assignments[LOGIN]


def test_stability_gate_randomized_ids_escalate_to_s2(xss_session):
    session, _ = xss_session
    handle = session.load_page(LOGIN)
    s = handle.snapshot
    session.submit_labels(LOGIN, {
        USERNAME_FIELD: paths_for(s, "//input[@name='username']"),
        PASSWORD_FIELD: paths_for(s, "//input[@name='password']"),
    })
    trained = session.locators[LOGIN][USERNAME_FIELD]
    assert trained.strategy == Strategy.S1
    assert "_xfUid-1-" in trained.expr.expression  # the volatile id won
    session.confirm_page(LOGIN)
    result = session.run_stability_gate(LOGIN)
    assert result.passed
    final = session.locators[LOGIN][USERNAME_FIELD]
    assert final.strategy == Strategy.S2
    assert "_xfUid" not in final.expr.expression
    assert session.page_state(LOGIN) == DONE  # no next_page on login pages


def test_stability_gate_static_passes_first_round(tmp_path):
    spec = ForumSpec(sections=1, subsections_per_section=0,
                     threads_per_listing=1, pages_per_thread=1,
                     posts_per_page=1)
    meta = generate_forum(tmp_path, spec)
    adapter = FixtureAdapter(tmp_path)
    adapter.start()
    session = start_training(make_config(meta), adapter)
    handle = session.load_page(LOGIN)
    s = handle.snapshot
    session.submit_labels(LOGIN, {
        USERNAME_FIELD: paths_for(s, "//input[@name='username']")})
    session.confirm_page(LOGIN)
    result = session.run_stability_gate(LOGIN)
    assert result.passed and result.report.reload_count == 1
    assert not result.escalated


def _unstable_fixture(tmp_path) -> Path:
    """Page whose second serve replaces the target entirely."""
    root = tmp_path / "unstable"
    root.mkdir()
    (root / "page.html").write_text(
        "<html><body><main><p><span id='__UID__'>x</span></p></main>"
        "</body></html>")
    (root / "page.visited.html").write_text(
        "<html><body><main><div><b id='other'>y</b></div></main>"
        "</body></html>")
    for name in ("login.html", "home.html", "section.html", "thread.html"):
        (root / name).write_text("<html><body><p>stub</p></body></html>")
    (root / "manifest.json").write_text(json.dumps({
        "host": "unstable.forum",
        "id_randomization": {"pages": ["page.html"]},
        "mutate_after_visit": {"page.html": "page.visited.html"},
    }))
    return root


def test_stability_gate_exhaustion_needs_manual(tmp_path):
    root = _unstable_fixture(tmp_path)
    adapter = FixtureAdapter(root)
    adapter.start()
    config = CrawlConfiguration(
        forum_id="unstable",
        urls={"login": "https://unstable.forum/login.html",
              "home": "https://unstable.forum/page.html",
              "section": "https://unstable.forum/section.html",
              "thread": "https://unstable.forum/thread.html"})
    session = start_training(config, adapter,
                             prompter=lambda kind, msg: "yes")
    handle = session.load_page(HOME)
    s = handle.snapshot
    target = paths_for(s, "//span")
    results = session.submit_labels(HOME, {"section_link": target})
    assert results["section_link"].strategy == Strategy.S1
    session.confirm_page(HOME)
    result = session.run_stability_gate(HOME)
    assert not result.passed
    assert "section_link" in result.needs_manual
    assert session.page_state(HOME) == VERIFYING


def test_next_page_verification_indexed_form_fails(tmp_path):
    # Trained on page 2 where next is the second nav button; page 3 has only
    # a prev button, so the fully-indexed form dangles while the S2
    # index-dropped form still resolves there.
    spec = ForumSpec(sections=1, subsections_per_section=1,
                     threads_per_listing=25, threads_per_listing_page=10,
                     pages_per_thread=1, posts_per_page=1)
    meta = generate_forum(tmp_path, spec)
    adapter = FixtureAdapter(tmp_path)
    adapter.start()
    config = make_config(meta)
    config.urls["subsection"] = "https://fixture.forum/sub-1-1-p2.html"
    session = start_training(config, adapter)
    handle = session.load_page(SUBSECTION)
    s = handle.snapshot
    next_paths = paths_for(s, "//a[contains(@class,'pageNav-next')]")
    first = session.submit_labels(SUBSECTION, {NEXT_PAGE: next_paths})
    assert first[NEXT_PAGE].strategy == Strategy.S1
    # operator rejects the S1 form; escalation yields the indexed S2 path
    session.correct_labels(SUBSECTION, retrain=(NEXT_PAGE,))
    indexed = session.locators[SUBSECTION][NEXT_PAGE]
    assert indexed.strategy == Strategy.S2
    assert indexed.expr.expression.endswith("a[2]")  # prev is a[1] on p2
    session.confirm_page(SUBSECTION)
    assert session.run_stability_gate(SUBSECTION).passed
    assert not session.verify_next_navigation(SUBSECTION)
    assert session.page_state(SUBSECTION) == VERIFYING

    # replace with the index-dropped form, which cannot dangle
    dropped = indexed.expr.expression[:-len("[2]")]
    session.manual_pending.setdefault(SUBSECTION, {})[NEXT_PAGE] = \
        NeedsManual(())
    session.submit_manual_xpath(SUBSECTION, NEXT_PAGE, dropped)
    session.confirm_page(SUBSECTION)
    assert session.run_stability_gate(SUBSECTION).passed
    assert session.verify_next_navigation(SUBSECTION)
    assert session.page_state(SUBSECTION) == DONE


def test_next_page_untrained_skips_gate(tmp_path):
    spec = ForumSpec(sections=1, subsections_per_section=0,
                     threads_per_listing=1, pages_per_thread=1,
                     posts_per_page=1)
    meta = generate_forum(tmp_path, spec)
    adapter = FixtureAdapter(tmp_path)
    adapter.start()
    session = start_training(make_config(meta), adapter)
    handle = session.load_page(THREAD)
    s = handle.snapshot
    session.submit_labels(THREAD, {
        "post_content": paths_for(s, "//div[contains(@class,'message-body')]")})
    session.confirm_page(THREAD)
    assert session.run_stability_gate(THREAD).passed
    assert session.page_state(THREAD) == DONE
    assert any("next-page check skipped" in note for note in session.notes)


def test_finalize_requires_all_done(xss_session):
    session, _ = xss_session
    with pytest.raises(IncompleteSession) as err:
        session.finalize_profile()
    assert "login" in err.value.pending


def _train_minimal(tmp_path, spec=None) -> tuple:
    # 3 listing pages and 3-page threads so the landing page of the
    # next-page check still carries a next button.
    spec = spec or ForumSpec(sections=1, subsections_per_section=0,
                             threads_per_listing=3, threads_per_listing_page=1,
                             pages_per_thread=3, posts_per_page=1)
    meta = generate_forum(tmp_path, spec)
    adapter = FixtureAdapter(tmp_path)
    adapter.start()
    session = start_training(make_config(meta), adapter)
    label_exprs = {
        LOGIN: {USERNAME_FIELD: "//input[@name='username']",
                PASSWORD_FIELD: "//input[@name='password']",
                LOGIN_BUTTON: "//button"},
        HOME: {"section_link": "//h2/a"},
        SECTION: {THREAD_LINK: "//a[contains(@class,'structItem-title-link')]",
                  NEXT_PAGE: "//a[contains(@class,'pageNav-next')]"},
        THREAD: {"post_content": "//div[contains(@class,'message-body')]",
                 NEXT_PAGE: "//a[contains(@class,'pageNav-next')]"},
    }
    for page_type, _ in session.queue:
        handle = session.load_page(page_type)
        s = handle.snapshot
        session.submit_labels(page_type, {
            label: paths_for(s, expr)
            for label, expr in label_exprs[page_type].items()})
        session.confirm_page(page_type)
        assert session.run_stability_gate(page_type).passed
        if session.page_state(page_type) != DONE:
            session.verify_next_navigation(page_type)
        assert session.page_state(page_type) == DONE
    return session, meta, adapter


def test_full_session_profile_roundtrip(tmp_path):
    session, _, _ = _train_minimal(tmp_path)
    profile = session.finalize_profile()
    assert set(profile.pages) == {"login", "home", "section", "thread"}
    # deep-equality oracle through serialization
    rebuilt = TrainedProfile.from_dict(profile.to_dict())
    assert rebuilt.to_dict() == profile.to_dict()
    for page_type, training in profile.pages.items():
        for label, locator in training.locators.items():
            assert locator.expr.expression  # resolvable, serialized form


def test_seeded_session_prelabels_and_is_idempotent(tmp_path):
    session, meta, adapter = _train_minimal(tmp_path)
    profile = session.finalize_profile()
    seeded = start_training(make_config(meta), adapter, seed=profile)
    handle = seeded.load_page(LOGIN)
    assert seeded.page_state(LOGIN) == VERIFYING  # pre-labeled, review only
    assert set(seeded.locators[LOGIN]) == set(profile.pages[LOGIN].locators)
    assert seeded.assignments[LOGIN][USERNAME_FIELD]  # reconstructed paths
    for page_type, _ in seeded.queue:
        if seeded.page_state(page_type) == PENDING:
            seeded.load_page(page_type)
        seeded.confirm_page(page_type)
        assert seeded.run_stability_gate(page_type).passed
        if seeded.page_state(page_type) != DONE:
            seeded.verify_next_navigation(page_type)
    reprofile = seeded.finalize_profile()
    a, b = profile.to_dict(), reprofile.to_dict()
    a.pop("created_at"), b.pop("created_at")
    assert a == b  # equal modulo timestamps


def test_label_independence(xss_session):
    session, _ = xss_session
    handle = session.load_page(LOGIN)
    s = handle.snapshot
    session.submit_labels(LOGIN, {
        USERNAME_FIELD: paths_for(s, "//input[@name='username']"),
        PASSWORD_FIELD: paths_for(s, "//input[@name='password']"),
    })
    before = session.locators[LOGIN][PASSWORD_FIELD]
    session.correct_labels(LOGIN, retrain=(USERNAME_FIELD,))
    assert session.locators[LOGIN][PASSWORD_FIELD] is before

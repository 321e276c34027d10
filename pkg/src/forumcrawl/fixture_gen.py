"""Synthetic forum generator: on-disk fixtures with declared behaviors.

Generates a complete forum (login, home, sections, subsections, paginated
threads with posts) plus the manifest.json the fixture adapter interprets
and a genmeta.json truth record (every URL, title, per-page word count and
censoring placement) that tests use as their brute-force oracle.

Behavior flags map to the adversarial cases the crawler must survive:
randomized login-field IDs, a CAPTCHA widget at login, a ticket-gated home
page, threads that land on their last page, post content hidden until a
script interacts with the page, listing DOM that mutates after the first
visit, and tag links sharing the thread links' shape.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

from .dom import parse_snapshot, text_content
from .locators import Locator, Strategy
from .profile import (
    AUTHOR_POPULARITY,
    AUTHOR_POST_COUNT,
    AUTHOR_REGISTRATION_DATE,
    FIRST_PAGE_BUTTON,
    HOME,
    HOME_LINK,
    LOGIN,
    LOGIN_BUTTON,
    NEXT_PAGE,
    PASSWORD_FIELD,
    POST_AUTHOR,
    POST_CONTENT,
    POST_DATE,
    PREV_PAGE,
    SECTION,
    SECTION_LINK,
    SUBSECTION,
    SUBSECTION_LINK,
    THREAD,
    THREAD_LINK,
    THREAD_SECTION,
    THREAD_TITLE,
    TrainedProfile,
    PageTraining,
    USERNAME_FIELD,
)
from .xpath import XPathExpr, token_predicate

POST_DATE_FORMAT = "%Y-%m-%d %H:%M"
REGISTRATION_DATE_FORMAT = "%b %d, %Y"

REVEAL_SCRIPT = """\
const like = document.evaluate("//a[@class='like-button']", document, null,
    XPathResult.FIRST_ORDERED_NODE_TYPE, null).singleNodeValue;
if (like) like.click();
await new Promise(r => setTimeout(r, 800));
const quote = document.evaluate("//a[@class='quote-button']", document, null,
    XPathResult.FIRST_ORDERED_NODE_TYPE, null).singleNodeValue;
if (quote) quote.click();
await new Promise(r => setTimeout(r, 500));
const send = document.evaluate("//button[@class='reply-send']", document, null,
    XPathResult.FIRST_ORDERED_NODE_TYPE, null).singleNodeValue;
if (send) send.click();
"""

_WORD_BANK = (
    "market listing vendor escrow sample release update account status board "
    "thread reply member credit topic trade offer bundle archive mirror node "
    "client server panel token session invite review rating payout method "
    "region quality stock batch order refund support contact channel detail"
).split()

_TITLE_NOUNS = ("dumps", "configs", "accounts", "proxies", "loaders",
                "panels", "logs", "combos", "guides", "templates")
_TITLE_ADJS = ("fresh", "private", "verified", "bulk", "cheap",
               "premium", "exclusive", "updated", "rare", "working")


@dataclass
class ForumSpec:
    forum_id: str = "fixture"
    host: str = "fixture.forum"
    sections: int = 3
    subsections_per_section: int = 2  # 0 = threads live on section pages
    threads_per_listing: int = 20
    threads_per_listing_page: int = 10
    pages_per_thread: int = 3
    posts_per_page: int = 5
    words_per_post: int = 30
    seed: int = 7
    username: str = "operator"
    secret: str = "hunter2"
    id_randomization: bool = False
    captcha_login: bool = False
    ticket_gate: bool = False
    last_page_landing: bool = False
    hidden_content: bool = False
    mutate_sections: bool = False
    tagged_threads: bool = False
    preview_attr: bool = True  # data-xf-init="preview-tooltip" on thread links
    thread_link_class: str = "structItem-title-link"
    tag_link_class: str = "labelLink"
    taboo_words: tuple[str, ...] = ()
    n_taboo_titles: int = 0
    n_taboo_posts: int = 0
    include_images: bool = True
    fail_first: dict[str, int] = field(default_factory=dict)


def _page_shell(title: str, body: str) -> str:
    return (
        "<!DOCTYPE html>\n"
        f"<html><head><meta charset=\"utf-8\"><title>{title}</title></head>\n"
        f"<body>\n{body}\n</body></html>\n"
    )


def _nav(home: str = "home.html") -> str:
    return (f'<div class="p-nav"><a class="home-link" href="{home}">Home</a>'
            '</div>\n')


def _breadcrumbs(parts: list[tuple[str, str]]) -> str:
    anchors = "".join(
        f'<a class="crumb{" thread-section-ref" if i == len(parts) - 1 else ""}"'
        f' href="{href}">{label}</a>'
        for i, (label, href) in enumerate(parts))
    return f'<div class="breadcrumbs">{anchors}</div>\n'


def _page_nav(prev_href: str | None, next_href: str | None,
              first_href: str | None) -> str:
    items = []
    if first_href:
        items.append(f'<a class="pageNav-first" href="{first_href}">First</a>')
    if prev_href:
        items.append(f'<a class="pageNav-prev" href="{prev_href}">Prev</a>')
    if next_href:
        items.append(f'<a class="pageNav-next" href="{next_href}">Next</a>')
    return f'<nav class="pageNav">{"".join(items)}</nav>\n' if items else ""


@dataclass
class _ThreadPlan:
    section: int
    subsection: int
    ordinal: int
    title: str
    slug: str
    pages: int
    taboo_title: bool = False
    taboo_post: bool = False


class _Generator:
    def __init__(self, root: Path, spec: ForumSpec) -> None:
        self.root = Path(root)
        self.spec = spec
        self.rng = random.Random(spec.seed)
        self.files: dict[str, str] = {}
        self.threads: list[_ThreadPlan] = []

    # --- planning ---

    def plan(self) -> None:
        spec = self.spec
        ordinal = 0
        taboo_titles_left = spec.n_taboo_titles
        taboo_posts_left = spec.n_taboo_posts
        for s in range(1, spec.sections + 1):
            subs = (list(range(1, spec.subsections_per_section + 1))
                    if spec.subsections_per_section else [0])
            for j in subs:
                for t in range(1, spec.threads_per_listing + 1):
                    ordinal += 1
                    adj = self.rng.choice(_TITLE_ADJS)
                    noun = self.rng.choice(_TITLE_NOUNS)
                    title = f"{adj} {noun} #{ordinal}"
                    plan = _ThreadPlan(
                        section=s, subsection=j, ordinal=ordinal,
                        title=title, slug=f"thread-{s}-{j}-{t}",
                        pages=spec.pages_per_thread)
                    if taboo_titles_left > 0 and spec.taboo_words:
                        word = spec.taboo_words[
                            (spec.n_taboo_titles - taboo_titles_left)
                            % len(spec.taboo_words)]
                        plan.title = f"{adj} {word} {noun} #{ordinal}"
                        plan.taboo_title = True
                        taboo_titles_left -= 1
                    elif taboo_posts_left > 0 and spec.taboo_words:
                        plan.taboo_post = True
                        taboo_posts_left -= 1
                    self.threads.append(plan)

    # --- page builders ---

    def _words(self, count: int) -> str:
        return " ".join(self.rng.choice(_WORD_BANK) for _ in range(count))

    def login_page(self) -> str:
        spec = self.spec
        captcha = ('<div class="g-recaptcha" data-sitekey="fixture-key"></div>\n'
                   if spec.captcha_login else "")
        uid = ' id="__UID__"' if spec.id_randomization else ""
        body = (
            _nav()
            + captcha
            + '<div class="login-wrap"><form class="login-form" method="post">\n'
            + f'<input type="text" name="username" autocomplete="username"{uid}>\n'
            + f'<input type="password" name="password" '
              f'autocomplete="current-password"{uid}>\n'
            + '<button type="submit" name="login" class="login-button">'
              'Log in</button>\n'
            + "</form></div>"
        )
        return _page_shell(f"{spec.forum_id} - Log in", body)

    def home_page(self) -> str:
        spec = self.spec
        blocks = []
        for s in range(1, spec.sections + 1):
            subs = []
            for j in range(1, spec.subsections_per_section + 1):
                subs.append(
                    '<div class="sub-block">'
                    f'<h3><a class="subsection-link" href="sub-{s}-{j}-p1.html">'
                    f'Sub {s}.{j}</a></h3>'
                    f'<div class="sub-meta">{spec.threads_per_listing} threads</div>'
                    "</div>"
                )
            blocks.append(
                '<div class="section-block">'
                f'<h2><a class="section-link" href="section-{s}-p1.html">'
                f'Section {s}</a></h2>'
                + "".join(subs)
                + "</div>"
            )
        img = ('<img src="media/banner-home.gif" alt="">\n'
               if spec.include_images else "")
        body = _nav() + f'<div class="p-body">{"".join(blocks)}</div>\n' + img
        return _page_shell(spec.forum_id, body)

    def _thread_row(self, plan: _ThreadPlan) -> str:
        spec = self.spec
        entry = plan.pages if spec.last_page_landing else 1
        tag = ""
        if spec.tagged_threads and plan.ordinal % 3 == 0:
            tag_cls = f' class="{spec.tag_link_class}"' if spec.tag_link_class else ""
            tag = f'<a{tag_cls} href="tag-{plan.ordinal % 5}.html">TAG</a>'
        link_cls = (f' class="{spec.thread_link_class}"'
                    if spec.thread_link_class else "")
        preview = ' data-xf-init="preview-tooltip"' if spec.preview_attr else ""
        return (
            '<div class="structItem">'
            '<div class="structItem-cell icon"><span class="avatar">A</span></div>'
            '<div class="structItem-cell main">'
            f'<div class="structItem-title">{tag}'
            f'<a{link_cls}{preview} href="{plan.slug}-p{entry}.html">'
            f'{plan.title}</a></div>'
            f'<div class="structItem-minor">replies: {plan.pages * spec.posts_per_page - 1}</div>'
            "</div></div>"
        )

    def listing_pages(self, s: int, j: int,
                      plans: list[_ThreadPlan]) -> dict[str, str]:
        """Paginated thread listing for one (sub)section."""
        spec = self.spec
        per = spec.threads_per_listing_page
        chunks = [plans[i:i + per] for i in range(0, len(plans), per)] or [[]]
        prefix = f"sub-{s}-{j}" if j else f"section-{s}"
        crumbs = [("Home", "home.html"), (f"Section {s}", f"section-{s}-p1.html")]
        if j:
            crumbs.append((f"Sub {s}.{j}", f"{prefix}-p1.html"))
        pages: dict[str, str] = {}
        for k, chunk in enumerate(chunks, start=1):
            rows = "".join(self._thread_row(p) for p in chunk)
            nav = _page_nav(
                prev_href=f"{prefix}-p{k - 1}.html" if k > 1 else None,
                next_href=f"{prefix}-p{k + 1}.html" if k < len(chunks) else None,
                first_href=None)
            title = (f"Sub {s}.{j} page {k}" if j else f"Section {s} page {k}")
            body = (_nav() + _breadcrumbs(crumbs)
                    + f'<div class="p-body">'
                      f'<div class="structItemContainer">{rows}</div>{nav}</div>')
            pages[f"{prefix}-p{k}.html"] = _page_shell(title, body)
        return pages

    def section_page(self, s: int) -> str:
        spec = self.spec
        subs = "".join(
            '<div class="sub-block">'
            f'<h3><a class="subsection-link" href="sub-{s}-{j}-p1.html">'
            f'Sub {s}.{j}</a></h3></div>'
            for j in range(1, spec.subsections_per_section + 1))
        body = (_nav()
                + _breadcrumbs([("Home", "home.html"),
                                (f"Section {s}", f"section-{s}-p1.html")])
                + f'<div class="p-body"><div class="sub-list">{subs}</div></div>')
        return _page_shell(f"Section {s}", body)

    def _post(self, plan: _ThreadPlan, page: int, idx: int,
              hidden: bool, text: str) -> str:
        """One post article rendered from pre-drawn body text."""
        n = (plan.ordinal * 37 + page * 7 + idx) % 900 + 13
        author = f"user_{(plan.ordinal + idx * 11) % 50}"
        joined = (datetime(2016, 1, 1)
                  + timedelta(days=(plan.ordinal * 13 + idx * 29) % 2400))
        posted = (datetime(2022, 6, 1, 9, 0)
                  + timedelta(hours=plan.ordinal, minutes=page * 17 + idx * 3))
        aside = (
            '<aside class="message-user">'
            f'<a class="username" href="member-{author}.html">{author}</a>'
            '<div class="user-stat"><span class="stat-label">Posts:</span> '
            f'<span class="post-count">{n}</span></div>'
            '<div class="user-stat"><span class="stat-label">Reputation:</span> '
            f'<span class="popularity">{n % 97}</span></div>'
            '<div class="user-stat"><span class="stat-label">Joined:</span> '
            f'<span class="registered">{joined.strftime(REGISTRATION_DATE_FORMAT)}'
            "</span></div></aside>"
        )
        if hidden:
            main = ('<div class="message-main">'
                    '<div class="locked-notice">Like and reply to view this '
                    'content</div>'
                    '<a class="like-button" href="#">Like</a>'
                    '<a class="quote-button" href="#">Quote</a>'
                    '<button class="reply-send">Reply</button>'
                    "</div>")
        else:
            main = ('<div class="message-main">'
                    f'<time class="post-date">'
                    f'{posted.strftime(POST_DATE_FORMAT)}</time>'
                    f'<div class="message-body">{text}</div>'
                    "</div>")
        return f'<article class="message">{aside}{main}</article>'

    def _post_text(self, plan: _ThreadPlan, page: int, idx: int) -> str:
        text = self._words(self.spec.words_per_post)
        if (plan.taboo_post and page == (plan.pages + 1) // 2 and idx == 2
                and self.spec.taboo_words):
            word = self.spec.taboo_words[plan.ordinal % len(self.spec.taboo_words)]
            tokens = text.split()
            tokens[min(3, len(tokens) - 1)] = word
            text = " ".join(tokens)
        return text

    def thread_pages(self, plan: _ThreadPlan) -> dict[str, str]:
        spec = self.spec
        sub_href = (f"sub-{plan.section}-{plan.subsection}-p1.html"
                    if plan.subsection else f"section-{plan.section}-p1.html")
        crumbs = [("Home", "home.html"),
                  (f"Section {plan.section}", f"section-{plan.section}-p1.html")]
        if plan.subsection:
            crumbs.append((f"Sub {plan.section}.{plan.subsection}", sub_href))
        pages: dict[str, str] = {}
        for page in range(1, plan.pages + 1):
            texts = {i: self._post_text(plan, page, i)
                     for i in range(1, spec.posts_per_page + 1)}
            variants = [True, False] if spec.hidden_content else [False]
            for hidden in variants:
                articles = "".join(
                    self._post(plan, page, i, hidden, texts[i])
                    for i in range(1, spec.posts_per_page + 1))
                nav = _page_nav(
                    prev_href=f"{plan.slug}-p{page - 1}.html" if page > 1 else None,
                    next_href=(f"{plan.slug}-p{page + 1}.html"
                               if page < plan.pages else None),
                    first_href=(f"{plan.slug}-p1.html"
                                if spec.last_page_landing else None))
                img = (f'<img src="media/banner-{plan.section}.gif" alt="">\n'
                       if spec.include_images else "")
                body = (_nav() + _breadcrumbs(crumbs)
                        + '<div class="p-body">'
                        + f'<h1 class="p-title">{plan.title}</h1>'
                        + f'<div class="messages">{articles}</div>'
                        + img + nav + "</div>")
                name = f"{plan.slug}-p{page}.html"
                if spec.hidden_content and not hidden:
                    name = f"{plan.slug}-p{page}.revealed.html"
                pages[name] = _page_shell(f"{plan.title} page {page}", body)
        return pages

    # --- assembly ---

    def generate(self) -> dict:
        spec = self.spec
        self.plan()
        self.files["login.html"] = self.login_page()
        self.files["login-failed.html"] = self.login_page()
        self.files["home.html"] = self.home_page()
        self.files["interstitial.html"] = _page_shell(
            "Just a moment...",
            '<div class="cf-challenge">Checking your browser before '
            "accessing the site.</div>")
        self.files["probe.html"] = _page_shell(
            "probe", '<div id="automation-flag">true</div>')

        for s in range(1, spec.sections + 1):
            if spec.subsections_per_section:
                self.files[f"section-{s}-p1.html"] = self.section_page(s)
                for j in range(1, spec.subsections_per_section + 1):
                    plans = [p for p in self.threads
                             if p.section == s and p.subsection == j]
                    self.files.update(self.listing_pages(s, j, plans))
            else:
                plans = [p for p in self.threads if p.section == s]
                self.files.update(self.listing_pages(s, 0, plans))
        for plan in self.threads:
            self.files.update(self.thread_pages(plan))

        if spec.mutate_sections:
            for name in [n for n in self.files if n.startswith(("sub-", "section-"))
                         and "-p" in n]:
                mutated = self.files[name].replace(
                    '<div class="structItem-title">', '<span class="structItem-title">'
                ).replace("</a></div><div class=\"structItem-minor\">",
                          "</a></span><div class=\"structItem-minor\">")
                self.files[name.replace(".html", ".visited.html")] = mutated

        self.root.mkdir(parents=True, exist_ok=True)
        for name, content in self.files.items():
            (self.root / name).write_text(content, encoding="utf-8")
        manifest = self.build_manifest()
        (self.root / "manifest.json").write_text(
            json.dumps(manifest, indent=2), encoding="utf-8")
        meta = self.build_genmeta()
        (self.root / "genmeta.json").write_text(
            json.dumps(meta, indent=2), encoding="utf-8")
        return meta

    def build_manifest(self) -> dict:
        spec = self.spec
        manifest: dict = {
            "host": spec.host,
            "auth": {
                "username": spec.username,
                "secret": spec.secret,
                "fields": ["username", "password"],
                "success": "home.html",
                "failure": "login-failed.html",
            },
        }
        if spec.id_randomization:
            manifest["id_randomization"] = {
                "pages": ["login.html", "login-failed.html"]}
        if spec.ticket_gate:
            manifest["ticket_gate"] = {
                "pages": ["home.html"],
                "required_keys": ["cf-commitment-2.58", "cf-tokens"],
                "interstitial": "interstitial.html",
            }
        if spec.fail_first:
            manifest["fail_first"] = dict(spec.fail_first)
        if spec.hidden_content:
            effects: dict[str, list] = {}
            for plan in self.threads:
                for page in range(1, plan.pages + 1):
                    name = f"{plan.slug}-p{page}.html"
                    effects[name] = [{
                        "xpaths": ["//a[@class='like-button']",
                                   "//button[@class='reply-send']"],
                        "variant": f"{plan.slug}-p{page}.revealed.html",
                    }]
            manifest["script_effects"] = effects
        if spec.mutate_sections:
            manifest["mutate_after_visit"] = {
                name: name.replace(".html", ".visited.html")
                for name in self.files
                if not name.endswith(".visited.html")
                and name.startswith(("sub-", "section-")) and "-p" in name
                and name.replace(".html", ".visited.html") in self.files
            }
        return manifest

    def build_genmeta(self) -> dict:
        spec = self.spec
        base = f"https://{spec.host}/"
        page_words = {}
        for name, content in self.files.items():
            snap = parse_snapshot(content.encode(), base + name)
            _, words = text_content(snap.root)
            page_words[name] = words
        threads_meta = []
        for plan in self.threads:
            entry = plan.pages if spec.last_page_landing else 1
            threads_meta.append({
                "title": plan.title,
                "url": base + f"{plan.slug}-p1.html",
                "entry_url": base + f"{plan.slug}-p{entry}.html",
                "section": f"Section {plan.section}",
                "subsection": (f"Sub {plan.section}.{plan.subsection}"
                               if plan.subsection else None),
                "pages": plan.pages,
                "posts_per_page": spec.posts_per_page,
                "taboo_title": plan.taboo_title,
                "taboo_post": plan.taboo_post,
            })
        clean = [t for t in threads_meta
                 if not t["taboo_title"] and not t["taboo_post"]]
        first_sub = "sub-1-1-p1.html" if spec.subsections_per_section else None
        return {
            "forum_id": spec.forum_id,
            "host": spec.host,
            "urls": {
                "login": base + "login.html",
                "home": base + "home.html",
                "section": base + "section-1-p1.html",
                "subsection": base + first_sub if first_sub else None,
                "thread": threads_meta[0]["entry_url"] if threads_meta else None,
            },
            "credentials": {"username": spec.username, "secret": spec.secret},
            "sections": spec.sections,
            "subsections_per_section": spec.subsections_per_section,
            "threads_total": len(self.threads),
            "posts_total": sum(t["pages"] * t["posts_per_page"]
                               for t in threads_meta),
            "expected_persisted_posts": sum(
                t["pages"] * t["posts_per_page"] for t in clean),
            "threads": threads_meta,
            "page_words": page_words,
            "date_formats": {
                "post_date": POST_DATE_FORMAT,
                "registration": REGISTRATION_DATE_FORMAT,
            },
        }


def generate_forum(root: str | Path, spec: ForumSpec | None = None) -> dict:
    """Write a synthetic forum under root; returns the genmeta truth record."""
    return _Generator(Path(root), spec or ForumSpec()).generate()


def _cls(token: str) -> str:
    return f"[{token_predicate('class', token)}]"


def default_profile(spec: ForumSpec) -> TrainedProfile:
    """The profile a completed training session would produce for a fixture."""

    def loc(expr: str, strategy: Strategy = Strategy.MANUAL,
            date_format: str | None = None) -> Locator:
        return Locator(XPathExpr(expr), strategy, date_format=date_format)

    listing = {
        HOME_LINK: loc(f"//a{_cls('home-link')}"),
        SUBSECTION_LINK: loc(f"//a{_cls('subsection-link')}"),
        THREAD_LINK: loc(f"//a{_cls(spec.thread_link_class)}"
                         if spec.thread_link_class
                         else "//div[contains(concat(' ',normalize-space(@class),"
                              "' '),' structItem-title ')]/a"),
        NEXT_PAGE: loc(f"//a{_cls('pageNav-next')}"),
        PREV_PAGE: loc(f"//a{_cls('pageNav-prev')}"),
    }
    if spec.mutate_sections:
        # Union covers the pre- and post-visit DOM shapes.
        listing[THREAD_LINK] = loc(
            f"//div{_cls('structItem-title')}/a | //span{_cls('structItem-title')}/a")
    thread_locators = {
        HOME_LINK: loc(f"//a{_cls('home-link')}"),
        NEXT_PAGE: loc(f"//a{_cls('pageNav-next')}"),
        PREV_PAGE: loc(f"//a{_cls('pageNav-prev')}"),
        THREAD_TITLE: loc(f"//h1{_cls('p-title')}"),
        THREAD_SECTION: loc(f"//a{_cls('thread-section-ref')}"),
        POST_AUTHOR: loc(f"//a{_cls('username')}"),
        AUTHOR_POST_COUNT: loc(f"//span{_cls('post-count')}"),
        AUTHOR_POPULARITY: loc(f"//span{_cls('popularity')}"),
        AUTHOR_REGISTRATION_DATE: loc(f"//span{_cls('registered')}",
                                      date_format=REGISTRATION_DATE_FORMAT),
        POST_DATE: loc(f"//time{_cls('post-date')}",
                       date_format=POST_DATE_FORMAT),
        POST_CONTENT: loc(f"//div{_cls('message-body')}"),
    }
    if spec.last_page_landing:
        thread_locators[FIRST_PAGE_BUTTON] = loc(f"//a{_cls('pageNav-first')}")
    pages = {
        LOGIN: PageTraining(locators={
            USERNAME_FIELD: loc("//input[@name='username']"),
            PASSWORD_FIELD: loc("//input[@name='password']"),
            LOGIN_BUTTON: loc(f"//button{_cls('login-button')}"),
            HOME_LINK: loc(f"//a{_cls('home-link')}"),
        }),
        HOME: PageTraining(locators={
            HOME_LINK: loc(f"//a{_cls('home-link')}"),
            SECTION_LINK: loc(f"//a{_cls('section-link')}"),
            SUBSECTION_LINK: loc(f"//a{_cls('subsection-link')}"),
        }),
        SECTION: PageTraining(locators=dict(listing)),
        THREAD: PageTraining(
            locators=thread_locators,
            script=REVEAL_SCRIPT if spec.hidden_content else None),
    }
    if spec.subsections_per_section:
        pages[SUBSECTION] = PageTraining(locators=dict(listing))
    return TrainedProfile(forum_id=spec.forum_id, pages=pages)


def write_pacing_page(root: str | Path, words: int = 600) -> Path:
    """A one-page thread whose whole text content is exactly `words` tokens."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = random.Random(words)
    tokens = [rng.choice(_WORD_BANK) for _ in range(words)]
    body = f'<div class="message-body">{" ".join(tokens)}</div>'
    path = root / "pacing.html"
    path.write_text(f"<html><head></head><body>{body}</body></html>",
                    encoding="utf-8")
    return path

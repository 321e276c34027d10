"""Command-line entry points.

Subcommands: config (create/inspect), train (serve the training API),
crawl (run a trained profile; stdin accepts pause/resume/terminate),
tickets (manage a ticket bundle file), export (NDJSON records),
fixture-gen (synthetic forum for tests/demos).
"""

from __future__ import annotations

import argparse
import json
import queue
import sys
import threading
from pathlib import Path

from .clock import SimulatedClock, SystemClock
from .config import CrawlConfiguration, KeywordPolicy, load_configuration, save_configuration
from .crawl import CommandChannel, PAUSE, RESUME, TERMINATE, run_crawl
from .errors import CrawlerError
from .fetch import TicketBundle
from .fixture_adapter import FixtureAdapter
from .fixture_gen import ForumSpec, default_profile, generate_forum
from .profile import load_profile, save_profile
from .store import DataStore, PageArchive
from .webdriver import WebDriverAdapter


def _build_adapter(args, config, prompter=None, clock=None, archiver=None):
    if getattr(args, "fixture_root", None):
        return FixtureAdapter(args.fixture_root, clock=clock or SystemClock(),
                              download_images=config.download_images,
                              archiver=archiver, prompter=prompter)
    if getattr(args, "driver_url", None):
        return WebDriverAdapter(args.driver_url,
                                clock=clock or SystemClock(),
                                proxy=config.proxy,
                                load_timeout_s=config.load_timeout_s,
                                download_images=config.download_images,
                                archiver=archiver, prompter=prompter)
    raise SystemExit("one of --fixture-root or --driver-url is required")


def cmd_config(args) -> int:
    if args.from_fixture:
        meta = json.loads((Path(args.from_fixture) / "genmeta.json")
                          .read_text(encoding="utf-8"))
        config = CrawlConfiguration(
            forum_id=meta["forum_id"],
            urls={k: v for k, v in meta["urls"].items() if v},
            username=meta["credentials"]["username"],
            secret=meta["credentials"]["secret"])
    else:
        urls = {}
        for key in ("login", "home", "section", "subsection", "thread"):
            value = getattr(args, f"{key}_url", None)
            if value:
                urls[key] = value
        config = CrawlConfiguration(forum_id=args.forum_id or "forum",
                                    urls=urls)
    if args.blacklist:
        config.keyword_policy = KeywordPolicy(blacklist=tuple(args.blacklist))
    save_configuration(config, args.out)
    print(f"configuration written to {args.out}")
    return 0


def cmd_train(args) -> int:
    from .api import TrainingService, serve_api
    from .training import start_training

    config = load_configuration(args.config)
    prompts: "queue.Queue[str]" = queue.Queue()
    adapter = _build_adapter(args, config)
    adapter.start()
    seed = load_profile(args.seed_profile) if args.seed_profile else None
    session = start_training(config, adapter, seed=seed)
    service = TrainingService(session)
    server = serve_api(service, port=args.port, ui_dir=args.ui_dir)
    host, port = server.server_address
    print(f"training API listening on http://{host}:{port}", flush=True)
    session.load_page(session.current_page()[0])
    try:
        while True:
            threading.Event().wait(3600)
    except KeyboardInterrupt:
        print("training server stopped")
    finally:
        server.shutdown()
        adapter.close()
    return 0


def _stdin_pump(channel: CommandChannel, prompts: "queue.Queue[str]") -> None:
    for line in sys.stdin:
        word = line.strip().lower()
        if not word:
            continue
        if word in (PAUSE, RESUME, TERMINATE):
            channel.send(word)
            if word == TERMINATE:
                return
        else:
            prompts.put(line.strip())


def cmd_crawl(args) -> int:
    config = load_configuration(args.config)
    profile = load_profile(args.profile)
    store = DataStore(args.store)
    clock = SimulatedClock() if args.simulated_clock else SystemClock()
    channel = CommandChannel()
    prompts: "queue.Queue[str]" = queue.Queue()

    def prompter(kind: str, message: str) -> str:
        print(f"[{kind}] {message}", flush=True)
        return prompts.get()

    archive = None
    archiver = None
    if args.archive:
        archive = PageArchive(args.archive, config.forum_id)
        archiver = archive.archiver()
    adapter = _build_adapter(args, config, prompter=prompter, clock=clock,
                             archiver=archiver)
    pump = threading.Thread(target=_stdin_pump, args=(channel, prompts),
                            daemon=True)
    if not args.no_stdin:
        pump.start()
    tickets = None
    if args.tickets:
        pairs = json.loads(Path(args.tickets).read_text(encoding="utf-8"))
        tickets = TicketBundle(tuple((k, v) for k, v in pairs.items()))
    elif config.needs_cf_tickets:
        print("[tickets] configuration requests challenge tickets; "
              "provide them with --tickets FILE or continue without")
    summary = run_crawl(profile, config, adapter, store, clock=clock,
                        rng=args.seed, commands=channel, archive=archive,
                        tickets=tickets)
    print(json.dumps({
        "threads": summary.threads,
        "posts": summary.posts,
        "threads_discarded": summary.threads_discarded,
        "threads_skipped": summary.threads_skipped,
        "pages_fetched": summary.pages_fetched,
        "terminated_early": summary.terminated_early,
        "anomalies": summary.anomalies,
    }, indent=2))
    store.close()
    return 0


def cmd_tickets(args) -> int:
    path = Path(args.out)
    pairs = {}
    if path.exists():
        pairs = json.loads(path.read_text(encoding="utf-8"))
    for item in args.pairs:
        key, _, value = item.partition("=")
        if not key or not value:
            raise SystemExit(f"ticket pairs are KEY=VALUE, got {item!r}")
        pairs[key] = value
    path.write_text(json.dumps(pairs, indent=2), encoding="utf-8")
    print(f"{len(pairs)} ticket pair(s) in {path}")
    return 0


def cmd_export(args) -> int:
    store = DataStore(args.store)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for line in store.export(args.thread):
            out.write(line + "\n")
    except BrokenPipeError:
        pass  # downstream closed early (e.g. | head)
    finally:
        if out is not sys.stdout:
            out.close()
        store.close()
    return 0


def cmd_fixture_gen(args) -> int:
    spec = ForumSpec(
        forum_id=args.forum_id, sections=args.sections,
        subsections_per_section=args.subsections,
        threads_per_listing=args.threads,
        threads_per_listing_page=args.threads_per_page,
        pages_per_thread=args.pages, posts_per_page=args.posts,
        seed=args.seed,
        id_randomization=args.id_randomization,
        captcha_login=args.captcha_login,
        ticket_gate=args.ticket_gate,
        last_page_landing=args.last_page_landing,
        hidden_content=args.hidden_content,
        mutate_sections=args.mutate_sections,
        tagged_threads=args.tagged_threads,
        taboo_words=tuple(args.taboo_words or ()),
        n_taboo_titles=args.taboo_titles,
        n_taboo_posts=args.taboo_posts)
    meta = generate_forum(args.out, spec)
    print(f"fixture forum at {args.out}: {meta['threads_total']} threads, "
          f"{meta['posts_total']} posts")
    if args.profile_out:
        save_profile(default_profile(spec), args.profile_out)
        print(f"matching trained profile at {args.profile_out}")
    if args.config_out:
        config = CrawlConfiguration(
            forum_id=spec.forum_id,
            urls={k: v for k, v in meta["urls"].items() if v},
            username=spec.username, secret=spec.secret)
        save_configuration(config, args.config_out)
        print(f"matching configuration at {args.config_out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forumcrawl",
        description="Trainable forum crawler with human-behavior pacing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("config", help="create a configuration file")
    p.add_argument("--out", required=True)
    p.add_argument("--forum-id")
    p.add_argument("--from-fixture", help="fill URLs from a generated fixture")
    for key in ("login", "home", "section", "subsection", "thread"):
        p.add_argument(f"--{key}-url")
    p.add_argument("--blacklist", nargs="*")
    p.set_defaults(fn=cmd_config)

    p = sub.add_parser("train", help="serve the training API for the UI")
    p.add_argument("--config", required=True)
    p.add_argument("--fixture-root")
    p.add_argument("--driver-url")
    p.add_argument("--seed-profile")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--ui-dir", help="serve a built trainer UI from this dir")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("crawl", help="crawl with a trained profile")
    p.add_argument("--config", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--fixture-root")
    p.add_argument("--driver-url")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--archive")
    p.add_argument("--tickets")
    p.add_argument("--simulated-clock", action="store_true")
    p.add_argument("--no-stdin", action="store_true",
                   help="disable the pause/resume/terminate stdin reader")
    p.set_defaults(fn=cmd_crawl)

    p = sub.add_parser("tickets", help="store challenge-ticket pairs")
    p.add_argument("--out", required=True)
    p.add_argument("pairs", nargs="+", metavar="KEY=VALUE")
    p.set_defaults(fn=cmd_tickets)

    p = sub.add_parser("export", help="dump records as NDJSON")
    p.add_argument("--store", required=True)
    p.add_argument("--thread")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("fixture-gen", help="generate a synthetic forum")
    p.add_argument("--out", required=True)
    p.add_argument("--forum-id", default="fixture")
    p.add_argument("--sections", type=int, default=3)
    p.add_argument("--subsections", type=int, default=2)
    p.add_argument("--threads", type=int, default=20)
    p.add_argument("--threads-per-page", type=int, default=10)
    p.add_argument("--pages", type=int, default=3)
    p.add_argument("--posts", type=int, default=5)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--id-randomization", action="store_true")
    p.add_argument("--captcha-login", action="store_true")
    p.add_argument("--ticket-gate", action="store_true")
    p.add_argument("--last-page-landing", action="store_true")
    p.add_argument("--hidden-content", action="store_true")
    p.add_argument("--mutate-sections", action="store_true")
    p.add_argument("--tagged-threads", action="store_true")
    p.add_argument("--taboo-words", nargs="*")
    p.add_argument("--taboo-titles", type=int, default=0)
    p.add_argument("--taboo-posts", type=int, default=0)
    p.add_argument("--profile-out")
    p.add_argument("--config-out")
    p.set_defaults(fn=cmd_fixture_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except CrawlerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(f"error: {exc.code}", file=sys.stderr)
            return 2
        return int(exc.code or 0)


if __name__ == "__main__":
    raise SystemExit(main())

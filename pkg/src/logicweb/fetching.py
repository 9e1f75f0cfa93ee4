"""Retrieving programs: the oracle between the store and the web.

Besides live http(s), URLs can resolve offline: an in-memory page table
(tests), a `file://` root, or mount points mapping URL prefixes onto fixture
directories. A download that cannot produce a program yields a Bottom
outcome naming what went wrong; the store is left untouched in that case.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional
from urllib.parse import unquote, urlsplit

from .model import LWProgram, ProgramId, parse_program
from .pages import HttpResponse, translate_head, translate_page

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 10.0
MAX_REDIRECTS = 5


@dataclass
class FetchConfig:
    pages: dict[str, "PageEntry"] = field(default_factory=dict)
    fixture_root: Optional[Path] = None
    mounts: list[tuple[str, Path]] = field(default_factory=list)
    timeout: float = DEFAULT_TIMEOUT
    allow_network: bool = True


@dataclass
class PageEntry:
    body: str
    status: int = 200
    final_url: Optional[str] = None
    headers: list[tuple[str, str]] | None = None


@dataclass(frozen=True)
class FetchOutcome:
    program: Optional[LWProgram]
    reason: Optional[str] = None      # network | status | translate
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.program is not None


class FetchError(Exception):
    def __init__(self, reason: str, detail: str):
        super().__init__(f"{reason}: {detail}")
        self.reason = reason
        self.detail = detail


def _default_headers(body: str) -> list[tuple[str, str]]:
    return [("Content-Type", "text/html"),
            ("Content-Length", str(len(body.encode("utf-8"))))]


def _file_response(url: str, path: Path) -> HttpResponse:
    if not path.is_file():
        raise FetchError("status", f"no such fixture file: {path}")
    body = path.read_text(encoding="utf-8")
    return HttpResponse(url, url, 200, _default_headers(body), body)


def fetch_response(url: str, cfg: FetchConfig) -> HttpResponse:
    """Resolve a URL to a response; raises FetchError on failure."""
    entry = cfg.pages.get(url)
    if entry is not None:
        if entry.status != 200:
            raise FetchError("status", f"status {entry.status} for {url}")
        headers = entry.headers if entry.headers is not None else _default_headers(entry.body)
        return HttpResponse(url, entry.final_url or url, entry.status,
                            headers, entry.body)

    parts = urlsplit(url)
    if parts.scheme == "file":
        if cfg.fixture_root is None:
            raise FetchError("network", "file URLs need a fixture root")
        rel = unquote(parts.path).lstrip("/")
        return _file_response(url, cfg.fixture_root / rel)

    for prefix, root in sorted(cfg.mounts, key=lambda m: -len(m[0])):
        if url.startswith(prefix):
            rel = url[len(prefix):].split("?", 1)[0].split("#", 1)[0]
            if not rel or rel.endswith("/"):
                rel += "index.html"
            return _file_response(url, root / rel.lstrip("/"))

    if parts.scheme in ("http", "https"):
        if not cfg.allow_network:
            raise FetchError("network", f"network disabled, cannot fetch {url}")
        return _http_fetch(url, cfg)

    raise FetchError("network", f"unsupported URL scheme: {url}")


def _http_fetch(url: str, cfg: FetchConfig) -> HttpResponse:
    import requests

    session = requests.Session()
    session.max_redirects = MAX_REDIRECTS
    try:
        resp = session.get(url, timeout=cfg.timeout, allow_redirects=True)
    except requests.RequestException as exc:
        raise FetchError("network", str(exc)) from exc
    if resp.status_code != 200:
        raise FetchError("status", f"status {resp.status_code} for {url}")
    return HttpResponse(url, resp.url, resp.status_code,
                        list(resp.headers.items()), resp.text)


def download(pid: ProgramId, session, chain=(), sigma=()) -> FetchOutcome:
    """Install the program named by `pid`, fetching unless already cached.

    A cache hit is silent; an actual retrieval leaves a fetch event in the
    audit log before any bytes move."""
    cached = session.store.get(pid)
    if cached is not None:
        return FetchOutcome(cached)

    session.audit.emit("fetch", pid.serialize(), tuple(chain), tuple(sigma))
    try:
        resp = fetch_response(pid.url, session.fetch_config)
    except FetchError as exc:
        log.info("fetch failed for %s: %s", pid.serialize(), exc)
        return FetchOutcome(None, exc.reason, exc.detail)

    try:
        if pid.method == "head":
            program = translate_head(resp)
        else:
            program = translate_page(resp, pid.method, pid.post_fields)
    except Exception as exc:
        log.info("translation failed for %s: %s", pid.serialize(), exc)
        return FetchOutcome(None, "translate", str(exc))

    session.store.install(program)
    session.registry.assign_policy(pid, resp.body)
    session.hooks.on_program_created(pid)
    return FetchOutcome(program)


def add_programs(session, pids, chain=(), sigma=()) -> bool:
    """Bring every named program into the store; True only if all present.
    Ids are handled in serialized order so fetch traffic is deterministic."""
    for pid in sorted(set(pids), key=ProgramId.sort_key):
        download(pid, session, chain, sigma)
    return all(pid in session.store for pid in pids)


# ---------------------------------------------------------------- disk cache

_ASSIGN_FILE = "_assignments"


def _program_filename(pid: ProgramId) -> str:
    digest = hashlib.sha1(pid.serialize().encode("utf-8")).hexdigest()[:16]
    return f"{digest}.lwp"


def save_store(dirpath: str | Path, store, registry) -> None:
    """One file per program: serialized id on the first line, clause text
    after. Policy assignments live in a sidecar map file."""
    from .model import clause_text

    root = Path(dirpath)
    root.mkdir(parents=True, exist_ok=True)
    keep = set()
    for program in store.programs():
        name = _program_filename(program.id)
        keep.add(name)
        lines = [program.id.serialize()]
        lines += [clause_text(c) for c in program.clauses]
        (root / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
    for old in root.glob("*.lwp"):
        if old.name not in keep:
            old.unlink()
    assign_lines = [f"{pid.serialize()}\t{pol.serialize()}"
                    for pid, pol in registry.program_to_policy.items()]
    (root / _ASSIGN_FILE).write_text("\n".join(assign_lines) + "\n", encoding="utf-8")


def load_store(dirpath: str | Path, store, registry) -> None:
    from .syntax import parse_term_text

    root = Path(dirpath)
    if not root.is_dir():
        return
    for path in sorted(root.glob("*.lwp")):
        text = path.read_text(encoding="utf-8")
        first, _, rest = text.partition("\n")
        pid = ProgramId.from_term(parse_term_text(first)[0])
        store.install(LWProgram(pid, parse_program(rest)))
    assign = root / _ASSIGN_FILE
    if assign.is_file():
        for line in assign.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            left, _, right = line.partition("\t")
            pid = ProgramId.from_term(parse_term_text(left)[0])
            pol = ProgramId.from_term(parse_term_text(right)[0])
            registry.program_to_policy.setdefault(pid, pol)

"""Command line front end for the interpreter.

Exit codes: 0 for a query with at least one answer (or a successful
command), 1 for a query that finitely fails or a fetch/check that comes
back negative, 2 when a resource guard stopped the derivation, 3 for
usage and configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import syntax
from .engine import (EMPTY_CONTEXT, EngineConfig, EngineError, Session)
from .fetching import (FetchConfig, FetchError, download, fetch_response,
                       load_store, save_store)
from .guards import Guard, GuardConfig, guarded_solve
from .model import (Encapsulation, ExpressionError, Id, ProgramId,
                    ProgramStore, ReduceOp, clause_text, parse_goal,
                    goal_from_term)
from .security import PolicyRegistry, RegistryError
from .signatures import (SIGNED_SUFFIX, KeyStore, SignatureError,
                         generate_keypair, load_private_key,
                         save_private_key, sign_page)
from .syntax import ParseError, parse_term_text
from .terms import Str, Struct

EXIT_OK = 0
EXIT_NO = 1
EXIT_STOPPED = 2
EXIT_USAGE = 3


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env(name: str) -> str | None:
    value = os.environ.get(name)
    return value if value else None


# ------------------------------------------------------------- session setup

def _add_session_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--registry", metavar="FILE",
                   help="policy registry (or $LW_REGISTRY)")
    p.add_argument("--keystore", metavar="FILE",
                   help="signer public keys (or $LW_KEYSTORE)")
    p.add_argument("--fixture-root", metavar="DIR",
                   help="directory for file:// URLs (or $LW_FIXTURE_ROOT)")
    p.add_argument("--mount", action="append", default=[], metavar="PREFIX=DIR",
                   help="serve URLs under PREFIX from DIR; repeatable")
    p.add_argument("--store-dir", metavar="DIR",
                   help="persistent program cache (or $LW_STORE_DIR)")
    p.add_argument("--no-security", action="store_true",
                   help="disable policy enforcement")
    p.add_argument("--trusted", action="store_true",
                   help="honour trusted-prefix lines in the registry")
    p.add_argument("--offline", action="store_true",
                   help="never touch the network")
    p.add_argument("--http-timeout", type=float, default=10.0, metavar="SECS")
    p.add_argument("--no-occurs-check", action="store_true",
                   help="unify without the occurs check")
    p.add_argument("--timeout-ms", type=int, default=None, metavar="MS",
                   help="abort the query after MS milliseconds")
    p.add_argument("--max-depth", type=int, default=40, metavar="N")
    p.add_argument("--max-clauses", type=int, default=500, metavar="N")
    p.add_argument("--max-programs", type=int, default=100, metavar="N")
    p.add_argument("--max-context-size", type=int, default=None, metavar="N")
    p.add_argument("--loop-check", action=argparse.BooleanOptionalAction,
                   default=True, help="stop on repeated ancestor goals")


def _parse_mounts(specs: list[str]) -> list[tuple[str, Path]]:
    out = []
    for spec in specs:
        prefix, sep, directory = spec.partition("=")
        if not sep or not prefix or not directory:
            raise CliError(f"bad --mount (want PREFIX=DIR): {spec!r}")
        out.append((prefix, Path(directory)))
    return out


def _build_session(args) -> Session:
    keystore_path = args.keystore or _env("LW_KEYSTORE")
    keystore = KeyStore.load(keystore_path) if keystore_path else KeyStore()

    security = not args.no_security
    registry_path = args.registry or _env("LW_REGISTRY")
    if registry_path:
        registry = PolicyRegistry.load(registry_path, keystore,
                                       trusted_enabled=args.trusted)
    elif security:
        raise CliError("a policy registry is required unless --no-security is given")
    else:
        # never consulted for decisions, but downloads still record an owner
        placeholder = ProgramId.get("lw:no-policy")
        registry = PolicyRegistry({"unknown": placeholder}, keystore=keystore)

    fixture_root = args.fixture_root or _env("LW_FIXTURE_ROOT")
    fetch_cfg = FetchConfig(
        fixture_root=Path(fixture_root) if fixture_root else None,
        mounts=_parse_mounts(args.mount),
        timeout=args.http_timeout,
        allow_network=not args.offline,
    )
    config = EngineConfig(security_enabled=security,
                          occurs_check=not args.no_occurs_check)
    guard = Guard(GuardConfig(
        max_depth=args.max_depth,
        loop_check=args.loop_check,
        max_clauses=args.max_clauses,
        max_programs=args.max_programs,
        timeout_ms=args.timeout_ms,
        max_context_size=args.max_context_size,
    ))
    session = Session(registry, fetch_cfg, config, hooks=guard)

    store_dir = args.store_dir or _env("LW_STORE_DIR")
    if store_dir:
        load_store(store_dir, session.store, session.registry)
        session._cli_store_dir = store_dir
    return session


def _flush_store(session: Session) -> None:
    store_dir = getattr(session, "_cli_store_dir", None)
    if store_dir:
        save_store(store_dir, session.store, session.registry)


# ------------------------------------------------------------------ commands

def cmd_query(args, trace: bool = False) -> int:
    session = _build_session(args)
    try:
        goal, varmap = parse_goal(args.goal)
    except ParseError as exc:
        raise CliError(f"bad goal: {exc}") from exc
    outcome = guarded_solve(session, ProgramId.get(args.url), goal,
                            limit=args.limit)
    _flush_store(session)

    qvars = list(varmap.values())
    for sol in outcome.solutions:
        if qvars:
            print(", ".join(f"{v.name} = {syntax.to_text(sol.subst.apply(v))}"
                            for v in qvars))
        else:
            print("true")
    if trace:
        for line in session.audit.lines():
            print(line)
    if outcome.terminated:
        print(f"stopped: {outcome.termination.message}", file=sys.stderr)
        return EXIT_STOPPED
    return EXIT_OK if outcome.solutions else EXIT_NO


def cmd_trace(args) -> int:
    return cmd_query(args, trace=True)


def cmd_fetch(args) -> int:
    session = _build_session(args)
    if args.method == "head":
        pid = ProgramId.head(args.url)
    else:
        pid = ProgramId.get(args.url)
    outcome = download(pid, session)
    _flush_store(session)
    if not outcome.ok:
        print(f"fetch failed ({outcome.reason}): {outcome.detail}",
              file=sys.stderr)
        return EXIT_NO
    for clause in outcome.program.clauses:
        print(clause_text(clause))
    return EXIT_OK


def cmd_policy_check(args) -> int:
    """Test a system call or a program id against one or more policies
    composed the way the engine composes them: every policy must agree."""
    session = _build_session(args)
    pids = [ProgramId.get(u) for u in args.policy_urls]
    for pid in pids:
        session.registry.register_policy(pid)

    if args.call:
        term, _ = parse_term_text(args.call)
        check = Struct("valid_systemCall", (term,))
    else:
        id_term, _ = parse_term_text(args.program)
        target = ProgramId.from_term(id_term)
        check = Struct("valid_program", (target.method_term(), Str(target.url)))

    composed = ReduceOp("*", tuple(Encapsulation(Id(p)) for p in pids))
    allowed = False
    for _ in session.engine.context_switch((), EMPTY_CONTEXT, composed,
                                           goal_from_term(check)):
        allowed = True
        break
    print("allow" if allowed else "deny")
    return EXIT_OK if allowed else EXIT_NO


def cmd_store_list(args) -> int:
    store_dir = args.store_dir or _env("LW_STORE_DIR")
    if not store_dir:
        raise CliError("--store-dir (or $LW_STORE_DIR) is required")
    store = ProgramStore()
    registry = PolicyRegistry({"unknown": ProgramId.get("lw:no-policy")})
    load_store(store_dir, store, registry)
    for program in sorted(store.programs(), key=lambda p: p.id.sort_key()):
        pol = registry.program_to_policy.get(program.id)
        suffix = f"  policy={pol.url}" if pol else ""
        print(f"{program.id.serialize()}  clauses={len(program.clauses)}{suffix}")
    return EXIT_OK


def cmd_store_clear(args) -> int:
    store_dir = args.store_dir or _env("LW_STORE_DIR")
    if not store_dir:
        raise CliError("--store-dir (or $LW_STORE_DIR) is required")
    root = Path(store_dir)
    removed = 0
    if root.is_dir():
        for path in root.glob("*.lwp"):
            path.unlink()
            removed += 1
        sidecar = root / "_assignments"
        if sidecar.is_file():
            sidecar.unlink()
    print(f"removed {removed} cached program(s)")
    return EXIT_OK


def cmd_keygen(args) -> int:
    private, public = generate_keypair()
    save_private_key(args.key_out, private)
    keystore_path = args.keystore or _env("LW_KEYSTORE")
    if keystore_path:
        path = Path(keystore_path)
        keystore = KeyStore.load(path) if path.is_file() else KeyStore()
        keystore.add(args.signer, public)
        keystore.save(path)
        print(f"key for {args.signer!r} written to {args.key_out}, "
              f"public key added to {keystore_path}")
    else:
        print(f"key for {args.signer!r} written to {args.key_out}")
    return EXIT_OK


def cmd_sign(args) -> int:
    html = Path(args.page).read_text(encoding="utf-8")
    signed = sign_page(html, load_private_key(args.key), args.signer)
    if args.out:
        Path(args.out).write_text(signed, encoding="utf-8")
        if not args.out.endswith(SIGNED_SUFFIX):
            print(f"note: name does not end in {SIGNED_SUFFIX}; pages served "
                  "from it will not be treated as signed", file=sys.stderr)
    else:
        sys.stdout.write(signed)
    return EXIT_OK


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lw",
                description="Run goals against logic programs on the web.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("query", help="evaluate a goal against a page's program")
    q.add_argument("url")
    q.add_argument("goal")
    q.add_argument("--limit", type=int, default=None, metavar="N",
                   help="stop after N answers")
    _add_session_args(q)
    q.set_defaults(func=cmd_query)

    t = sub.add_parser("trace", help="run a query, then print the audit trail")
    t.add_argument("url")
    t.add_argument("goal")
    t.add_argument("--limit", type=int, default=None, metavar="N")
    _add_session_args(t)
    t.set_defaults(func=cmd_trace)

    f = sub.add_parser("fetch", help="download one page and print its program")
    f.add_argument("url")
    f.add_argument("--method", choices=["get", "head"], default="get")
    _add_session_args(f)
    f.set_defaults(func=cmd_fetch)

    pc = sub.add_parser(
        "policy-check",
        help="ask whether the given policies all permit a call or program")
    pc.add_argument("policy_urls", nargs="+", metavar="POLICY_URL")
    group = pc.add_mutually_exclusive_group(required=True)
    group.add_argument("--call", metavar="TERM",
                       help="system call term, e.g. 'open(\"/tmp/x\", write, S)'")
    group.add_argument("--program", metavar="ID",
                       help="program id term, e.g. 'lw(get, \"http://a/\")'")
    _add_session_args(pc)
    pc.set_defaults(func=cmd_policy_check)

    sl = sub.add_parser("store-list", help="list the persistent program cache")
    sl.add_argument("--store-dir", metavar="DIR")
    sl.set_defaults(func=cmd_store_list)

    sc = sub.add_parser("store-clear", help="empty the persistent program cache")
    sc.add_argument("--store-dir", metavar="DIR")
    sc.set_defaults(func=cmd_store_clear)

    kg = sub.add_parser("keygen", help="create a signer keypair")
    kg.add_argument("signer")
    kg.add_argument("--key-out", required=True, metavar="FILE",
                    help="where to write the private key")
    kg.add_argument("--keystore", metavar="FILE",
                    help="keystore to add the public key to (or $LW_KEYSTORE)")
    kg.set_defaults(func=cmd_keygen)

    sg = sub.add_parser("sign", help="append a signature trailer to a page")
    sg.add_argument("page")
    sg.add_argument("--key", required=True, metavar="FILE")
    sg.add_argument("--signer", required=True)
    sg.add_argument("--out", metavar="FILE", help="default: stdout")
    sg.set_defaults(func=cmd_sign)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RegistryError, SignatureError, ParseError, EngineError,
            ExpressionError, FetchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

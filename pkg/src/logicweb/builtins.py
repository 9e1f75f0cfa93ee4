"""The audited built-in predicate table.

Everything a program can do to the world outside pure resolution lives
here. Arguments arrive fully dereferenced; an implementation yields fresh
substitutions over the remaining variables, which the engine composes into
the current answer. Failures (type errors included) are quiet: the goal
just fails, optionally leaving a notice in the audit log.
"""

from __future__ import annotations

import subprocess
import time
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

from . import syntax
from .model import Id, clause_from_term, clause_to_term
from .terms import (Atom, Num, Str, Struct, Substitution, Term, Var,
                    EMPTY_SUBST, functor_of, list_items, make_list, unify)


@dataclass(frozen=True)
class BuiltinSpec:
    name: str
    arity: int
    impl: Callable
    note: str


TABLE: dict[tuple[str, int], BuiltinSpec] = {}


def _register(name: str, arity: int, note: str):
    def deco(fn):
        TABLE[(name, arity)] = BuiltinSpec(name, arity, fn, note)
        return fn
    return deco


def lookup(t: Term) -> Optional[BuiltinSpec]:
    key = functor_of(t)
    return TABLE.get(key) if key else None


def call_builtin(t: Term, rt) -> Iterator[Substitution]:
    """Type-checked execution of one built-in call. `rt` carries the session
    (store, registry, streams, audit, hooks) and the calling context."""
    spec = lookup(t)
    if spec is None:
        rt.notice(f"unknown built-in: {syntax.to_text(t)}")
        return
    args = t.args if isinstance(t, Struct) else ()
    yield from spec.impl(args, rt)


# ---------------------------------------------------------------- helpers

def _text(t: Term) -> Optional[str]:
    if isinstance(t, Str):
        return t.value
    if isinstance(t, Atom):
        return t.name
    return None


def _unify_new(a: Term, b: Term) -> Optional[Substitution]:
    return unify(a, b, EMPTY_SUBST)


def _proper_list(t: Term) -> Optional[list[Term]]:
    items, tail = list_items(t)
    if isinstance(tail, Atom) and tail.name == "[]":
        return items
    return None


# ---------------------------------------------------------------- I/O

@_register("open", 3, "open(File, read|write, Stream): opens a real file")
def _bi_open(args, rt):
    fname, mode, stream = args
    path = _text(fname)
    if path is None:
        rt.notice("open/3: file name must be an atom or string")
        return
    if not (isinstance(mode, Atom) and mode.name in ("read", "write")):
        rt.notice("open/3: mode must be read or write")
        return
    if not isinstance(stream, Var):
        rt.notice("open/3: stream argument must be unbound")
        return
    try:
        handle = open(path, "r" if mode.name == "read" else "w", encoding="utf-8")
    except OSError as exc:
        rt.notice(f"open/3 failed: {exc}")
        return
    n = rt.session.new_stream(handle)
    yield EMPTY_SUBST.bind(stream, Struct("$stream", (Num(n),)))


@_register("close", 1, "close(Stream)")
def _bi_close(args, rt):
    (stream,) = args
    if (isinstance(stream, Struct) and stream.functor == "$stream"
            and len(stream.args) == 1 and isinstance(stream.args[0], Num)):
        handle = rt.session.streams.pop(stream.args[0].value, None)
        if handle is not None:
            handle.close()
            yield EMPTY_SUBST
            return
    rt.notice("close/1: not an open stream")


@_register("system", 1, "system(Command): run a shell command, succeed on exit 0")
def _bi_system(args, rt):
    cmd = _text(args[0])
    if cmd is None:
        rt.notice("system/1: command must be an atom or string")
        return
    try:
        proc = subprocess.run(cmd, shell=True, capture_output=True, timeout=30)
    except (OSError, subprocess.TimeoutExpired) as exc:
        rt.notice(f"system/1 failed: {exc}")
        return
    if proc.returncode == 0:
        yield EMPTY_SUBST


@_register("display", 1, "display(Term): print in canonical syntax")
def _bi_display(args, rt):
    print(syntax.to_text(args[0]))
    yield EMPTY_SUBST


@_register("report_deletion", 1, "report_deletion(Cmd): flag a deletion to the user")
def _bi_report_deletion(args, rt):
    text = syntax.to_text(args[0])
    rt.session.audit.emit("notice", f"deletion-report {text}")
    print(f"deletion reported: {text}")
    yield EMPTY_SUBST


@_register("sleep", 1, "sleep(Millis): cooperative pause, wakes early on guard stop")
def _bi_sleep(args, rt):
    if not isinstance(args[0], Num):
        rt.notice("sleep/1: milliseconds must be a number")
        return
    remaining = float(args[0].value) / 1000.0
    while remaining > 0:
        rt.session.hooks.check_now()
        step = min(0.02, remaining)
        time.sleep(step)
        remaining -= step
    rt.session.hooks.check_now()
    yield EMPTY_SUBST


# ---------------------------------------------------------------- store state

@_register("assert", 1, "assert(Clause): extend the calling policy program")
def _bi_assert(args, rt):
    prog = rt.policy_program()
    if prog is None:
        rt.notice("assert/1: only policy programs may change their clauses")
        return
    try:
        prog.clauses.append(clause_from_term(args[0]))
    except Exception as exc:
        rt.notice(f"assert/1: {exc}")
        return
    yield EMPTY_SUBST


@_register("retract", 1, "retract(Clause): remove the first matching clause")
def _bi_retract(args, rt):
    prog = rt.policy_program()
    if prog is None:
        rt.notice("retract/1: only policy programs may change their clauses")
        return
    # a fact's clause term is its head, so a bare pattern matches facts and
    # a ':-'/2 pattern matches rules
    pattern = args[0]
    for i, clause in enumerate(prog.clauses):
        s = _unify_new(pattern, clause_to_term(clause))
        if s is not None:
            del prog.clauses[i]
            yield s
            return


@_register("program_exists", 1, "program_exists(lw(Method, URL))")
def _bi_program_exists(args, rt):
    from .model import ProgramId
    try:
        pid = ProgramId.from_term(args[0])
    except Exception:
        rt.notice("program_exists/1: not a program identifier")
        return
    if pid in rt.session.store:
        yield EMPTY_SUBST


# ---------------------------------------------------------------- text & lists

@_register("contains", 2, "contains(Text, Sub): substring test")
def _bi_contains(args, rt):
    text, sub = _text(args[0]), _text(args[1])
    if text is None or sub is None:
        rt.notice("contains/2: both arguments must be text")
        return
    if sub in text:
        yield EMPTY_SUBST


@_register("append", 3, "append/3 over lists, or strings by concatenation")
def _bi_append(args, rt):
    a, b, c = args
    if isinstance(a, Str) or isinstance(b, Str) or isinstance(c, Str):
        yield from _append_strings(a, b, c)
        return
    yield from _append_lists(a, b, c)


def _append_strings(a, b, c):
    ta, tb, tc = _text(a), _text(b), _text(c)
    if ta is not None and tb is not None:
        s = _unify_new(c, Str(ta + tb))
        if s is not None:
            yield s
        return
    if tc is not None:
        if ta is not None:
            if tc.startswith(ta):
                s = _unify_new(b, Str(tc[len(ta):]))
                if s is not None:
                    yield s
            return
        if tb is not None:
            if tc.endswith(tb):
                s = _unify_new(a, Str(tc[:len(tc) - len(tb)]))
                if s is not None:
                    yield s
            return
        for i in range(len(tc) + 1):
            s = _unify_new(a, Str(tc[:i]))
            if s is None:
                continue
            s2 = unify(b, Str(tc[i:]), s)
            if s2 is not None:
                yield s2


def _append_lists(a, b, c):
    front = _proper_list(a)
    if front is not None:
        s = _unify_new(c, make_list(front, b))
        if s is not None:
            yield s
        return
    whole = _proper_list(c)
    if whole is not None:
        for i in range(len(whole) + 1):
            s = _unify_new(a, make_list(whole[:i]))
            if s is None:
                continue
            s2 = unify(b, make_list(whole[i:]), s)
            if s2 is not None:
                yield s2
        return
    # both open-ended: not needed by any policy we ship


@_register("member", 2, "member(X, List): enumerate elements")
def _bi_member(args, rt):
    x, lst = args
    items, _tail = list_items(lst)
    for item in items:
        s = _unify_new(x, item)
        if s is not None:
            yield s


# ---------------------------------------------------------------- comparison

@_register("=", 2, "unification")
def _bi_unify(args, rt):
    s = unify(args[0], args[1], EMPTY_SUBST, occurs_check=rt.occurs_check)
    if s is not None:
        yield s


@_register("\\=", 2, "not unifiable")
def _bi_not_unify(args, rt):
    if unify(args[0], args[1], EMPTY_SUBST, occurs_check=rt.occurs_check) is None:
        yield EMPTY_SUBST


@_register("==", 2, "structural equality")
def _bi_eq(args, rt):
    if args[0] == args[1]:
        yield EMPTY_SUBST


@_register("\\==", 2, "structural inequality")
def _bi_neq(args, rt):
    if args[0] != args[1]:
        yield EMPTY_SUBST


class _ArithmeticError(Exception):
    pass


def _eval_arith(t: Term):
    if isinstance(t, Num):
        return t.value
    if isinstance(t, Struct) and len(t.args) == 2 and t.functor in ("+", "-", "*"):
        lhs, rhs = _eval_arith(t.args[0]), _eval_arith(t.args[1])
        if t.functor == "+":
            return lhs + rhs
        if t.functor == "-":
            return lhs - rhs
        return lhs * rhs
    if isinstance(t, Struct) and t.functor == "-" and len(t.args) == 1:
        return -_eval_arith(t.args[0])
    raise _ArithmeticError(syntax.to_text(t))


@_register("is", 2, "is(X, Expr): evaluate +, -, * over numbers")
def _bi_is(args, rt):
    try:
        value = _eval_arith(args[1])
    except _ArithmeticError as exc:
        rt.notice(f"is/2: not arithmetic: {exc}")
        return
    s = _unify_new(args[0], Num(value))
    if s is not None:
        yield s


def _compare(op: str):
    import operator
    table = {"<": operator.lt, ">": operator.gt, "=<": operator.le,
             ">=": operator.ge, "=:=": operator.eq, "=\\=": operator.ne}
    fn = table[op]

    def impl(args, rt):
        try:
            lhs, rhs = _eval_arith(args[0]), _eval_arith(args[1])
        except _ArithmeticError as exc:
            rt.notice(f"{op}: not arithmetic: {exc}")
            return
        if fn(lhs, rhs):
            yield EMPTY_SUBST
    return impl


for _op in ("<", ">", "=<", ">=", "=:=", "=\\="):
    TABLE[(_op, 2)] = BuiltinSpec(_op, 2, _compare(_op), f"arithmetic {_op}")


# ---------------------------------------------------------------- type tests

@_register("atom", 1, "atom(X)")
def _bi_atom(args, rt):
    if isinstance(args[0], Atom):
        yield EMPTY_SUBST


@_register("var", 1, "var(X)")
def _bi_var(args, rt):
    if isinstance(args[0], Var):
        yield EMPTY_SUBST


@_register("number", 1, "number(X)")
def _bi_number(args, rt):
    if isinstance(args[0], Num):
        yield EMPTY_SUBST


@_register("string", 1, "string(X)")
def _bi_string(args, rt):
    if isinstance(args[0], Str):
        yield EMPTY_SUBST


class BuiltinCall:
    """Runtime context handed to built-in implementations."""

    def __init__(self, session, ctx):
        self.session = session
        self.ctx = ctx

    @property
    def occurs_check(self) -> bool:
        return self.session.config.occurs_check

    def notice(self, message: str) -> None:
        self.session.audit.emit("notice", message)

    def policy_program(self):
        """The store entry for the calling context when it is a single
        policy program; None otherwise."""
        if isinstance(self.ctx, Id) and self.session.registry.is_policy(self.ctx.pid):
            return self.session.store.get(self.ctx.pid)
        return None

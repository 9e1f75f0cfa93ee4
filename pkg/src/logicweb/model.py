"""Program identifiers, clauses, goals, composition expressions, the store.

A LogicWeb program is a set of clauses obtained by translating a web page;
it is named by how it was retrieved (`lw(head, URL)`, `lw(get, URL)`,
`lw(post(Fields), URL)`). Goals run against a *composition expression* over
such programs; the expression in a clause body may still contain logic
variables, so goals carry it as a plain term until evaluation time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from . import syntax
from .terms import (Atom, Str, Struct, Term, Var, make_list, list_items,
                    rename_apart)


class ExpressionError(Exception):
    """A term in context position does not denote a valid composition."""


# ---------------------------------------------------------------- identifiers

@dataclass(frozen=True, order=False)
class ProgramId:
    method: str                                   # 'head' | 'get' | 'post'
    url: str
    post_fields: tuple[tuple[str, str], ...] = ()  # order-sensitive

    def __post_init__(self):
        if self.method not in ("head", "get", "post"):
            raise ValueError(f"bad retrieval method {self.method!r}")
        if not self.url:
            raise ValueError("empty URL")
        if self.method != "post" and self.post_fields:
            raise ValueError("fields only make sense for post")

    @classmethod
    def head(cls, url: str) -> "ProgramId":
        return cls("head", url)

    @classmethod
    def get(cls, url: str) -> "ProgramId":
        return cls("get", url)

    @classmethod
    def post(cls, url: str, fields: Iterable[tuple[str, str]]) -> "ProgramId":
        return cls("post", url, tuple(fields))

    def method_term(self) -> Term:
        if self.method == "post":
            fields = make_list([Struct("field", (Str(n), Str(v)))
                                for n, v in self.post_fields])
            return Struct("post", (fields,))
        return Atom(self.method)

    def to_term(self) -> Term:
        return Struct("lw", (self.method_term(), Str(self.url)))

    @classmethod
    def from_term(cls, t: Term) -> "ProgramId":
        if not (isinstance(t, Struct) and t.functor == "lw" and len(t.args) == 2):
            raise ExpressionError(f"not a program identifier: {syntax.to_text(t)}")
        mt, ut = t.args
        if not isinstance(ut, Str):
            raise ExpressionError("program URL must be a string")
        if isinstance(mt, Atom) and mt.name in ("head", "get"):
            return cls(mt.name, ut.value)
        if isinstance(mt, Struct) and mt.functor == "post" and len(mt.args) == 1:
            items, tail = list_items(mt.args[0])
            if not (isinstance(tail, Atom) and tail.name == "[]"):
                raise ExpressionError("post field list must be a proper list")
            fields = []
            for item in items:
                if (isinstance(item, Struct) and item.functor == "field"
                        and len(item.args) == 2
                        and isinstance(item.args[0], Str)
                        and isinstance(item.args[1], Str)):
                    fields.append((item.args[0].value, item.args[1].value))
                else:
                    raise ExpressionError("post field must be field(Name, Value)")
            return cls.post(ut.value, fields)
        raise ExpressionError(f"bad retrieval method in {syntax.to_text(t)}")

    def serialize(self) -> str:
        return syntax.to_text(self.to_term())

    def sort_key(self) -> str:
        return self.serialize()

    def __repr__(self) -> str:
        return f"<{self.serialize()}>"


# ---------------------------------------------------------------- goals

class Goal:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class TrueGoal(Goal):
    pass


@dataclass(frozen=True, slots=True)
class Call(Goal):
    term: Term


@dataclass(frozen=True, slots=True)
class Conj(Goal):
    left: Goal
    right: Goal


@dataclass(frozen=True, slots=True)
class ContextSwitch(Goal):
    """Run `goal` against the composition denoted by `expr` (a term; it may
    contain variables that only get bound at run time)."""
    expr: Term
    goal: Goal


TRUE = TrueGoal()


@dataclass(frozen=True, slots=True)
class Clause:
    head: Term
    body: Goal


# ---------------------------------------------------------------- expressions

class ProgramExpression:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Id(ProgramExpression):
    pid: ProgramId


@dataclass(frozen=True, slots=True)
class CurrentContext(ProgramExpression):
    pass


@dataclass(frozen=True, slots=True)
class EmptyProgram(ProgramExpression):
    pass


@dataclass(frozen=True, slots=True)
class Union(ProgramExpression):
    left: ProgramExpression
    right: ProgramExpression


@dataclass(frozen=True, slots=True)
class Intersection(ProgramExpression):
    left: ProgramExpression
    right: ProgramExpression


@dataclass(frozen=True, slots=True)
class Restriction(ProgramExpression):
    expr: ProgramExpression
    prog: ProgramExpression    # Id, or CurrentContext before insertion

    def __post_init__(self):
        if not isinstance(self.prog, (Id, CurrentContext)):
            raise ExpressionError(
                "the right-hand side of a restriction must be a program identifier")


@dataclass(frozen=True, slots=True)
class Encapsulation(ProgramExpression):
    expr: ProgramExpression


@dataclass(frozen=True, slots=True)
class ReduceRestrict(ProgramExpression):
    expr: ProgramExpression
    progs: tuple[ProgramExpression, ...]   # each Id or CurrentContext

    def __post_init__(self):
        for p in self.progs:
            if not isinstance(p, (Id, CurrentContext)):
                raise ExpressionError(
                    "restriction reduce takes a list of program identifiers")


@dataclass(frozen=True, slots=True)
class ReduceOp(ProgramExpression):
    op: str                                 # '+' or '*'
    exprs: tuple[ProgramExpression, ...]

    def __post_init__(self):
        if self.op not in ("+", "*"):
            raise ExpressionError(f"bad reduce operator {self.op!r}")
        if not self.exprs:
            raise ExpressionError("reduce over an empty expression list")


CC = CurrentContext()
EMPTY_PROGRAM = EmptyProgram()


def expids(e: ProgramExpression) -> frozenset[ProgramId]:
    """All program identifiers mentioned anywhere in the expression."""
    out: set[ProgramId] = set()

    def go(x: ProgramExpression):
        if isinstance(x, Id):
            out.add(x.pid)
        elif isinstance(x, (Union, Intersection)):
            go(x.left)
            go(x.right)
        elif isinstance(x, Restriction):
            go(x.expr)
            go(x.prog)
        elif isinstance(x, Encapsulation):
            go(x.expr)
        elif isinstance(x, ReduceRestrict):
            go(x.expr)
            for p in x.progs:
                go(p)
        elif isinstance(x, ReduceOp):
            for sub in x.exprs:
                go(sub)
        # CurrentContext and EmptyProgram contribute nothing

    go(e)
    return frozenset(out)


def insert_current_context(e: ProgramExpression,
                           ctx: ProgramExpression) -> ProgramExpression:
    """Replace every context marker in `e` by `ctx`.

    Raises ExpressionError when the replacement would put a non-identifier
    on the right of a restriction."""

    def as_prog(x: ProgramExpression) -> ProgramExpression:
        if isinstance(x, CurrentContext):
            if not isinstance(ctx, Id):
                raise ExpressionError(
                    "current context is not a single program identifier, "
                    "cannot restrict by it")
            return ctx
        return x

    def go(x: ProgramExpression) -> ProgramExpression:
        if isinstance(x, CurrentContext):
            return ctx
        if isinstance(x, Union):
            return Union(go(x.left), go(x.right))
        if isinstance(x, Intersection):
            return Intersection(go(x.left), go(x.right))
        if isinstance(x, Restriction):
            return Restriction(go(x.expr), as_prog(x.prog))
        if isinstance(x, Encapsulation):
            return Encapsulation(go(x.expr))
        if isinstance(x, ReduceRestrict):
            return ReduceRestrict(go(x.expr), tuple(as_prog(p) for p in x.progs))
        if isinstance(x, ReduceOp):
            return ReduceOp(x.op, tuple(go(sub) for sub in x.exprs))
        return x

    return go(e)


def expr_from_term(t: Term) -> ProgramExpression:
    """Interpret a (fully dereferenced) term as a composition expression."""
    if isinstance(t, Var):
        raise ExpressionError("context expression is not instantiated")
    if isinstance(t, Atom):
        if t.name == "empty":
            return EMPTY_PROGRAM
        if t.name == syntax.CURRENT_CONTEXT_NAME:
            return CC
        raise ExpressionError(f"not a composition expression: {syntax.to_text(t)}")
    if isinstance(t, Str):
        # a bare URL abbreviates the program fetched from it with GET
        return Id(ProgramId.get(t.value))
    if isinstance(t, Struct):
        if t.functor == "lw" and len(t.args) == 2:
            return Id(ProgramId.from_term(t))
        if t.functor == "+" and len(t.args) == 2:
            return Union(expr_from_term(t.args[0]), expr_from_term(t.args[1]))
        if t.functor == "*" and len(t.args) == 2:
            return Intersection(expr_from_term(t.args[0]), expr_from_term(t.args[1]))
        if t.functor == "/" and len(t.args) == 2:
            return Restriction(expr_from_term(t.args[0]), expr_from_term(t.args[1]))
        if t.functor == "@" and len(t.args) == 1:
            return Encapsulation(expr_from_term(t.args[0]))
        if t.functor == "<>" and len(t.args) == 2 and isinstance(t.args[0], Atom):
            marker = t.args[0].name
            rhs = t.args[1]
            if marker == "/":
                if not (isinstance(rhs, Struct) and rhs.functor == ","
                        and len(rhs.args) == 2):
                    raise ExpressionError(
                        "restriction reduce needs (Expression, IdentifierList)")
                base = expr_from_term(rhs.args[0])
                items, tail = list_items(rhs.args[1])
                if not (isinstance(tail, Atom) and tail.name == "[]"):
                    raise ExpressionError("identifier list must be a proper list")
                return ReduceRestrict(base, tuple(expr_from_term(i) for i in items))
            if marker in ("+", "*"):
                items, tail = list_items(rhs)
                if not (isinstance(tail, Atom) and tail.name == "[]"):
                    raise ExpressionError("expression list must be a proper list")
                return ReduceOp(marker, tuple(expr_from_term(i) for i in items))
    raise ExpressionError(f"not a composition expression: {syntax.to_text(t)}")


def expr_to_term(e: ProgramExpression) -> Term:
    if isinstance(e, Id):
        return e.pid.to_term()
    if isinstance(e, CurrentContext):
        return Atom(syntax.CURRENT_CONTEXT_NAME)
    if isinstance(e, EmptyProgram):
        return Atom("empty")
    if isinstance(e, Union):
        return Struct("+", (expr_to_term(e.left), expr_to_term(e.right)))
    if isinstance(e, Intersection):
        return Struct("*", (expr_to_term(e.left), expr_to_term(e.right)))
    if isinstance(e, Restriction):
        return Struct("/", (expr_to_term(e.expr), expr_to_term(e.prog)))
    if isinstance(e, Encapsulation):
        return Struct("@", (expr_to_term(e.expr),))
    if isinstance(e, ReduceRestrict):
        ids = make_list([expr_to_term(p) for p in e.progs])
        return Struct("<>", (Atom("/"), Struct(",", (expr_to_term(e.expr), ids))))
    if isinstance(e, ReduceOp):
        return Struct("<>", (Atom(e.op), make_list([expr_to_term(x) for x in e.exprs])))
    raise TypeError(f"not an expression: {e!r}")


def expr_text(e: ProgramExpression) -> str:
    return syntax.to_text(expr_to_term(e))


def validate_expression_term(t: Term) -> None:
    """Parse-time shape check for a context term; variables are allowed
    anywhere an identifier could later appear."""
    if isinstance(t, (Var, Str)):
        return
    if isinstance(t, Atom):
        if t.name in ("empty", syntax.CURRENT_CONTEXT_NAME):
            return
        raise ExpressionError(f"not a composition expression: {syntax.to_text(t)}")
    if isinstance(t, Struct):
        if t.functor == "lw" and len(t.args) == 2:
            return
        if t.functor in ("+", "*", "/") and len(t.args) == 2:
            validate_expression_term(t.args[0])
            validate_expression_term(t.args[1])
            return
        if t.functor == "@" and len(t.args) == 1:
            validate_expression_term(t.args[0])
            return
        if t.functor == "<>" and len(t.args) == 2:
            return
    raise ExpressionError(f"not a composition expression: {syntax.to_text(t)}")


# ---------------------------------------------------------------- clauses

RESERVED_HEADS = {",", ";", "->", ":-", "#>", ":", "!", "true", "fail", "false"}


def goal_from_term(t: Term) -> Goal:
    if isinstance(t, Atom) and t.name == "true":
        return TRUE
    if isinstance(t, Struct) and t.functor == "," and len(t.args) == 2:
        return Conj(goal_from_term(t.args[0]), goal_from_term(t.args[1]))
    if isinstance(t, Struct) and t.functor == "#>" and len(t.args) == 2:
        validate_expression_term(t.args[0])
        return ContextSwitch(t.args[0], goal_from_term(t.args[1]))
    return Call(t)


def goal_to_term(g: Goal) -> Term:
    if isinstance(g, TrueGoal):
        return Atom("true")
    if isinstance(g, Call):
        return g.term
    if isinstance(g, Conj):
        return Struct(",", (goal_to_term(g.left), goal_to_term(g.right)))
    if isinstance(g, ContextSwitch):
        return Struct("#>", (g.expr, goal_to_term(g.goal)))
    raise TypeError(f"not a goal: {g!r}")


def clause_from_term(t: Term) -> Clause:
    if isinstance(t, Struct) and t.functor == ":-" and len(t.args) == 2:
        head, body = t.args
    else:
        head, body = t, Atom("true")
    key = None
    if isinstance(head, Atom):
        key = head.name
    elif isinstance(head, Struct):
        key = head.functor
    if key is None or key in RESERVED_HEADS:
        raise ExpressionError(f"illegal clause head: {syntax.to_text(head)}")
    return Clause(head, goal_from_term(body))


def clause_to_term(c: Clause) -> Term:
    if isinstance(c.body, TrueGoal):
        return c.head
    return Struct(":-", (c.head, goal_to_term(c.body)))


def clause_text(c: Clause) -> str:
    return syntax.to_text(clause_to_term(c)) + "."


def parse_program(text: str) -> list[Clause]:
    """Clause list from program text; raises ParseError/ExpressionError."""
    return [clause_from_term(t) for t in syntax.parse_clause_terms(text)]


def parse_goal(text: str) -> tuple[Goal, dict[str, Var]]:
    t, varmap = syntax.parse_term_text(text)
    return goal_from_term(t), varmap


def rename_clause(c: Clause) -> Clause:
    """Fresh-variable copy; head and body keep their shared variables."""
    mapping: dict[int, Var] = {}
    head = rename_apart(c.head, mapping)

    def go(g: Goal) -> Goal:
        if isinstance(g, TrueGoal):
            return g
        if isinstance(g, Call):
            return Call(rename_apart(g.term, mapping))
        if isinstance(g, Conj):
            return Conj(go(g.left), go(g.right))
        if isinstance(g, ContextSwitch):
            return ContextSwitch(rename_apart(g.expr, mapping), go(g.goal))
        raise TypeError(f"not a goal: {g!r}")

    return Clause(head, go(c.body))


# ---------------------------------------------------------------- the store

@dataclass
class LWProgram:
    id: ProgramId
    clauses: list[Clause]
    meta: dict = field(default_factory=dict)

    def defines(self, name: str, arity: int) -> bool:
        for c in self.clauses:
            if isinstance(c.head, Atom) and arity == 0 and c.head.name == name:
                return True
            if (isinstance(c.head, Struct) and c.head.functor == name
                    and len(c.head.args) == arity):
                return True
        return False


class ProgramStore:
    """Downloaded programs, keyed by identifier. Grows monotonically during
    evaluation; removal happens only through explicit administration."""

    def __init__(self):
        self._programs: dict[ProgramId, LWProgram] = {}

    def __contains__(self, pid: ProgramId) -> bool:
        return pid in self._programs

    def __len__(self) -> int:
        return len(self._programs)

    def get(self, pid: ProgramId) -> Optional[LWProgram]:
        return self._programs.get(pid)

    def install(self, program: LWProgram) -> None:
        """Idempotent: an already-present id keeps its stored program."""
        self._programs.setdefault(program.id, program)

    def remove(self, pid: ProgramId) -> None:
        self._programs.pop(pid, None)

    def ids(self) -> frozenset[ProgramId]:
        return frozenset(self._programs)

    def programs(self) -> Iterator[LWProgram]:
        return iter(self._programs.values())

"""First-order terms, substitutions, and unification.

Terms are immutable. Variables are identified by a globally unique integer
id; the name is kept only for display. Substitutions are triangular: a
binding may map a variable to a term that itself contains bound variables,
and `apply` dereferences all the way down.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional

_var_ids = itertools.count(1)


def fresh_var_id() -> int:
    # next() on a count is atomic under CPython, good enough for our needs
    return next(_var_ids)


class Term:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Var(Term):
    name: str
    id: int


@dataclass(frozen=True, slots=True)
class Atom(Term):
    name: str


@dataclass(frozen=True, slots=True)
class Num(Term):
    value: int | float


@dataclass(frozen=True, slots=True)
class Str(Term):
    value: str


@dataclass(frozen=True, slots=True)
class Struct(Term):
    functor: str
    args: tuple[Term, ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError("compound term needs at least one argument")


TRUE_ATOM = Atom("true")
NIL = Atom("[]")


def fresh_var(name: str = "_G") -> Var:
    return Var(name, fresh_var_id())


def struct(functor: str, *args: Term) -> Struct:
    return Struct(functor, tuple(args))


def make_list(items, tail: Term = NIL) -> Term:
    """Build a cons-cell list term from a Python sequence."""
    out = tail
    for item in reversed(list(items)):
        out = Struct(".", (item, out))
    return out


def list_items(t: Term, subst: "Substitution | None" = None) -> tuple[list[Term], Term]:
    """Decompose a list term into (items, tail); tail is [] for proper lists."""
    items = []
    walk = subst.walk if subst is not None else (lambda x: x)
    t = walk(t)
    while isinstance(t, Struct) and t.functor == "." and len(t.args) == 2:
        items.append(t.args[0])
        t = walk(t.args[1])
    return items, t


def functor_of(t: Term) -> tuple[str, int] | None:
    """(name, arity) for atoms and compounds, None for everything else."""
    if isinstance(t, Atom):
        return (t.name, 0)
    if isinstance(t, Struct):
        return (t.functor, len(t.args))
    return None


class Substitution:
    """Immutable mapping from variable ids to terms.

    Kept triangular internally; `apply` chases chains to a fixpoint, so a
    term returned by `apply` contains no variable bound in the substitution.
    """

    __slots__ = ("_b",)

    def __init__(self, bindings: dict[int, Term] | None = None):
        self._b: dict[int, Term] = bindings or {}

    def __len__(self) -> int:
        return len(self._b)

    def __bool__(self) -> bool:
        return bool(self._b)

    def __contains__(self, v: Var) -> bool:
        return v.id in self._b

    def __eq__(self, other) -> bool:
        return isinstance(other, Substitution) and self._b == other._b

    def __repr__(self) -> str:
        return f"Substitution({self._b!r})"

    def items(self) -> Iterator[tuple[int, Term]]:
        return iter(self._b.items())

    def lookup(self, v: Var) -> Optional[Term]:
        return self._b.get(v.id)

    def bind(self, v: Var, t: Term) -> "Substitution":
        if isinstance(t, Var) and t.id == v.id:
            return self
        b = dict(self._b)
        b[v.id] = t
        return Substitution(b)

    def walk(self, t: Term) -> Term:
        """Shallow dereference: chase variable bindings at the top only."""
        while isinstance(t, Var):
            bound = self._b.get(t.id)
            if bound is None:
                return t
            t = bound
        return t

    def apply(self, t: Term) -> Term:
        """Full dereference; any variable left in the result is unbound here."""
        t = self.walk(t)
        if isinstance(t, Struct):
            return Struct(t.functor, tuple(self.apply(a) for a in t.args))
        return t

    def compose(self, other: "Substitution") -> "Substitution":
        """s1.compose(s2): applying the result equals apply s1, then s2."""
        b: dict[int, Term] = {}
        for vid, t in self._b.items():
            resolved = other.apply(t)
            if isinstance(resolved, Var) and resolved.id == vid:
                continue
            b[vid] = resolved
        for vid, t in other._b.items():
            if vid not in self._b:
                b[vid] = t
        return Substitution(b)

    def project(self, variables) -> dict[str, Term]:
        """Answer bindings for the given Vars, keyed by display name."""
        return {v.name: self.apply(v) for v in variables}


EMPTY_SUBST = Substitution()


def occurs_in(vid: int, t: Term, s: Substitution) -> bool:
    stack = [t]
    while stack:
        cur = s.walk(stack.pop())
        if isinstance(cur, Var):
            if cur.id == vid:
                return True
        elif isinstance(cur, Struct):
            stack.extend(cur.args)
    return False


def unify(t1: Term, t2: Term, subst: Substitution | None = None,
          occurs_check: bool = True) -> Optional[Substitution]:
    """Most general unifier extending `subst`, or None.

    With occurs_check on (the default) the result never contains a cyclic
    binding. Turning it off is a speed hack; applying a substitution built
    from genuinely cyclic input will not terminate.
    """
    s = subst if subst is not None else EMPTY_SUBST
    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        a = s.walk(a)
        b = s.walk(b)
        if a is b:
            continue
        if isinstance(a, Var):
            if isinstance(b, Var) and a.id == b.id:
                continue
            if occurs_check and occurs_in(a.id, b, s):
                return None
            s = s.bind(a, b)
        elif isinstance(b, Var):
            if occurs_check and occurs_in(b.id, a, s):
                return None
            s = s.bind(b, a)
        elif isinstance(a, Atom) and isinstance(b, Atom):
            if a.name != b.name:
                return None
        elif isinstance(a, Num) and isinstance(b, Num):
            if a.value != b.value or type(a.value) is not type(b.value):
                return None
        elif isinstance(a, Str) and isinstance(b, Str):
            if a.value != b.value:
                return None
        elif isinstance(a, Struct) and isinstance(b, Struct):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return None
            stack.extend(zip(a.args, b.args))
        else:
            return None
    return s


def rename_apart(t: Term, mapping: dict[int, Var] | None = None) -> Term:
    """Copy with fresh variables. Shared variables stay shared; passing the
    same mapping across calls extends the sharing to sibling terms."""
    if mapping is None:
        mapping = {}

    def go(u: Term) -> Term:
        if isinstance(u, Var):
            got = mapping.get(u.id)
            if got is None:
                got = Var(u.name, fresh_var_id())
                mapping[u.id] = got
            return got
        if isinstance(u, Struct):
            return Struct(u.functor, tuple(go(a) for a in u.args))
        return u

    return go(t)


def variant(t1: Term, t2: Term) -> bool:
    """True when the terms are equal up to a bijective renaming of variables."""
    fwd: dict[int, int] = {}
    bwd: dict[int, int] = {}
    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        if isinstance(a, Var) and isinstance(b, Var):
            if fwd.setdefault(a.id, b.id) != b.id:
                return False
            if bwd.setdefault(b.id, a.id) != a.id:
                return False
        elif isinstance(a, Struct) and isinstance(b, Struct):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return False
            stack.extend(zip(a.args, b.args))
        elif type(a) is not type(b) or a != b:
            return False
    return True


def term_variables(t: Term) -> list[Var]:
    """Variables in left-to-right first-occurrence order."""
    seen: dict[int, Var] = {}
    order: list[Var] = []

    def go(u: Term):
        if isinstance(u, Var):
            if u.id not in seen:
                seen[u.id] = u
                order.append(u)
        elif isinstance(u, Struct):
            for a in u.args:
                go(a)

    go(t)
    return order

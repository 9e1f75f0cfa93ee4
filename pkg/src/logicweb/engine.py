"""Goal evaluation over composed web programs.

Depth-first, leftmost-goal resolution with chronological backtracking over
textual clause order, implemented as nested generators of substitutions.
Context switching downloads the programs a goal is about to run against,
vets the non-policy ones against every active policy, and extends the
policy set so the new programs' own policies travel with the derivation.
System calls are routed through the policy programs; with no policies
active (a policy's own code, or security switched off) they run directly
against the built-in table.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional

from . import builtins as bi
from .fetching import FetchConfig, add_programs
from .guards import EngineHooks
from .model import (Call, Clause, Conj, ContextSwitch, CurrentContext,
                    EmptyProgram, Encapsulation, ExpressionError, Goal, Id,
                    Intersection, LWProgram, ProgramExpression, ProgramId,
                    ProgramStore, ReduceOp, ReduceRestrict, Restriction,
                    TRUE, TrueGoal, Union, expids, expr_from_term, expr_text,
                    goal_from_term, insert_current_context, parse_goal,
                    rename_clause)
from .security import AuditLog, PolicyRegistry
from .terms import (Atom, EMPTY_SUBST, Str, Struct, Substitution, Term, Var,
                    functor_of, unify)

EMPTY_CONTEXT = EmptyProgram()

PolicySet = tuple[ProgramId, ...]      # newest first; the last entry belongs
                                       # to the query's main program


class EngineError(Exception):
    pass


@dataclass
class EngineConfig:
    security_enabled: bool = True
    occurs_check: bool = True
    max_solutions: Optional[int] = None


@dataclass(frozen=True)
class Solution:
    subst: Substitution
    store: ProgramStore


class Barrier:
    """Cut barrier for one clause body."""
    __slots__ = ("cut",)

    def __init__(self):
        self.cut = False


class Session:
    """Everything one interpreter instance owns: store, registry, fetch
    setup, audit trail, guard hooks, and open streams."""

    def __init__(self, registry: PolicyRegistry,
                 fetch_config: FetchConfig | None = None,
                 config: EngineConfig | None = None,
                 hooks: EngineHooks | None = None):
        self.registry = registry
        self.fetch_config = fetch_config or FetchConfig()
        self.config = config or EngineConfig()
        self.store = ProgramStore()
        self.audit = AuditLog()
        self.hooks = hooks or EngineHooks()
        self.streams: dict[int, object] = {}
        self._stream_ids = itertools.count(0)
        self.engine = Engine(self)

    def new_stream(self, handle) -> int:
        n = next(self._stream_ids)
        self.streams[n] = handle
        return n

    def install_local(self, program: LWProgram,
                      policy: ProgramId | None = None) -> None:
        """Place a program in the store without fetching, assigning it a
        policy the way a download would."""
        self.store.install(program)
        if self.registry.is_policy(program.id):
            return
        self.registry.program_to_policy.setdefault(
            program.id, policy or self.registry.default_policy)

    def run_query(self, main: ProgramId, goal: Goal) -> Iterator[Solution]:
        """Evaluate `goal` against the program at `main`, the way a browser
        session would: no policies yet, empty starting context."""
        wrapped = ContextSwitch(main.to_term(), goal)
        count = 0
        for s in self.engine.solve((), EMPTY_CONTEXT, wrapped):
            yield Solution(s, self.store)
            count += 1
            if self.config.max_solutions is not None and count >= self.config.max_solutions:
                return

    def query_text(self, main_url: str, goal_text: str):
        """(solutions iterator, query variable map) for a textual goal."""
        goal, varmap = parse_goal(goal_text)
        return self.run_query(ProgramId.get(main_url), goal), varmap


class Engine:
    def __init__(self, session: Session):
        self.session = session

    @property
    def config(self) -> EngineConfig:
        return self.session.config

    @property
    def store(self) -> ProgramStore:
        return self.session.store

    @property
    def registry(self) -> PolicyRegistry:
        return self.session.registry

    # ------------------------------------------------------------- solve

    def solve(self, sigma: PolicySet, ctx: ProgramExpression, goal: Goal,
              s: Substitution = EMPTY_SUBST,
              chain: tuple[ProgramExpression, ...] | None = None,
              barrier: Barrier | None = None) -> Iterator[Substitution]:
        if chain is None:
            chain = (EMPTY_CONTEXT,)
        if barrier is None:
            barrier = Barrier()
        if isinstance(goal, TrueGoal):
            yield s
        elif isinstance(goal, Conj):
            for s1 in self.solve(sigma, ctx, goal.left, s, chain, barrier):
                yield from self.solve(sigma, ctx, goal.right, s1, chain, barrier)
                if barrier.cut:
                    return
        elif isinstance(goal, ContextSwitch):
            yield from self._switch_term(sigma, ctx, goal.expr, goal.goal, s,
                                         chain, barrier)
        elif isinstance(goal, Call):
            yield from self._call(sigma, ctx, goal.term, s, chain, barrier)
        else:
            raise EngineError(f"unknown goal node: {goal!r}")

    # ------------------------------------------------------------- calls

    def _call(self, sigma, ctx, term: Term, s, chain, barrier):
        t = s.walk(term)
        if isinstance(t, Var):
            raise EngineError("goal is an unbound variable")
        if isinstance(t, Atom):
            if t.name == "true":
                yield s
                return
            if t.name in ("fail", "false"):
                return
            if t.name == "!":
                yield s
                barrier.cut = True
                return
        if isinstance(t, Struct):
            if t.functor == "," and len(t.args) == 2:
                yield from self.solve(sigma, ctx,
                                      Conj(Call(t.args[0]), Call(t.args[1])),
                                      s, chain, barrier)
                return
            if t.functor == ";" and len(t.args) == 2:
                yield from self._disjunction(sigma, ctx, t, s, chain, barrier)
                return
            if t.functor == "->" and len(t.args) == 2:
                yield from self._if_then_else(sigma, ctx, t.args[0], t.args[1],
                                              None, s, chain, barrier)
                return
            if t.functor == "#>" and len(t.args) == 2:
                yield from self._switch_term(sigma, ctx, t.args[0],
                                             goal_from_term(t.args[1]), s,
                                             chain, barrier)
                return
            if (t.functor == ":" and len(t.args) == 2
                    and isinstance(t.args[0], Atom)
                    and t.args[0].name == "built_ins"):
                yield from self._builtin_qualified(sigma, ctx, t.args[1], s, chain)
                # fall through: a page could, pointlessly, define ':'/2 clauses
        if not isinstance(t, (Atom, Struct)):
            raise EngineError(f"goal is not callable: {t!r}")

        if bi.lookup(t) is not None:
            yield from self._system_call(sigma, ctx, t, s, chain)
        yield from self._user_call(sigma, ctx, t, s, chain)

    def _disjunction(self, sigma, ctx, t, s, chain, barrier):
        lhs, rhs = t.args
        lhs_w = s.walk(lhs)
        if isinstance(lhs_w, Struct) and lhs_w.functor == "->" and len(lhs_w.args) == 2:
            yield from self._if_then_else(sigma, ctx, lhs_w.args[0], lhs_w.args[1],
                                          rhs, s, chain, barrier)
            return
        yield from self.solve(sigma, ctx, goal_from_term(lhs), s, chain, barrier)
        if barrier.cut:
            return
        yield from self.solve(sigma, ctx, goal_from_term(rhs), s, chain, barrier)

    def _if_then_else(self, sigma, ctx, cond, then, els, s, chain, barrier):
        committed = None
        for s1 in self.solve(sigma, ctx, goal_from_term(cond), s, chain, Barrier()):
            committed = s1
            break
        if committed is not None:
            yield from self.solve(sigma, ctx, goal_from_term(then), committed,
                                  chain, barrier)
        elif els is not None:
            yield from self.solve(sigma, ctx, goal_from_term(els), s, chain, barrier)

    def _user_call(self, sigma, ctx, t, s, chain):
        # The ancestor stack must mirror the live call path, so the goal is
        # popped while a solution is handed upward (the continuation is not
        # beneath it) and pushed back when backtracking resumes here.
        hooks = self.session.hooks
        token = hooks.enter_goal(ctx, s.apply(t))
        try:
            inner = Barrier()
            for s1, _head, body in self.select_clause(sigma, ctx, t, s, chain):
                for s2 in self.solve(sigma, ctx, body, s1, chain, inner):
                    hooks.exit_goal(token)
                    yield s2
                    token = hooks.enter_goal(ctx, s.apply(t))
                if inner.cut:
                    break
        finally:
            hooks.exit_goal(token)

    # ------------------------------------------------------------- clause choice

    def select_clause(self, sigma, e: ProgramExpression, goal: Term,
                      s: Substitution = EMPTY_SUBST,
                      chain: tuple[ProgramExpression, ...] = (EMPTY_CONTEXT,)
                      ) -> Iterator[tuple[Substitution, Term, Goal]]:
        """Clauses of the composition `e` whose head unifies with `goal`,
        as (extended substitution, renamed head, body) triples."""
        if isinstance(e, EmptyProgram):
            return
        if isinstance(e, Id):
            program = self.store.get(e.pid)
            if program is None:
                return
            for clause in tuple(program.clauses):
                renamed = rename_clause(clause)
                s1 = unify(goal, renamed.head, s,
                           occurs_check=self.config.occurs_check)
                if s1 is None:
                    continue
                self.session.hooks.on_clause_applied()
                yield s1, renamed.head, renamed.body
        elif isinstance(e, Union):
            yield from self.select_clause(sigma, e.left, goal, s, chain)
            yield from self.select_clause(sigma, e.right, goal, s, chain)
        elif isinstance(e, Intersection):
            for s1, h1, b1 in self.select_clause(sigma, e.left, goal, s, chain):
                for s2, _h2, b2 in self.select_clause(sigma, e.right, goal, s1, chain):
                    yield s2, h1, Conj(b1, b2)
        elif isinstance(e, Restriction):
            assert isinstance(e.prog, Id)
            for s1, h1, b1 in self.select_clause(sigma, e.expr, goal, s, chain):
                if not self._defined_in(h1, e.prog.pid):
                    yield s1, h1, b1
        elif isinstance(e, Encapsulation):
            for s1 in self.solve(sigma, e.expr, Call(goal), s, chain, Barrier()):
                yield s1, s1.apply(goal), TRUE
        elif isinstance(e, ReduceRestrict):
            folded = e.expr
            for p in e.progs:
                folded = Restriction(folded, p)
            yield from self.select_clause(sigma, folded, goal, s, chain)
        elif isinstance(e, ReduceOp):
            folded = e.exprs[0]
            for nxt in e.exprs[1:]:
                folded = (Union(folded, nxt) if e.op == "+"
                          else Intersection(folded, nxt))
            yield from self.select_clause(sigma, folded, goal, s, chain)
        elif isinstance(e, CurrentContext):
            raise EngineError("context marker survived into clause selection")
        else:
            raise EngineError(f"unknown expression node: {e!r}")

    def _defined_in(self, head: Term, pid: ProgramId) -> bool:
        program = self.store.get(pid)
        if program is None:
            return False
        key = functor_of(head)
        return key is not None and program.defines(*key)

    # ------------------------------------------------------------- switching

    def _switch_term(self, sigma, ctx, expr_term: Term, goal: Goal, s, chain,
                     barrier):
        resolved = s.apply(expr_term)
        try:
            f_expr = expr_from_term(resolved)
        except ExpressionError as exc:
            raise EngineError(str(exc)) from exc
        yield from self.context_switch(sigma, ctx, f_expr, goal, s, chain, barrier)

    def context_switch(self, sigma: PolicySet, ctx: ProgramExpression,
                       f: ProgramExpression, goal: Goal,
                       s: Substitution = EMPTY_SUBST,
                       chain: tuple[ProgramExpression, ...] = (EMPTY_CONTEXT,),
                       barrier: Barrier | None = None) -> Iterator[Substitution]:
        """Move the derivation into the composition `f` (with the context
        marker already standing for `ctx`), after vetting and downloading
        the programs involved."""
        if barrier is None:
            barrier = Barrier()
        f_prime = insert_current_context(f, ctx)
        ids = expids(f_prime)
        ordered = sorted(ids, key=ProgramId.sort_key)
        new_ids = [p for p in ordered if not self.registry.is_policy(p)]

        if self.config.security_enabled and sigma and new_ids:
            if not self._programs_allowed(sigma, new_ids):
                return

        if not add_programs(self.session, ids, chain, sigma):
            return

        if self.config.security_enabled:
            fresh = []
            for pid in new_ids:
                pol = self.registry.pol(pid)
                if pol not in fresh and pol not in sigma:
                    fresh.append(pol)
            new_sigma: PolicySet = tuple(fresh) + tuple(sigma)
        else:
            new_sigma = ()

        new_chain = chain + (f_prime,)
        self.session.audit.emit("switch", "context switch", new_chain, new_sigma)
        yield from self.solve(new_sigma, f_prime, goal, s, new_chain, barrier)

    def _programs_allowed(self, sigma: PolicySet, pids: list[ProgramId]) -> bool:
        """Every active policy must accept every new program id. Evaluated
        as one conjunction inside the intersection of the encapsulated
        policies; any bindings it makes are discarded."""
        goal: Goal = TRUE
        for pid in reversed(pids):
            check = Call(Struct("valid_program", (pid.method_term(), Str(pid.url))))
            goal = check if isinstance(goal, TrueGoal) else Conj(check, goal)
        return self._prove_isolated(self._policy_intersection(sigma), goal)

    def _policy_intersection(self, sigma: PolicySet) -> ProgramExpression:
        return ReduceOp("*", tuple(Encapsulation(Id(p)) for p in sigma))

    def _prove_isolated(self, expr: ProgramExpression, goal: Goal) -> bool:
        """One solution of `expr #> goal` from a pristine derivation state
        (no policies, empty context, fresh chain)."""
        for _ in self.context_switch((), EMPTY_CONTEXT, expr, goal,
                                     EMPTY_SUBST, (EMPTY_CONTEXT,)):
            return True
        return False

    # ------------------------------------------------------------- system calls

    def _system_call(self, sigma, ctx, t: Term, s, chain):
        g = s.apply(t)
        if sigma:
            check = Call(Struct("valid_systemCall", (g,)))
            if not self._prove_isolated(self._policy_intersection(sigma), check):
                return
            self.session.audit.emit("syscall", syntax_text(g), chain, sigma)
            main_policy = sigma[-1]
            run = Call(Struct("call_system", (g,)))
            for s_inner in self.context_switch((), EMPTY_CONTEXT, Id(main_policy),
                                               run, EMPTY_SUBST, (EMPTY_CONTEXT,)):
                yield s.compose(s_inner)
        else:
            self.session.audit.emit("syscall", syntax_text(g), chain, sigma)
            rt = bi.BuiltinCall(self.session, ctx)
            for delta in bi.call_builtin(g, rt):
                yield s.compose(delta)

    def _builtin_qualified(self, sigma, ctx, inner_term: Term, s, chain):
        """`built_ins:G` runs the built-in directly. Only derivations with
        no active policies get that shortcut, which in a secured session
        means policy code itself (policies always evaluate from an empty
        policy set) and nothing downloaded."""
        if sigma:
            return
        g = s.apply(inner_term)
        target = g
        if isinstance(g, Struct) and g.functor == "call_builtin" and len(g.args) == 1:
            target = g.args[0]
        elif isinstance(g, Struct) and g.functor == "builtin" and len(g.args) == 1:
            if bi.lookup(g.args[0]) is not None:
                yield s
            return
        self.session.audit.emit("syscall", syntax_text(target), chain, sigma)
        rt = bi.BuiltinCall(self.session, ctx)
        for delta in bi.call_builtin(target, rt):
            yield s.compose(delta)


def syntax_text(t: Term) -> str:
    from . import syntax
    return syntax.to_text(t)


def solutions(session: Session, main_url: str, goal_text: str,
              limit: int | None = None) -> list[dict[str, Term]]:
    """Convenience: answer bindings for the goal's variables, in order."""
    stream, varmap = session.query_text(main_url, goal_text)
    qvars = list(varmap.values())
    out = []
    for sol in stream:
        out.append({v.name: sol.subst.apply(v) for v in qvars})
        if limit is not None and len(out) >= limit:
            break
    return out

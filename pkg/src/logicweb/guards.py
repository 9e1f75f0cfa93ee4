"""Resource limits layered over the evaluator through engine hooks.

The engine reports goal entry/exit, clause applications, and program
installs; a Guard keeps an ancestor stack and counters and aborts the
derivation with GuardTermination when a bound is crossed. Aborts unwind
the generator stack, so answers already produced stay valid and the
session remains usable afterwards.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .terms import Term, rename_apart, variant

LOOP_FOUND = "loop_found"
DEPTH_EXCEEDED = "depth_exceeded"
PROGRAM_COUNT_EXCEEDED = "program_count_exceeded"
CLAUSE_COUNT_EXCEEDED = "clause_count_exceeded"
TIMED_OUT = "timed_out"

MESSAGES = {
    LOOP_FOUND: "loop found",
    DEPTH_EXCEEDED: "maximum recursion depth exceeded",
    PROGRAM_COUNT_EXCEEDED: "maximum LogicWeb program count exceeded",
    CLAUSE_COUNT_EXCEEDED: "maximum clause count exceeded",
    TIMED_OUT: "time limit exceeded",
}


class GuardTermination(Exception):
    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason
        self.message = message


class EngineHooks:
    """Do-nothing hook set; the engine calls these at its checkpoints."""

    def start(self) -> None:
        pass

    def enter_goal(self, ctx, goal: Term) -> int:
        return 0

    def exit_goal(self, token: int) -> None:
        pass

    def on_clause_applied(self) -> None:
        pass

    def on_program_created(self, pid) -> None:
        pass

    def check_now(self) -> None:
        pass


@dataclass
class GuardConfig:
    max_depth: Optional[int] = 40
    loop_check: bool = True
    max_clauses: Optional[int] = 500
    max_programs: Optional[int] = 100
    timeout_ms: Optional[int] = None
    # a cap on context size catches the loops the ancestor check cannot,
    # where the context keeps growing; off unless set
    max_context_size: Optional[int] = None


def context_size(ctx) -> int:
    """Number of leaves (program ids and markers) in a context expression."""
    from .model import (Encapsulation, Intersection, ReduceOp, ReduceRestrict,
                        Restriction, Union)
    if isinstance(ctx, (Union, Intersection)):
        return context_size(ctx.left) + context_size(ctx.right)
    if isinstance(ctx, Restriction):
        return context_size(ctx.expr) + context_size(ctx.prog)
    if isinstance(ctx, Encapsulation):
        return context_size(ctx.expr)
    if isinstance(ctx, ReduceRestrict):
        return context_size(ctx.expr) + sum(context_size(p) for p in ctx.progs)
    if isinstance(ctx, ReduceOp):
        return sum(context_size(e) for e in ctx.exprs)
    return 1


class Guard(EngineHooks):
    def __init__(self, config: GuardConfig | None = None,
                 clock: Callable[[], float] = time.monotonic):
        self.config = config or GuardConfig()
        self.clock = clock
        self.ancestors: list[tuple[object, Term]] = []
        self.clauses_applied = 0
        self.programs_created = 0
        self.deadline: Optional[float] = None

    @property
    def depth(self) -> int:
        return len(self.ancestors)

    def start(self) -> None:
        """Reset the per-query state. The program count is per session and
        survives across queries; the clause count does not."""
        self.ancestors.clear()
        self.clauses_applied = 0
        self.deadline = None
        if self.config.timeout_ms is not None:
            self.deadline = self.clock() + self.config.timeout_ms / 1000.0

    def check_now(self) -> None:
        if self.deadline is not None and self.clock() > self.deadline:
            self._stop(TIMED_OUT)

    def enter_goal(self, ctx, goal: Term) -> int:
        self.check_now()
        if self.config.loop_check and check_loop(self.ancestors, ctx, goal):
            self._stop(LOOP_FOUND)
        if (self.config.max_context_size is not None
                and context_size(ctx) > self.config.max_context_size):
            self._stop(LOOP_FOUND)
        token = len(self.ancestors)
        self.ancestors.append((ctx, rename_apart(goal)))
        if (self.config.max_depth is not None
                and len(self.ancestors) > self.config.max_depth):
            self._stop(DEPTH_EXCEEDED)
        return token

    def exit_goal(self, token: int) -> None:
        # Also sheds frames left behind by abandoned branches.
        del self.ancestors[token:]

    def on_clause_applied(self) -> None:
        self.check_now()
        self.clauses_applied += 1
        if (self.config.max_clauses is not None
                and self.clauses_applied > self.config.max_clauses):
            self._stop(CLAUSE_COUNT_EXCEEDED)

    def on_program_created(self, pid) -> None:
        self.check_now()
        self.programs_created += 1
        if (self.config.max_programs is not None
                and self.programs_created > self.config.max_programs):
            self._stop(PROGRAM_COUNT_EXCEEDED)

    def _stop(self, reason: str) -> None:
        raise GuardTermination(reason, MESSAGES[reason])


def check_loop(ancestors, ctx, goal: Term) -> bool:
    """True when some ancestor ran a variant of this goal in a structurally
    equal context."""
    return any(prev_ctx == ctx and variant(prev_goal, goal)
               for prev_ctx, prev_goal in ancestors)


@dataclass
class GuardOutcome:
    solutions: list = field(default_factory=list)
    termination: GuardTermination | None = None

    @property
    def terminated(self) -> bool:
        return self.termination is not None


def guarded_solve(session, main, goal, limit: int | None = None) -> GuardOutcome:
    """Run a query to completion or to the first guard abort, keeping
    whatever answers arrived first."""
    session.hooks.start()
    outcome = GuardOutcome()
    try:
        for sol in session.run_query(main, goal):
            outcome.solutions.append(sol)
            if limit is not None and len(outcome.solutions) >= limit:
                break
    except GuardTermination as exc:
        outcome.termination = exc
        session.audit.emit("notice", f"query aborted: {exc.message}")
    return outcome

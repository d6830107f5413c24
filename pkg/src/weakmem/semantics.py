"""Small-step semantics of commands and processes."""

from __future__ import annotations

import logging
from functools import lru_cache
from typing import Optional

from .expr import EvalError, evaluate, free_vars, overlap
from .reorder import Architecture, may_promote
from .syntax import (
    SKIP,
    Atomic,
    AtomicPending,
    Binop,
    Choice,
    Command,
    Fence,
    FenceObs,
    Glob,
    Guard,
    GuardResidual,
    Lit,
    Load,
    Prefix,
    Process,
    Reg,
    Shift,
    Skip,
    Step,
    Store,
    Tagged,
    Tau,
    TAU,
    TruePrefix,
    Update,
    While,
    neg,
    seq_compose,
)

log = logging.getLogger(__name__)

BOUND_HIT = "bound-hit"


class UndeclaredLocal(Exception):
    pass


def unfold(w: While, default_budget: int) -> tuple[Command, bool]:
    """One unfolding of a loop.  The flag is set when the budget is exhausted."""
    k = default_budget if w.budget is None else w.budget
    exit_branch = Prefix(Guard(neg(w.cond)), w.cont)
    if k <= 0:
        return exit_branch, True
    again = While(w.cond, w.body, w.cont, k - 1)
    return Choice(Prefix(Guard(w.cond), seq_compose(w.body, again)), exit_branch), False


def command_steps(arch: Architecture, c: Command, budget: int = 2) -> tuple[Step, ...]:
    """All transitions of ``c``.  Labels are actions or ``Tau``."""
    return _command_steps(arch, c, budget)


@lru_cache(maxsize=1 << 17)
def _command_steps(arch: Architecture, c: Command, budget: int) -> tuple[Step, ...]:
    match c:
        case Skip():
            return ()
        case TruePrefix(a, rest):
            return (Step(a, rest, "prefix"),)
        case Choice(left, right):
            return (Step(TAU, left, "choice"), Step(TAU, right, "choice"))
        case While():
            nxt, exhausted = unfold(c, budget)
            meta = (BOUND_HIT,) if exhausted else ()
            return (Step(TAU, nxt, "unfold", meta),)
        case Prefix(a, rest):
            out = [Step(a, rest, "prefix")]
            for st in _command_steps(arch, rest, budget):
                if isinstance(st.label, Tau):
                    out.append(Step(st.label, Prefix(a, st.next), st.rule, st.meta))
                    continue
                promoted = may_promote(arch, a, st.label)
                if promoted is not None:
                    out.append(Step(promoted, Prefix(a, st.next), "reorder", st.meta))
                elif arch.load_speculation and _speculates(a, st.label):
                    check = Guard(Binop("=", a.target, st.label.target))
                    out.append(Step(st.label, Prefix(a, Prefix(check, st.next)), "load-spec", st.meta))
                if arch.write_elimination and _eliminates(a, st.label):
                    out.append(Step(st.label, st.next, "write-elim", st.meta))
            return tuple(out)
    raise TypeError(f"not a command: {c!r}")


def _speculates(a, b) -> bool:
    # r1 := [n]x ; ... r2 := x  lets the second load go first, checked later
    if not (isinstance(a, Update) and isinstance(a.target, Reg) and isinstance(a.rhs, Shift)):
        return False
    if not (isinstance(b, Update) and isinstance(b.target, Reg)):
        return False
    return (
        b.rhs == a.rhs.base
        and b.target != a.target
        and not overlap((b.target,), free_vars(a.rhs.amount))
    )


def _eliminates(a, b) -> bool:
    if not (isinstance(a, Update) and isinstance(b, Update)):
        return False
    if not isinstance(a.target, Glob) or a.target != b.target:
        return False
    return not overlap((a.target,), free_vars(b.rhs))


# ------------------------------------------------------------- processes


def _env(locals_: tuple) -> dict:
    return {Reg(k): v for k, v in locals_}


def _check_closed_locals(e, pid: int) -> None:
    for v in free_vars(e):
        if isinstance(v, Reg):
            raise UndeclaredLocal(f"process {pid} uses undeclared local {v.name!r}")


def lift_action(a, pid: int, locals_: tuple):
    """Map an action to a process-level outcome.

    Returns ``("tau", name, value)`` for a local update that is already
    closed, ``None`` if the action is a false guard, or a payload for the
    storage layer.  ``EvalError`` propagates.
    """
    env = _env(locals_)
    match a:
        case Update(Reg(name), rhs):
            if not any(k == name for k, _ in locals_):
                raise UndeclaredLocal(f"process {pid} assigns undeclared local {name!r}")
            r = evaluate(rhs, env)
            _check_closed_locals(r, pid)
            if isinstance(r, Lit):
                return ("tau", name, r.value)
            return Load(name, r)
        case Update(target, rhs):
            t = evaluate(target, env) if not isinstance(target, Glob) or target.index is not None else target
            if isinstance(t, Lit):
                raise EvalError(f"store target {target} is not a location")
            r = evaluate(rhs, env)
            _check_closed_locals(t, pid)
            _check_closed_locals(r, pid)
            return Store(t, r)
        case Guard(cond):
            r = evaluate(cond, env)
            _check_closed_locals(r, pid)
            if isinstance(r, Lit):
                if r.value is True:
                    return GuardResidual(r)
                if r.value is False:
                    return None
                raise EvalError(f"guard on non-boolean {r.value!r}")
            return GuardResidual(r)
        case Fence(kind):
            return FenceObs(kind)
        case Atomic(body):
            return AtomicPending(body)
    raise TypeError(f"not an action: {a!r}")


def process_steps(arch: Architecture, p: Process, budget: int = 2) -> list[Step]:
    """Steps of one process.  Labels are ``Tau`` or ``Tagged`` payloads.

    Paths that hit an evaluation error (for instance a projection on a
    speculatively read non-node) are dropped; ``Step.meta`` never mentions
    them, the explorer counts them separately through ``lift_action``.
    """
    out = []
    for st in command_steps(arch, p.code, budget):
        out.extend(_lift_step(st, p))
    return out


def _lift_step(st: Step, p: Process) -> list[Step]:
    if isinstance(st.label, Tau):
        return [Step(st.label, Process(p.pid, p.locals, st.next), st.rule, st.meta)]
    try:
        res = lift_action(st.label, p.pid, p.locals)
    except EvalError as exc:
        log.debug("pruned %s: %s", st.label, exc)
        return []
    if res is None:
        return []
    if isinstance(res, tuple):
        _, name, value = res
        q = p.with_local(name, value)
        return [Step(Tau(st.label), Process(p.pid, q.locals, st.next), st.rule, st.meta)]
    return [Step(Tagged(p.pid, res), Process(p.pid, p.locals, st.next), st.rule, st.meta)]


def interleave(procs: tuple, arch: Architecture, budget: int = 2):
    """Yield ``(index, step)`` for every process step."""
    for i, p in enumerate(procs):
        for st in process_steps(arch, p, budget):
            yield i, st


def is_terminated(procs: tuple) -> bool:
    return all(isinstance(p.code, Skip) for p in procs)


__all__ = [
    "BOUND_HIT",
    "UndeclaredLocal",
    "command_steps",
    "interleave",
    "is_terminated",
    "lift_action",
    "process_steps",
    "unfold",
    "SKIP",
]

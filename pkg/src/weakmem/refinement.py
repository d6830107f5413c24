"""Trace-inclusion refinement between labelled transition systems.

``d`` refines ``c`` when every completed trace of ``d`` (silent steps erased)
is a completed trace of ``c``.  The check determinises ``c`` on the fly and
walks ``d`` depth first.  A ``d`` path that can no longer be matched only
counts as a violation if ``d`` can still complete from there: blocked paths
have no completed traces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Optional

from .expr import EvalError, evaluate
from .explorer import Config, Options, Stats, initial_config, system_steps
from .reorder import Architecture
from .semantics import command_steps, is_terminated
from .syntax import (
    Atomic,
    Command,
    Composite,
    FenceObs,
    Guard,
    GuardResidual,
    Skip,
    System,
    Tagged,
    Tau,
    Term,
    Update,
    term,
)

DEFAULT_STATE_CAP = 2_000_000


class RefinementCapExceeded(Exception):
    pass


@dataclass
class Lts:
    initial: Hashable
    successors: Callable[[Hashable], Iterable[tuple[Optional[Hashable], Hashable]]]
    is_final: Callable[[Hashable], bool]


@dataclass
class RefinementResult:
    holds: bool
    counterexample: Optional[tuple] = None
    explored: int = 0

    def __bool__(self) -> bool:
        return self.holds


def trace_included(d: Lts, c: Lts, cap: int = DEFAULT_STATE_CAP) -> RefinementResult:
    """Is every completed trace of ``d`` a completed trace of ``c``?  ``None`` labels are silent."""
    succ_cache: dict = {}

    def csucc(s):
        r = succ_cache.get(s)
        if r is None:
            r = tuple(c.successors(s))
            succ_cache[s] = r
        return r

    def closure(states) -> frozenset:
        out = set(states)
        todo = list(states)
        while todo:
            s = todo.pop()
            for lab, t in csucc(s):
                if lab is None and t not in out:
                    out.add(t)
                    todo.append(t)
        return frozenset(out)

    def step(states, lab) -> frozenset:
        return closure({t for s in states for l2, t in csucc(s) if l2 == lab})

    completes: dict = {}

    def can_complete(s) -> bool:
        # post-order DFS; exact on acyclic graphs, which bounded loops guarantee
        if s in completes:
            return completes[s]
        stack = [[s, iter(d.successors(s)), d.is_final(s)]]
        on_path = {s}
        while stack:
            frame = stack[-1]
            node, it, found = frame
            nxt = None if found else next(it, None)
            if found or nxt is None:
                completes[node] = found
                stack.pop()
                on_path.discard(node)
                if found and stack:
                    stack[-1][2] = True
                continue
            t = nxt[1]
            if t in completes:
                frame[2] = completes[t]
            elif t not in on_path:
                on_path.add(t)
                stack.append([t, iter(d.successors(t)), d.is_final(t)])
        return completes[s]

    start = (d.initial, closure({c.initial}))
    visited = {start}
    stack = [(start, iter(d.successors(d.initial)))]
    path: list = []
    if d.is_final(d.initial) and not any(c.is_final(x) for x in start[1]):
        return RefinementResult(False, (), 1)
    while stack:
        (ds, cs), it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            if path:
                path.pop()
            continue
        lab, d2 = nxt
        cs2 = cs if lab is None else step(cs, lab)
        if not cs2:
            if can_complete(d2):
                trace = tuple(x for x in path + [lab] if x is not None)
                return RefinementResult(False, trace, len(visited))
            continue
        node = (d2, cs2)
        if node in visited:
            continue
        visited.add(node)
        if len(visited) > cap:
            raise RefinementCapExceeded(f"more than {cap} product states")
        if d.is_final(d2) and not any(c.is_final(x) for x in cs2):
            trace = tuple(x for x in path + [lab] if x is not None)
            return RefinementResult(False, trace, len(visited))
        stack.append((node, iter(d.successors(d2))))
        path.append(lab)
    return RefinementResult(True, None, len(visited))


# ------------------------------------------------------- command level


@term
class Par(Term):
    """Parallel composition of commands, used to state the interleaving laws."""

    left: object
    right: object


@term
class Lead(Term):
    """``head . body`` where ``body`` may be any law term."""

    head: object
    body: object


def normalize_action(a):
    """Fold constants so that labels compare after full evaluation."""
    try:
        match a:
            case Update(t, rhs):
                return Update(t, evaluate(rhs))
            case Guard(cond):
                return Guard(evaluate(cond))
            case Atomic(body):
                return Atomic(tuple(normalize_action(b) for b in body))
    except EvalError:
        return a
    return a


def term_steps(arch: Architecture, t, budget: int = 2):
    match t:
        case Par(left, right):
            for st in term_steps(arch, left, budget):
                yield st[0], Par(st[1], right)
            for st in term_steps(arch, right, budget):
                yield st[0], Par(left, st[1])
        case Lead(head, body):
            yield head, body
        case _:
            for st in command_steps(arch, t, budget):
                yield st.label, st.next


def term_final(t) -> bool:
    match t:
        case Par(left, right):
            return term_final(left) and term_final(right)
        case Lead():
            return False
        case _:
            return isinstance(t, Skip)


def command_lts(arch: Architecture, t, budget: int = 2, hide=frozenset()) -> Lts:
    def succ(s):
        for lab, nxt in term_steps(arch, s, budget):
            if isinstance(lab, Tau) or (hasattr(lab, "kind") and lab.kind in hide):
                yield None, nxt
            else:
                yield normalize_action(lab), nxt

    return Lts(t, succ, term_final)


def check_refinement(arch: Architecture, c, d, *, budget: int = 2, hide=frozenset(),
                     cap: int = DEFAULT_STATE_CAP) -> RefinementResult:
    """Does ``d`` refine ``c``?  Both sides are commands/law terms, or both are systems."""
    if isinstance(c, System) and isinstance(d, System):
        return trace_included(system_lts(arch, d, budget, hide), system_lts(arch, c, budget, hide), cap)
    return trace_included(command_lts(arch, d, budget, hide), command_lts(arch, c, budget, hide), cap)


def equivalent(arch: Architecture, c, d, **kw) -> bool:
    return bool(check_refinement(arch, c, d, **kw)) and bool(check_refinement(arch, d, c, **kw))


# -------------------------------------------------------- system level


def observable(label, hide=frozenset()):
    """Project a system label onto what an observer compares; ``None`` if silent."""
    if isinstance(label, Tau):
        return None
    assert isinstance(label, Tagged)
    parts = label.payload.parts if isinstance(label.payload, Composite) else (label.payload,)
    kept = tuple(
        p for p in parts
        if not isinstance(p, GuardResidual) and not (isinstance(p, FenceObs) and p.kind in hide)
    )
    if not kept:
        return None
    return Tagged(label.pid, kept[0] if len(kept) == 1 and not isinstance(label.payload, Composite) else Composite(kept))


def system_lts(arch: Architecture, system: System, budget: int = 2, hide=frozenset()) -> Lts:
    stats = Stats()

    def succ(cfg: Config):
        for lab, nxt, _ in system_steps(arch, cfg, budget, stats):
            yield observable(lab, hide), nxt

    return Lts(initial_config(system, arch), succ, lambda cfg: is_terminated(cfg.procs))

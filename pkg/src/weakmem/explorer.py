"""Exhaustive exploration of a system's reachable configurations."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .expr import EvalError, evaluate, first_ready_global, substitute
from .reorder import Architecture
from .semantics import BOUND_HIT, is_terminated, lift_action, process_steps
from .storage import Storage, initial_storage
from .syntax import (
    AtomicPending,
    Composite,
    Expr,
    FenceObs,
    Glob,
    GuardResidual,
    Lit,
    Load,
    Process,
    Read,
    Reg,
    Shift,
    Store,
    System,
    TRUE,
    Tagged,
    Tau,
    Term,
    Update,
    term,
)

DEFAULT_MAX_CONFIGS = 10_000_000


@term
class Config(Term):
    procs: tuple
    storage: Storage


@dataclass
class Stats:
    configurations: int = 0
    transitions: int = 0
    pruned: int = 0
    bound_hit: bool = False
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return {
            "configurations": self.configurations,
            "transitions": self.transitions,
            "pruned": self.pruned,
            "bound_hit": self.bound_hit,
            "seconds": round(self.seconds, 4),
        }


@dataclass(frozen=True)
class FinalState:
    locals: tuple  # ((pid, ((name, value), ...)), ...)
    memory: tuple  # ((Glob, value), ...)

    def valuation(self) -> dict:
        env = {}
        for pid, locs in self.locals:
            for name, v in locs:
                env[Reg(f"{pid}:{name}")] = v
        for loc, v in self.memory:
            env[loc] = v
        return env


@dataclass
class ExplorationResult:
    finals: dict = field(default_factory=dict)  # FinalState -> witness labels
    stats: Stats = field(default_factory=Stats)

    @property
    def bound_hit(self) -> bool:
        return self.stats.bound_hit


class CapExceeded(Exception):
    def __init__(self, partial: ExplorationResult, cap: int):
        super().__init__(f"configuration cap of {cap} exceeded")
        self.partial = partial
        self.cap = cap


@dataclass(frozen=True)
class Options:
    unroll: int = 2
    max_configs: int = DEFAULT_MAX_CONFIGS
    witnesses: bool = True
    reduce: bool = True  # take local steps eagerly; final states are unchanged


def initial_config(system: System, arch: Architecture) -> Config:
    pids = [p.pid for p in system.processes]
    st = initial_storage(dict(system.init), pids, arch.multicopy_atomic, arch.lightweight_fences)
    return Config(tuple(system.processes), st)


# ------------------------------------------------------------- resolution


def _resolve_expr(e: Expr, st: Storage, pid: int, stats: Stats) -> Iterator[tuple]:
    """Read globals of ``e`` left to right; yields ``(value, storage, reads)``."""
    g = first_ready_global(e)
    if g is None:
        if not isinstance(e, Lit):
            raise EvalError(f"cannot resolve {e}")
        yield e.value, st, ()
        return
    for v, st1 in st.load(g, pid):
        try:
            e2 = evaluate(substitute(e, g, Lit(v)))
        except EvalError:
            stats.pruned += 1
            continue
        for v2, st2, rs in _resolve_expr(e2, st1, pid, stats):
            yield v2, st2, (Read(g, v),) + rs


def _resolve_loc(t, st: Storage, pid: int, stats: Stats) -> Iterator[tuple]:
    match t:
        case Glob(_, None) | Glob(_, Lit()):
            yield t, st, ()
        case Glob(name, idx):
            for v, st1, rs in _resolve_expr(idx, st, pid, stats):
                yield Glob(name, Lit(v)), st1, rs
        case Shift(amount, base):
            for v, st1, rs in _resolve_expr(amount, st, pid, stats):
                if v != 0 or v is None:
                    stats.pruned += 1
                    continue
                for loc, st2, rs2 in _resolve_loc(base, st1, pid, stats):
                    yield loc, st2, rs + rs2
        case _:
            raise EvalError(f"not a location: {t}")


def _execute(payload, pid: int, locals_: tuple, st: Storage, stats: Stats) -> Iterator[tuple]:
    """Yields ``(parts, locals, storage)`` for every way the storage can serve ``payload``."""
    match payload:
        case Store(loc, expr):
            for loc2, st1, r1 in _resolve_loc(loc, st, pid, stats):
                for v, st2, r2 in _resolve_expr(expr, st1, pid, stats):
                    for st3 in st2.store(loc2, v, pid):
                        yield r1 + r2 + (Store(loc2, Lit(v)),), locals_, st3
        case Load(reg, expr):
            for v, st1, rs in _resolve_expr(expr, st, pid, stats):
                yield rs, _set_local(locals_, reg, v), st1
        case GuardResidual(cond):
            for v, st1, rs in _resolve_expr(cond, st, pid, stats):
                if v is True:
                    yield rs + (GuardResidual(TRUE),), locals_, st1
                elif v is not False:
                    stats.pruned += 1
        case FenceObs(kind):
            yield (payload,), locals_, st.fence(kind, pid)
        case AtomicPending(body):
            yield from _execute_atomic(body, 0, pid, locals_, st, stats)
        case _:
            raise TypeError(f"unexpected payload {payload!r}")


def _execute_atomic(body: tuple, i: int, pid: int, locals_: tuple, st: Storage, stats: Stats):
    if i == len(body):
        yield (), locals_, st
        return
    try:
        res = lift_action(body[i], pid, locals_)
    except EvalError:
        stats.pruned += 1
        return
    if res is None:
        return
    if isinstance(res, tuple):
        _, name, value = res
        for parts, l2, st2 in _execute_atomic(body, i + 1, pid, _set_local(locals_, name, value), st, stats):
            yield (Update(Reg(name), Lit(value)),) + parts, l2, st2
        return
    for parts, l1, st1 in _execute(res, pid, locals_, st, stats):
        for parts2, l2, st2 in _execute_atomic(body, i + 1, pid, l1, st1, stats):
            yield parts + parts2, l2, st2


def _set_local(locals_: tuple, name: str, value) -> tuple:
    return tuple(sorted({**dict(locals_), name: value}.items()))


def _pack(parts: tuple, payload):
    if isinstance(payload, AtomicPending) or len(parts) != 1:
        return Composite(parts)
    return parts[0]


# ------------------------------------------------------------ transitions


def _eager(st) -> bool:
    # a forwarded local op that overtook a store is not eager: running the
    # store first and loading from memory is a different outcome
    return isinstance(st.label, Tau) and st.rule in ("choice", "unfold", "prefix")


def system_steps(arch: Architecture, cfg: Config, unroll: int, stats: Stats, reduce: bool = False) -> list[tuple]:
    """``(label, config, meta)`` for each transition out of ``cfg``.

    With ``reduce``, if some process has eager steps (see ``_eager``) then
    only those are returned.  They touch nothing but that process's code and
    registers, commute with every other step, and leave all of the process's
    own alternatives available, so every final state stays reachable.
    """
    procs = cfg.procs
    steps = [process_steps(arch, p, unroll) for p in procs]
    if reduce:
        for i, sts in enumerate(steps):
            taus = [st for st in sts if _eager(st)]
            if taus:
                stats.transitions += len(taus)
                return [(st.label, Config(procs[:i] + (st.next,) + procs[i + 1:], cfg.storage), st.meta)
                        for st in taus]
    out = []
    for i, p in enumerate(procs):
        for st in steps[i]:
            stats.transitions += 1
            lab = st.label
            if isinstance(lab, Tau):
                nxt = procs[:i] + (st.next,) + procs[i + 1:]
                out.append((lab, Config(nxt, cfg.storage), st.meta))
                continue
            payload = lab.payload
            q: Process = st.next
            try:
                for parts, locs, storage in _execute(payload, p.pid, q.locals, cfg.storage, stats):
                    q2 = Process(q.pid, locs, q.code)
                    nxt = procs[:i] + (q2,) + procs[i + 1:]
                    out.append((Tagged(p.pid, _pack(parts, payload)), Config(nxt, storage), st.meta))
            except EvalError:
                stats.pruned += 1
    return out


def _final_state(cfg: Config) -> FinalState:
    mem = cfg.storage.final_memory()
    return FinalState(
        tuple((p.pid, p.locals) for p in cfg.procs),
        tuple(sorted(mem.items(), key=lambda kv: (kv[0].name, repr(kv[0].index)))),
    )


def explore(system: System, arch: Architecture, opts: Options = Options()) -> ExplorationResult:
    """Depth-first search over all configurations reachable from ``system``.

    Raises ``CapExceeded`` (carrying the partial result) when more than
    ``opts.max_configs`` distinct configurations are visited.
    """
    t0 = time.perf_counter()
    result = ExplorationResult()
    stats = result.stats
    init = initial_config(system, arch)
    visited = {init}
    stats.configurations = 1
    if is_terminated(init.procs):
        result.finals[_final_state(init)] = ()
    stack = [iter(system_steps(arch, init, opts.unroll, stats, opts.reduce))]
    path: list = []
    try:
        while stack:
            nxt = next(stack[-1], None)
            if nxt is None:
                stack.pop()
                if path:
                    path.pop()
                continue
            label, cfg, meta = nxt
            if BOUND_HIT in meta:
                stats.bound_hit = True
            if cfg in visited:
                continue
            visited.add(cfg)
            stats.configurations += 1
            if stats.configurations > opts.max_configs:
                raise CapExceeded(result, opts.max_configs)
            if is_terminated(cfg.procs):
                fs = _final_state(cfg)
                if fs not in result.finals:
                    result.finals[fs] = tuple(path) + (label,) if opts.witnesses else ()
                continue
            succ = system_steps(arch, cfg, opts.unroll, stats, opts.reduce)
            if succ:
                stack.append(iter(succ))
                path.append(label)
    finally:
        stats.seconds = time.perf_counter() - t0
    return result


def enumerate_traces(system: System, arch: Architecture, opts: Options = Options(), limit: int = 100_000):
    """All complete label sequences (no state merging).  For small systems only."""
    stats = Stats()
    out = []

    def go(cfg, trace):
        if len(out) >= limit:
            return
        if is_terminated(cfg.procs):
            out.append(tuple(trace))
            return
        for label, nxt, _ in system_steps(arch, cfg, opts.unroll, stats):
            trace.append(label)
            go(nxt, trace)
            trace.pop()

    go(initial_config(system, arch), [])
    return out


# ------------------------------------------------------------- conditions


OBSERVABLE = "Observable"
NOT_OBSERVABLE = "NotObservable"
NOT_OBSERVABLE_BOUNDED = "NotObservableBounded"


@dataclass(frozen=True)
class Verdict:
    kind: str
    witness: Optional[tuple] = None
    final: Optional[FinalState] = None

    @property
    def observable(self) -> bool:
        return self.kind == OBSERVABLE


class ConditionError(Exception):
    pass


def holds(cond: Expr, fs: FinalState) -> bool:
    try:
        r = evaluate(cond, fs.valuation())
    except EvalError as exc:
        raise ConditionError(str(exc)) from None
    if not isinstance(r, Lit) or not isinstance(r.value, bool):
        raise ConditionError(f"condition does not evaluate to a boolean: {r}")
    return r.value


def check_condition(result: ExplorationResult, cond: Expr) -> Verdict:
    for fs, witness in result.finals.items():
        if holds(cond, fs):
            return Verdict(OBSERVABLE, witness, fs)
    return Verdict(NOT_OBSERVABLE_BOUNDED if result.bound_hit else NOT_OBSERVABLE)

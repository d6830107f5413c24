"""Storage subsystems.

Multicopy-atomic architectures use a plain map from locations to values.
The non-multicopy-atomic ones keep a list of writes, each tagged with the set
of processes that have seen it; POWER adds ``Lw(pid)`` tags that record which
lightweight fences a write precedes.
"""

from __future__ import annotations

from typing import Iterator, NamedTuple

from .syntax import Glob, Term, Value, term


class Lw(NamedTuple):
    pid: int


INIT_PID = 0


class Storage(Term):
    __slots__ = ()

    def load(self, loc: Glob, pid: int) -> Iterator[tuple[Value, "Storage"]]:
        raise NotImplementedError

    def store(self, loc: Glob, value: Value, pid: int) -> Iterator["Storage"]:
        raise NotImplementedError

    def fence(self, kind: str, pid: int) -> "Storage":
        raise NotImplementedError

    def final_memory(self) -> dict:
        raise NotImplementedError


def _loc_key(item):
    loc = item[0]
    idx = loc.index.value if loc.index is not None else None
    return (loc.name, idx is not None, repr(idx))


@term
class McaState(Storage):
    """A single shared memory."""

    cells: tuple  # sorted ((Glob, value), ...)

    @staticmethod
    def initial(init: dict) -> "McaState":
        return McaState(tuple(sorted(init.items(), key=_loc_key)))

    def lookup(self, loc: Glob):
        for k, v in self.cells:
            if k == loc:
                return True, v
        return False, None

    def load(self, loc, pid):
        found, v = self.lookup(loc)
        if found:
            yield v, self

    def store(self, loc, value, pid):
        items = dict(self.cells)
        items[loc] = value
        yield McaState(tuple(sorted(items.items(), key=_loc_key)))

    def fence(self, kind, pid):
        return self

    def final_memory(self):
        return dict(self.cells)


@term
class Write(Term):
    writer: int
    loc: Glob
    value: Value
    seen: frozenset


@term
class WriteList(Storage):
    """Writes in the order the storage subsystem holds them."""

    writes: tuple
    pids: frozenset
    lightweight: bool = False

    @staticmethod
    def initial(init: dict, pids, lightweight: bool = False) -> "WriteList":
        pids = frozenset(pids)
        everyone = pids | frozenset(Lw(p) for p in pids)
        ws = tuple(Write(INIT_PID, loc, v, everyone) for loc, v in sorted(init.items(), key=_loc_key))
        return WriteList(ws, pids, lightweight)

    def load(self, loc, pid):
        yield from nmca_load(self, pid, loc)

    def store(self, loc, value, pid):
        yield from nmca_store(self, Write(pid, loc, value, frozenset((pid,))))

    def fence(self, kind, pid):
        if kind in ("full", "store"):
            return nmca_flush(self, pid)
        if self.lightweight and kind in ("loadgate", "eieio"):
            return nmca_lwflush(self, pid)
        return self

    def final_memory(self):
        out = {}
        for w in self.writes:
            out[w.loc] = w.value
        return out


def can_see_past(w: Write, pid: int, loc: Glob) -> bool:
    return w.loc != loc or pid not in w.seen


def nmca_load(ws: WriteList, pid: int, loc: Glob) -> Iterator[tuple[Value, WriteList]]:
    """Every write ``pid`` may read for ``loc`` together with the updated list."""
    writes = ws.writes
    for i in range(len(writes) - 1, -1, -1):
        w = writes[i]
        if w.loc != loc:
            continue
        seen = w.seen | {pid}
        w2 = Write(w.writer, w.loc, w.value, seen) if seen != w.seen else w
        before = writes[:i]
        if ws.lightweight:
            before = _sees(before, pid, w.writer)
        yield w.value, WriteList(before + (w2,) + writes[i + 1:], ws.pids, ws.lightweight)
        if pid in w.seen:
            break


def _sees(writes: tuple, n: int, m: int) -> tuple:
    tag = Lw(m)
    extra = frozenset((n, Lw(n)))
    out = []
    changed = False
    for w in writes:
        if tag in w.seen and not extra <= w.seen:
            out.append(Write(w.writer, w.loc, w.value, w.seen | extra))
            changed = True
        else:
            out.append(w)
    return tuple(out) if changed else writes


def can_reorder(w: Write, new: Write, lightweight: bool) -> bool:
    n = new.writer
    if w.writer == INIT_PID or w.writer == n:
        return False
    if w.loc == new.loc:
        return n not in w.seen
    return not (lightweight and Lw(n) in w.seen)


def nmca_store(ws: WriteList, new: Write) -> Iterator[WriteList]:
    """Every admissible position for ``new``, latest first."""
    writes = ws.writes
    i = len(writes)
    while True:
        yield WriteList(writes[:i] + (new,) + writes[i:], ws.pids, ws.lightweight)
        if i == 0 or not can_reorder(writes[i - 1], new, ws.lightweight):
            break
        i -= 1


def nmca_flush(ws: WriteList, pid: int) -> WriteList:
    return _widen(ws, pid, ws.pids)


def nmca_lwflush(ws: WriteList, pid: int) -> WriteList:
    return _widen(ws, pid, frozenset((Lw(pid),)))


def _widen(ws: WriteList, pid: int, extra: frozenset) -> WriteList:
    out = []
    changed = False
    for w in ws.writes:
        if pid in w.seen and not extra <= w.seen:
            out.append(Write(w.writer, w.loc, w.value, w.seen | extra))
            changed = True
        else:
            out.append(w)
    return WriteList(tuple(out), ws.pids, ws.lightweight) if changed else ws


def initial_storage(init: dict, pids, multicopy_atomic: bool, lightweight: bool) -> Storage:
    if multicopy_atomic:
        return McaState.initial(init)
    return WriteList.initial(init, pids, lightweight)


def final_memory(storage: Storage) -> dict:
    return storage.final_memory()

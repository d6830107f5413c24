"""Abstract syntax of the wide-spectrum language.

Every term is an immutable dataclass.  Hashes are computed once and cached on
the instance, which matters because the explorer keys its visited set on whole
configurations and those are deep trees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from operator import attrgetter
from typing import Iterable, Optional, Union


class Term:
    """Structural equality over ``__match_args__`` with a cached hash."""

    __slots__ = ("_hash",)
    __match_args__: tuple[str, ...] = ()

    def _key(self) -> tuple:
        names = self.__match_args__
        if len(names) == 1:
            return (getattr(self, names[0]),)
        return attrgetter(*names)(self) if names else ()

    def __hash__(self) -> int:
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__, self._key()))
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(other) is not type(self):
            return False
        return hash(self) == hash(other) and self._key() == other._key()  # type: ignore[attr-defined]

    def __ne__(self, other: object) -> bool:
        return not self.__eq__(other)

    def __reduce__(self):
        # the cached hash depends on per-process string hashing, so rebuild
        return (type(self), tuple(getattr(self, n) for n in self.__match_args__))

    def __str__(self) -> str:
        from .printer import show

        return show(self)


def term(cls):
    return dataclass(frozen=True, eq=False, slots=True, repr=True)(cls)


# ---------------------------------------------------------------- values


@term
class NodeVal(Term):
    """A heap node value ``node(value, next)``."""

    value: "Value"
    next: "Value"


Value = Union[int, bool, None, NodeVal]


def value_eq(a: Value, b: Value) -> bool:
    if (type(a) is bool) != (type(b) is bool):
        return False
    return a == b


# ----------------------------------------------------------- expressions


@term
class Lit(Term):
    value: Value

    def _key(self) -> tuple:
        # keep true and 1 apart
        return (self.value, type(self.value) is bool)


@term
class Reg(Term):
    """A process-local variable.  In conditions the name is ``pid:name``."""

    name: str


@term
class Glob(Term):
    """A shared location, optionally indexed (``heap[e]``, ``tasks[e]``)."""

    name: str
    index: Optional["Expr"] = None


@term
class Shift(Term):
    """Address shift ``[amount]base``: reads ``base`` and depends on ``amount``."""

    amount: "Expr"
    base: Glob


@term
class Unop(Term):
    op: str
    arg: "Expr"


@term
class Binop(Term):
    op: str
    left: "Expr"
    right: "Expr"


@term
class MkNode(Term):
    value: "Expr"
    next: "Expr"


@term
class Proj(Term):
    field: str
    arg: "Expr"


Expr = Union[Lit, Reg, Glob, Shift, Unop, Binop, MkNode, Proj]
Var = Union[Reg, Glob]

TRUE = Lit(True)
FALSE = Lit(False)


def neg(e: Expr) -> Expr:
    if isinstance(e, Lit) and type(e.value) is bool:
        return Lit(not e.value)
    if isinstance(e, Unop) and e.op == "not":
        return e.arg
    return Unop("not", e)


# --------------------------------------------------------------- actions

FENCE_KINDS = ("full", "store", "ctrl", "storegate", "loadgate", "eieio")


@term
class Update(Term):
    target: Union[Reg, Glob, Shift]
    rhs: Expr


@term
class Guard(Term):
    cond: Expr


@term
class Fence(Term):
    kind: str


@term
class Atomic(Term):
    body: tuple


Action = Union[Update, Guard, Fence, Atomic]


# -------------------------------------------------------------- commands


@term
class Skip(Term):
    pass


SKIP = Skip()


@term
class Prefix(Term):
    """``head ; tail`` where ``tail`` may issue actions ahead of ``head``."""

    head: Action
    tail: "Command"


@term
class TruePrefix(Term):
    """``head . tail``: strict program order."""

    head: Action
    tail: "Command"


@term
class Choice(Term):
    left: "Command"
    right: "Command"


@term
class While(Term):
    """``while cond do body`` followed by ``cont``.

    ``budget`` counts remaining unfoldings; ``None`` means the explorer's
    default bound has not been applied yet.
    """

    cond: Expr
    body: "Command"
    cont: "Command" = SKIP
    budget: Optional[int] = None


Command = Union[Skip, Prefix, TruePrefix, Choice, While]


def seq_compose(c1: Command, c2: Command) -> Command:
    """Sequential composition; relaxed prefixes stay relaxed."""
    if isinstance(c2, Skip):
        return c1
    match c1:
        case Skip():
            return c2
        case Prefix(a, rest):
            return Prefix(a, seq_compose(rest, c2))
        case TruePrefix(a, rest):
            return TruePrefix(a, seq_compose(rest, c2))
        case Choice(left, right):
            return Choice(seq_compose(left, c2), seq_compose(right, c2))
        case While(b, body, cont, k):
            return While(b, body, seq_compose(cont, c2), k)
    raise TypeError(f"not a command: {c1!r}")


def seq(actions: Iterable[Action], rest: Command = SKIP) -> Command:
    """Chain actions with relaxed prefixes."""
    out = rest
    for a in reversed(list(actions)):
        out = Prefix(a, out)
    return out


def ite(cond: Expr, then: Command, other: Command = SKIP) -> Command:
    return Choice(Prefix(Guard(cond), then), Prefix(Guard(neg(cond)), other))


# -------------------------------------------------------- processes/system


@term
class Process(Term):
    pid: int
    locals: tuple  # sorted ((name, value), ...)
    code: Command

    def local(self, name: str) -> Value:
        for k, v in self.locals:
            if k == name:
                return v
        raise KeyError(name)

    def with_local(self, name: str, value: Value) -> "Process":
        items = dict(self.locals)
        items[name] = value
        return Process(self.pid, tuple(sorted(items.items())), self.code)


@term
class System(Term):
    init: tuple  # ((Glob, value), ...)
    processes: tuple


def make_locals(items: dict[str, Value]) -> tuple:
    return tuple(sorted(items.items()))


# ---------------------------------------------------------------- labels


@term
class Tau(Term):
    """Silent step.  ``note`` records what happened for witnesses."""

    note: object = None


TAU = Tau()


@term
class Store(Term):
    loc: Union[Glob, Shift]
    value: Expr


@term
class Load(Term):
    reg: str
    expr: Expr


@term
class Read(Term):
    loc: Glob
    value: Value


@term
class GuardResidual(Term):
    cond: Expr


@term
class FenceObs(Term):
    kind: str


@term
class AtomicPending(Term):
    body: tuple


@term
class Composite(Term):
    parts: tuple


@term
class Tagged(Term):
    pid: int
    payload: object


Payload = Union[Store, Load, Read, GuardResidual, FenceObs, AtomicPending, Composite]
Label = Union[Tau, Action, Tagged]


@dataclass(frozen=True)
class Step:
    label: object
    next: object
    rule: str = "prefix"
    meta: tuple = field(default=())

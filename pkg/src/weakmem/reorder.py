"""Architectures, forwarding and the reordering relation."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from .expr import SubstitutionError, free_vars, overlap, shared_vars, substitute
from .syntax import Action, Atomic, Fence, Glob, Guard, Reg, Shift, Update


class Model(enum.Enum):
    SC = "sc"
    TSO = "tso"
    ARM_MCA = "arm-mca"
    ARM_NMCA = "arm-nmca"
    POWER = "power"


ALIASES = {
    "sc": Model.SC,
    "tso": Model.TSO,
    "x86": Model.TSO,
    "arm-mca": Model.ARM_MCA,
    "armv8-mca": Model.ARM_MCA,
    "armv8": Model.ARM_MCA,
    "arm-nmca": Model.ARM_NMCA,
    "arm": Model.ARM_NMCA,
    "armv7": Model.ARM_NMCA,
    "power": Model.POWER,
}


@dataclass(frozen=True)
class Architecture:
    model: Model
    write_elimination: bool = True
    load_speculation: bool = True

    @property
    def name(self) -> str:
        return self.model.value

    @property
    def multicopy_atomic(self) -> bool:
        return self.model not in (Model.ARM_NMCA, Model.POWER)

    @property
    def lightweight_fences(self) -> bool:
        return self.model is Model.POWER

    @property
    def arm_like(self) -> bool:
        return self.model in (Model.ARM_MCA, Model.ARM_NMCA, Model.POWER)

    def __str__(self) -> str:
        return self.name


def architecture(name: str, *, write_elimination: Optional[bool] = None,
                 load_speculation: Optional[bool] = None) -> Architecture:
    """Look up an architecture by name.  Optional features default to on for ARM and POWER."""
    try:
        model = ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown architecture {name!r}; expected one of {', '.join(m.value for m in Model)}") from None
    arm = model in (Model.ARM_MCA, Model.ARM_NMCA, Model.POWER)
    we = arm if write_elimination is None else write_elimination
    ls = arm if load_speculation is None else load_speculation
    return Architecture(model, we, ls)


ALL_ARCHS = tuple(architecture(m.value) for m in Model)


# ------------------------------------------------------------ classifiers


def target_vars(a: Update) -> frozenset:
    """The written variable plus any variables its address depends on."""
    return free_vars(a.target)


def shared_target(a: Update) -> bool:
    return isinstance(a.target, (Glob, Shift))


def address_reads(a: Update) -> frozenset:
    t = a.target
    if isinstance(t, Reg):
        return frozenset()
    if isinstance(t, Shift):
        return free_vars(t.amount) | (free_vars(t.base.index) if t.base.index is not None else frozenset())
    return free_vars(t.index) if t.index is not None else frozenset()


def reads(a: Update) -> frozenset:
    """Variables read by an update: its rhs and the address of its target."""
    return free_vars(a.rhs) | address_reads(a)


def shared_reads(a: Update) -> frozenset:
    return frozenset(v for v in reads(a) if isinstance(v, Glob))


def _is_fence(a: Action, *kinds: str) -> bool:
    return isinstance(a, Fence) and a.kind in kinds


def is_pure_store(a: Action) -> bool:
    return isinstance(a, Update) and shared_target(a) and not shared_reads(a)


def is_load(a: Action) -> bool:
    return isinstance(a, Update) and not shared_target(a) and bool(shared_reads(a))


def is_register_op(a: Action) -> bool:
    if isinstance(a, Update):
        return not shared_target(a) and not shared_reads(a)
    if isinstance(a, Guard):
        return not shared_vars(a.cond)
    return False


def writes_shared(a: Action) -> bool:
    return isinstance(a, Update) and shared_target(a)


# ------------------------------------------------------------ forwarding


def forward(alpha: Action, beta: Action) -> Action:
    """The effect of executing ``alpha`` on ``beta`` when ``beta`` overtakes it."""
    if isinstance(alpha, Atomic):
        for a in alpha.body:
            beta = forward(a, beta)
        return beta
    if not isinstance(alpha, Update) or isinstance(alpha.target, Shift):
        return beta
    f = alpha.rhs
    if shared_vars(f):
        return beta
    try:
        return _forward_into(alpha.target, f, beta)
    except SubstitutionError:
        return beta


def _forward_into(y, f, beta: Action) -> Action:
    match beta:
        case Update(t, rhs):
            return Update(_subst_address(t, y, f), substitute(rhs, y, f))
        case Guard(c):
            return Guard(substitute(c, y, f))
        case Atomic(body):
            out = []
            live = True
            for b in body:
                nb = _forward_into(y, f, b) if live else b
                out.append(nb)
                if isinstance(b, Update) and b.target == y:
                    live = False
            return Atomic(tuple(out))
    return beta


def _subst_address(t, y, f):
    # the written variable itself is never replaced, only its address parts
    match t:
        case Reg() | Glob(_, None):
            return t
        case Glob(name, idx):
            return Glob(name, substitute(idx, y, f))
        case Shift(amount, base):
            b = base if base.index is None else Glob(base.name, substitute(base.index, y, f))
            return Shift(substitute(amount, y, f), b)
    return t


# ------------------------------------------------------------ reordering


@lru_cache(maxsize=1 << 18)
def reorderable(arch: Architecture, alpha: Action, beta: Action) -> bool:
    """``alpha`` may be overtaken by ``beta`` (already forwarded)."""
    model = arch.model
    if model is Model.SC:
        return False
    if isinstance(beta, Atomic):
        return all(reorderable(arch, alpha, b) for b in beta.body)
    if isinstance(alpha, Atomic):
        return all(reorderable(arch, a, beta) for a in alpha.body)
    if model is Model.TSO:
        return _tso(alpha, beta)
    return _arm(alpha, beta, model is Model.POWER)


def _tso(a: Action, b: Action) -> bool:
    if not (isinstance(a, Update) and isinstance(b, Update)):
        return False
    if not isinstance(b.target, Reg):
        return False
    return (
        not overlap(target_vars(a), target_vars(b))
        and not overlap(target_vars(a), free_vars(b.rhs))
        and not overlap(target_vars(b), reads(a))
        and not shared_reads(a)
    )


def _power_gates(a: Action, b: Action) -> Optional[bool]:
    gates = ("storegate", "loadgate")
    if _is_fence(a, *gates) and _is_fence(b, *gates):
        return False
    if _is_fence(b, "storegate"):
        return is_pure_store(a) or is_register_op(a)
    if _is_fence(b, "loadgate"):
        return is_register_op(a)
    if _is_fence(a, "loadgate"):
        return is_load(b) or is_register_op(b)
    if _is_fence(a, "storegate"):
        return is_register_op(b)
    if _is_fence(a, "eieio") and writes_shared(b):
        return False
    if _is_fence(b, "eieio") and writes_shared(a):
        return False
    return None


def _arm(a: Action, b: Action, power: bool) -> bool:
    if _is_fence(a, "full") or _is_fence(b, "full"):
        return False
    if power:
        verdict = _power_gates(a, b)
        if verdict is not None:
            return verdict
    if _is_fence(a, "store") and writes_shared(b):
        return False
    if writes_shared(a) and _is_fence(b, "store"):
        return False
    if isinstance(a, Guard) and _is_fence(b, "ctrl"):
        return False
    if _is_fence(a, "ctrl") and isinstance(b, Update) and not shared_target(b):
        return False
    match a, b:
        case Guard(c1), Guard(c2):
            return not overlap(shared_vars(c1), shared_vars(c2))
        case Guard(c), Update():
            if shared_target(b):
                return False
            return not overlap(target_vars(b), free_vars(c)) and not overlap(shared_reads(b), shared_vars(c))
        case Update(), Guard(c):
            return not overlap(target_vars(a), free_vars(c)) and not overlap(shared_reads(a), shared_vars(c))
        case Update(), Update():
            if isinstance(a.target, Shift) and shared_target(b):
                return False
            return (
                not overlap(target_vars(a), target_vars(b))
                and not overlap(target_vars(a), reads(b))
                and not overlap(target_vars(b), reads(a))
                and not overlap(shared_reads(a), shared_reads(b))
            )
    return True


def may_promote(arch: Architecture, alpha: Action, beta: Action) -> Optional[Action]:
    """Forwarded ``beta`` if it may be issued ahead of ``alpha``, else ``None``."""
    if arch.model is Model.SC:
        return None
    b2 = forward(alpha, beta)
    return b2 if reorderable(arch, alpha, b2) else None

"""Concrete syntax for terms, values and labels."""

from __future__ import annotations

from .syntax import (
    Atomic,
    AtomicPending,
    Binop,
    Choice,
    Composite,
    Fence,
    FenceObs,
    Glob,
    Guard,
    GuardResidual,
    Lit,
    Load,
    MkNode,
    NodeVal,
    Prefix,
    Process,
    Proj,
    Read,
    Reg,
    Shift,
    Skip,
    Store,
    System,
    Tagged,
    Tau,
    TruePrefix,
    Unop,
    Update,
    While,
)

PRECEDENCE = {
    "or": 1,
    "and": 2,
    "=": 3,
    "!=": 3,
    "<": 3,
    "<=": 3,
    ">": 3,
    ">=": 3,
    "+": 4,
    "-": 4,
    "xor": 4,
    "*": 5,
    "mod": 5,
}

FENCE_NAMES = {
    "full": "fence",
    "store": "fence.st",
    "ctrl": "cfence",
    "storegate": "storegate",
    "loadgate": "loadgate",
    "eieio": "eieio",
}


def show_value(v) -> str:
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, NodeVal):
        return f"node({show_value(v.value)}, {show_value(v.next)})"
    return str(v)


def show_expr(e, prec: int = 0) -> str:
    match e:
        case Lit(v):
            s = show_value(v)
            return f"({s})" if isinstance(v, int) and not isinstance(v, bool) and v < 0 and prec > 0 else s
        case Reg(name):
            return name
        case Glob(name, None):
            return name
        case Glob(name, idx):
            return f"{name}[{show_expr(idx)}]"
        case Shift(amount, base):
            return f"[{show_expr(amount)}]{show_expr(base)}"
        case Unop("not", arg):
            s = f"!{show_expr(arg, 6)}"
            return s
        case Unop("-", arg):
            return f"-{show_expr(arg, 6)}"
        case Binop(op, left, right):
            p = PRECEDENCE[op]
            s = f"{show_expr(left, p)} {op} {show_expr(right, p + 1)}"
            return f"({s})" if p < prec else s
        case MkNode(v, n):
            return f"node({show_expr(v)}, {show_expr(n)})"
        case Proj(fieldname, arg):
            return f"{show_expr(arg, 7)}.{fieldname}"
    raise TypeError(f"not an expression: {e!r}")


def show_action(a) -> str:
    match a:
        case Update(t, rhs):
            return f"{show_expr(t)} := {show_expr(rhs)}"
        case Guard(c):
            return f"guard({show_expr(c)})"
        case Fence(kind):
            return FENCE_NAMES[kind]
        case Atomic(body):
            return "atomic { " + "; ".join(show_action(b) for b in body) + " }"
    raise TypeError(f"not an action: {a!r}")


def show_command(c) -> str:
    match c:
        case Skip():
            return "skip"
        case Prefix(a, Skip()) | TruePrefix(a, Skip()):
            return show_action(a)
        case Prefix(a, rest):
            return f"{show_action(a)}; {show_command(rest)}"
        case TruePrefix(a, rest):
            return f"{show_action(a)} . {show_command(rest)}"
        case Choice(left, right):
            return f"choice {{ {show_command(left)} }} or {{ {show_command(right)} }}"
        case While(b, body, cont, _):
            s = f"while {show_expr(b)} {{ {show_command(body)} }}"
            return s if isinstance(cont, Skip) else f"{s}; {show_command(cont)}"
    raise TypeError(f"not a command: {c!r}")


def show_payload(p) -> str:
    match p:
        case Store(loc, value):
            return f"{show_expr(loc)} := {show_expr(value)}"
        case Load(reg, expr):
            return f"{reg} := {show_expr(expr)}"
        case Read(loc, value):
            return f"{show_expr(loc)} = {show_value(value)}"
        case GuardResidual(cond):
            return f"guard({show_expr(cond)})"
        case FenceObs(kind):
            return FENCE_NAMES[kind]
        case AtomicPending(body):
            return "atomic { " + "; ".join(show_action(b) for b in body) + " }"
        case Composite(parts):
            return "<" + "; ".join(show_payload(x) for x in parts) + ">"
    return show_action(p)


def show_label(lab) -> str:
    match lab:
        case Tau(None):
            return "tau"
        case Tau(note):
            return f"tau({show(note)})"
        case Tagged(pid, payload):
            return f"{pid}: {show_payload(payload)}"
    return show(lab)


def show(t) -> str:
    match t:
        case Lit() | Reg() | Glob() | Shift() | Unop() | Binop() | MkNode() | Proj():
            return show_expr(t)
        case Update() | Guard() | Fence() | Atomic():
            return show_action(t)
        case Skip() | Prefix() | TruePrefix() | Choice() | While():
            return show_command(t)
        case Tau() | Tagged():
            return show_label(t)
        case Store() | Load() | Read() | GuardResidual() | FenceObs() | AtomicPending() | Composite():
            return show_payload(t)
        case NodeVal():
            return show_value(t)
        case Process(pid, locs, code):
            env = ", ".join(f"{k}={show_value(v)}" for k, v in locs)
            return f"P{pid}[{env}] {show_command(code)}"
        case System(init, procs):
            mem = ", ".join(f"{show_expr(k)}={show_value(v)}" for k, v in init)
            return f"{{{mem}}} " + " || ".join(show(p) for p in procs)
    if isinstance(t, tuple):
        return "(" + ", ".join(show(x) for x in t) + ")"
    return show_value(t) if t is None or isinstance(t, (bool, int)) else repr(t)

"""Expression utilities: variable sets, substitution and evaluation."""

from __future__ import annotations

from functools import lru_cache
from typing import Mapping, Optional

from .syntax import (
    Binop,
    Expr,
    Glob,
    Lit,
    MkNode,
    NodeVal,
    Proj,
    Reg,
    Shift,
    Unop,
    Value,
    value_eq,
)


class EvalError(Exception):
    """Type error or bad address during evaluation."""


class SubstitutionError(Exception):
    """Attempt to replace an address-shift base by a non-variable."""


@lru_cache(maxsize=1 << 16)
def free_vars(e: Expr) -> frozenset:
    match e:
        case Lit():
            return frozenset()
        case Reg():
            return frozenset((e,))
        case Glob(_, None):
            return frozenset((e,))
        case Glob(_, idx):
            return frozenset((e,)) | free_vars(idx)
        case Shift(amount, base):
            return free_vars(amount) | free_vars(base)
        case Unop(_, arg) | Proj(_, arg):
            return free_vars(arg)
        case Binop(_, left, right):
            return free_vars(left) | free_vars(right)
        case MkNode(v, n):
            return free_vars(v) | free_vars(n)
    raise TypeError(f"not an expression: {e!r}")


@lru_cache(maxsize=1 << 16)
def shared_vars(e: Expr) -> frozenset:
    return frozenset(v for v in free_vars(e) if isinstance(v, Glob))


def variable_sets(e: Expr) -> tuple[frozenset, frozenset]:
    """Return ``(free, shared)`` for ``e``."""
    return free_vars(e), shared_vars(e)


def is_closed(e: Expr) -> bool:
    return isinstance(e, Lit)


def same_var(u, v) -> bool:
    """May ``u`` and ``v`` name the same storage?

    Indexed globals whose indices are not both literal are assumed to alias.
    """
    if type(u) is not type(v):
        return False
    if isinstance(u, Reg):
        return u.name == v.name
    if u.name != v.name:
        return False
    if u.index is None or v.index is None:
        return u.index is None and v.index is None
    if isinstance(u.index, Lit) and isinstance(v.index, Lit):
        return u.index == v.index
    return True


def overlap(xs, ys) -> bool:
    return any(same_var(u, v) for u in xs for v in ys)


def substitute(e: Expr, x, f: Expr) -> Expr:
    """Replace free occurrences of variable ``x`` in ``e`` by ``f``."""
    if e == x:
        return f
    match e:
        case Lit() | Reg() | Glob(_, None):
            return e
        case Glob(name, idx):
            return Glob(name, substitute(idx, x, f))
        case Shift(amount, base):
            if base == x:
                if not isinstance(f, Glob):
                    raise SubstitutionError(f"cannot replace shift base {base} by {f}")
                new_base = f
            else:
                new_base = base if base.index is None else Glob(base.name, substitute(base.index, x, f))
            return Shift(substitute(amount, x, f), new_base)
        case Unop(op, arg):
            return Unop(op, substitute(arg, x, f))
        case Proj(fieldname, arg):
            return Proj(fieldname, substitute(arg, x, f))
        case Binop(op, left, right):
            return Binop(op, substitute(left, x, f), substitute(right, x, f))
        case MkNode(v, n):
            return MkNode(substitute(v, x, f), substitute(n, x, f))
    raise TypeError(f"not an expression: {e!r}")


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def apply_binop(op: str, a: Value, b: Value) -> Value:
    if op == "=":
        return value_eq(a, b)
    if op == "!=":
        return not value_eq(a, b)
    if op in ("and", "or"):
        if not (isinstance(a, bool) and isinstance(b, bool)):
            raise EvalError(f"{op} expects booleans")
        return (a and b) if op == "and" else (a or b)
    if op == "xor" and isinstance(a, bool) and isinstance(b, bool):
        return a != b
    if not (_is_int(a) and _is_int(b)):
        raise EvalError(f"{op} expects integers, got {a!r} and {b!r}")
    match op:
        case "+":
            return a + b
        case "-":
            return a - b
        case "*":
            return a * b
        case "xor":
            return a ^ b
        case "mod":
            if b == 0:
                raise EvalError("mod by zero")
            return a % b
        case "<":
            return a < b
        case "<=":
            return a <= b
        case ">":
            return a > b
        case ">=":
            return a >= b
    raise EvalError(f"unknown operator {op}")


def apply_unop(op: str, a: Value) -> Value:
    if op == "not":
        if not isinstance(a, bool):
            raise EvalError("not expects a boolean")
        return not a
    if op == "-":
        if not _is_int(a):
            raise EvalError("negation expects an integer")
        return -a
    raise EvalError(f"unknown operator {op}")


def evaluate(e: Expr, valuation: Mapping = {}) -> Expr:
    """Partially evaluate ``e``; the result is a ``Lit`` when closed."""
    match e:
        case Lit():
            return e
        case Reg():
            if e in valuation:
                return Lit(valuation[e])
            return e
        case Glob(name, idx):
            if idx is not None:
                idx2 = evaluate(idx, valuation)
                if idx2 is not idx:
                    e = Glob(name, idx2)
                if not isinstance(idx2, Lit):
                    return e
            if e in valuation:
                return Lit(valuation[e])
            return e
        case Shift(amount, base):
            a2 = evaluate(amount, valuation)
            b2 = base
            if base.index is not None:
                i2 = evaluate(base.index, valuation)
                b2 = base if i2 is base.index else Glob(base.name, i2)
            if isinstance(a2, Lit):
                if a2.value != 0 or a2.value is None:
                    raise EvalError(f"address shift by {a2.value!r}")
                return evaluate(b2, valuation)
            return Shift(a2, b2)
        case Unop(op, arg):
            a2 = evaluate(arg, valuation)
            if isinstance(a2, Lit):
                return Lit(apply_unop(op, a2.value))
            return e if a2 is arg else Unop(op, a2)
        case Binop(op, left, right):
            l2 = evaluate(left, valuation)
            r2 = evaluate(right, valuation)
            if isinstance(l2, Lit) and isinstance(r2, Lit):
                return Lit(apply_binop(op, l2.value, r2.value))
            if l2 is left and r2 is right:
                return e
            return Binop(op, l2, r2)
        case MkNode(v, n):
            v2 = evaluate(v, valuation)
            n2 = evaluate(n, valuation)
            if isinstance(v2, Lit) and isinstance(n2, Lit):
                return Lit(NodeVal(v2.value, n2.value))
            return MkNode(v2, n2)
        case Proj(fieldname, arg):
            a2 = evaluate(arg, valuation)
            if isinstance(a2, Lit):
                if not isinstance(a2.value, NodeVal):
                    raise EvalError(f"projection .{fieldname} of {a2.value!r}")
                return Lit(getattr(a2.value, fieldname))
            return Proj(fieldname, a2)
    raise TypeError(f"not an expression: {e!r}")


def first_ready_global(e: Expr) -> Optional[Glob]:
    """Leftmost global whose index (if any) is already a literal."""
    match e:
        case Lit() | Reg():
            return None
        case Glob(_, None):
            return e
        case Glob(_, idx):
            if isinstance(idx, Lit):
                return e
            return first_ready_global(idx)
        case Shift(amount, base):
            inner = first_ready_global(amount)
            if inner is not None:
                return inner
            return None
        case Unop(_, arg) | Proj(_, arg):
            return first_ready_global(arg)
        case Binop(_, left, right) | MkNode(left, right):
            return first_ready_global(left) or first_ready_global(right)
    raise TypeError(f"not an expression: {e!r}")


def local_names(e: Expr) -> set[str]:
    return {v.name for v in free_vars(e) if isinstance(v, Reg)}

"""Parser for the litmus DSL.

A file looks like::

    test SB
    init { x = 0; y = 0 }
    process 1 locals { r1 = 0 } { x := 1; r1 := y }
    process 2 locals { r2 = 0 } { y := 1; r2 := x }
    exists (1:r1 = 0 and 2:r2 = 0)
    expect tso Observable oracle

Identifiers declared in a process's ``locals`` block are registers of that
process; everything else is a shared location (default value 0).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional

from .syntax import (
    SKIP,
    Atomic,
    Binop,
    Choice,
    Command,
    Expr,
    Fence,
    Glob,
    Guard,
    Lit,
    MkNode,
    NodeVal,
    Prefix,
    Process,
    Proj,
    Reg,
    Shift,
    System,
    Unop,
    Update,
    While,
    make_locals,
    neg,
    seq_compose,
)


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line = line
        self.col = col


class UndeclaredLocalError(ParseError):
    pass


class NameClashError(ParseError):
    pass


HEAP = "heap"
MAXH = "maxh"

KEYWORDS = {
    "test", "arch", "init", "process", "locals", "exists", "forbidden", "expect",
    "guard", "fence", "cfence", "storegate", "loadgate", "eieio", "lwfence",
    "atomic", "if", "else", "while", "cas", "choice", "or", "and", "not", "xor",
    "mod", "skip", "new", "true", "false", "null", "node",
}

TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*|//[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|==|!=|<=|>=|&&|\|\||/\\|\\/|[-+*%=<>!(){}\[\];,:.|])
    """,
    re.VERBOSE,
)


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Tok]:
    out = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(src):
        m = TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Tok(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    out.append(Tok("eof", "", line, pos - line_start + 1))
    return out


@dataclass
class Expectation:
    arch: str
    verdict: str
    source: str = ""


@dataclass
class ParsedTest:
    name: str
    system: System
    quantifier: str  # "exists" or "forbidden"
    condition: Expr
    arch: Optional[str] = None
    expectations: list = field(default_factory=list)


HEADER_RE = re.compile(r"^\s*(test|arch|expect)\b(.*)$")


def _split_headers(src: str):
    """Pull out line-oriented headers, blanking them so positions are preserved."""
    headers = []
    lines = src.split("\n")
    for i, ln in enumerate(lines):
        m = HEADER_RE.match(ln)
        if m:
            body = re.sub(r"\s+#.*$", "", m.group(2)).strip()
            headers.append((m.group(1), body, i + 1))
            lines[i] = ""
    return headers, "\n".join(lines)


class _Parser:
    def __init__(self, toks: list[Tok]):
        self.toks = toks
        self.i = 0
        self.scope: set[str] = set()
        self.uses_heap = False

    # -- token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Tok] = None) -> ParseError:
        t = tok or self.tok
        return ParseError(msg, t.line, t.col)

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text in texts

    def accept(self, *texts: str) -> Optional[Tok]:
        if self.at(*texts):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Tok:
        t = self.accept(text)
        if t is None:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return t

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            raise self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    def number(self) -> int:
        neg_ = bool(self.accept("-"))
        t = self.tok
        if t.kind != "num":
            raise self.error(f"expected number, found {t.text!r}")
        self.i += 1
        return -int(t.text) if neg_ else int(t.text)

    # -- values
    def value(self):
        if self.accept("true"):
            return True
        if self.accept("false"):
            return False
        if self.accept("null"):
            return None
        if self.accept("node"):
            self.expect("(")
            v = self.value()
            self.expect(",")
            n = self.value()
            self.expect(")")
            return NodeVal(v, n)
        return self.number()

    # -- expressions
    def expr(self) -> Expr:
        e = self.conj()
        while self.accept("or", "||", "\\/"):
            e = Binop("or", e, self.conj())
        return e

    def conj(self) -> Expr:
        e = self.cmp()
        while self.accept("and", "&&", "/\\"):
            e = Binop("and", e, self.cmp())
        return e

    def cmp(self) -> Expr:
        e = self.add()
        t = self.accept("=", "==", "!=", "<", "<=", ">", ">=")
        if t:
            op = "=" if t.text == "==" else t.text
            e = Binop(op, e, self.add())
        return e

    def add(self) -> Expr:
        e = self.mul()
        while True:
            t = self.accept("+", "-", "xor")
            if not t:
                return e
            e = Binop(t.text, e, self.mul())

    def mul(self) -> Expr:
        e = self.unary()
        while True:
            t = self.accept("*", "mod", "%")
            if not t:
                return e
            e = Binop("mod" if t.text == "%" else t.text, e, self.unary())

    def unary(self) -> Expr:
        if self.accept("!", "not"):
            return neg(self.unary())
        if self.accept("-"):
            e = self.unary()
            if isinstance(e, Lit) and isinstance(e.value, int) and not isinstance(e.value, bool):
                return Lit(-e.value)
            return Unop("-", e)
        return self.postfix()

    def postfix(self) -> Expr:
        e = self.primary()
        while self.at(".") and self.peek().text in ("value", "next"):
            self.i += 1
            e = Proj(self.tok.text, e)
            self.i += 1
        return e

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            if self.peek().text == ":" and self.peek(2).kind == "ident":
                self.i += 3
                return Reg(f"{t.text}:{self.toks[self.i - 1].text}")
            self.i += 1
            return Lit(int(t.text))
        if self.accept("true"):
            return Lit(True)
        if self.accept("false"):
            return Lit(False)
        if self.accept("null"):
            return Lit(None)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.accept("node"):
            self.expect("(")
            v = self.expr()
            self.expect(",")
            n = self.expr()
            self.expect(")")
            return MkNode(v, n)
        if self.accept("["):
            amount = self.expr()
            self.expect("]")
            base = self.location()
            if not isinstance(base, Glob):
                raise self.error("address shift base must be a shared location", t)
            return Shift(amount, base)
        return self.location()

    def location(self):
        t = self.tok
        name = self.ident()
        if self.at("[", "("):
            close = "]" if self.tok.text == "[" else ")"
            self.i += 1
            idx = self.expr()
            self.expect(close)
            if name in self.scope:
                raise self.error(f"local {name!r} cannot be indexed", t)
            if name == HEAP:
                self.uses_heap = True
            return Glob(name, idx)
        if name in self.scope:
            return Reg(name)
        return Glob(name)

    # -- statements
    def block(self) -> Command:
        self.expect("{")
        c = self.stmts("}")
        self.expect("}")
        return c

    def stmts(self, end: str) -> Command:
        builders: list[Callable[[Command], Command]] = []
        while not self.at(end) and self.tok.kind != "eof":
            if self.accept(";"):
                continue
            builders.append(self.stmt())
            if not self.at(end) and self.tok.kind != "eof":
                if not self.accept(";") and not self.toks[self.i - 1].text == "}":
                    raise self.error(f"expected ';' or {end!r}, found {self.tok.text!r}")
        c: Command = SKIP
        for b in reversed(builders):
            c = b(c)
        return c

    def stmt(self) -> Callable[[Command], Command]:
        t = self.tok
        if self.accept("skip"):
            return lambda k: k
        if self.accept("fence"):
            if self.accept("."):
                if self.ident_text() != "st":
                    raise self.error("expected 'fence.st'", t)
                return self.action(Fence("store"))
            return self.action(Fence("full"))
        for word, kind in (("cfence", "ctrl"), ("storegate", "storegate"), ("loadgate", "loadgate"), ("eieio", "eieio")):
            if self.accept(word):
                return self.action(Fence(kind))
        if self.accept("lwfence"):
            return lambda k: Prefix(Fence("storegate"), Prefix(Fence("loadgate"), k))
        if self.accept("guard"):
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return self.action(Guard(e))
        if self.accept("atomic"):
            self.expect("{")
            body = []
            while not self.at("}"):
                if self.accept(";"):
                    continue
                body.extend(self.atomic_element())
            self.expect("}")
            if not body:
                raise self.error("empty atomic block", t)
            return self.action(Atomic(tuple(body)))
        if self.accept("if"):
            return self.if_rest()
        if self.accept("while"):
            cond = self.expr()
            body = self.block()
            return lambda k: While(cond, body, k, None)
        if self.accept("choice"):
            branches = [self.block()]
            while self.accept("or"):
                branches.append(self.block())
            def build(k, branches=branches):
                out = seq_compose(branches[-1], k)
                for b in reversed(branches[:-1]):
                    out = Choice(seq_compose(b, k), out)
                return out
            return build
        if self.accept("cas"):
            ok, fail = self.cas_args()
            return lambda k: Choice(Prefix(ok, k), Prefix(fail, k))
        actions = self.assignment()
        return lambda k: _chain(actions, k)

    def ident_text(self) -> str:
        t = self.tok
        self.i += 1
        return t.text

    def action(self, a) -> Callable[[Command], Command]:
        return lambda k: Prefix(a, k)

    def atomic_element(self) -> list:
        t = self.tok
        if self.accept("guard"):
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return [Guard(e)]
        if self.accept("fence"):
            if self.accept("."):
                self.ident_text()
                return [Fence("store")]
            return [Fence("full")]
        for word, kind in (("cfence", "ctrl"), ("storegate", "storegate"), ("loadgate", "loadgate"), ("eieio", "eieio")):
            if self.accept(word):
                return [Fence(kind)]
        if self.at("if", "while", "choice", "atomic", "cas"):
            raise self.error(f"{t.text!r} is not allowed inside atomic", t)
        return self.assignment()

    def cas_args(self):
        self.expect("(")
        loc = self.location()
        if not isinstance(loc, Glob):
            raise self.error("cas target must be a shared location")
        self.expect(",")
        old = self.expr()
        self.expect(",")
        new = self.expr()
        self.expect(")")
        ok = Atomic((Guard(Binop("=", loc, old)), Update(loc, new), Fence("full")))
        fail = Guard(Binop("!=", loc, old))
        return ok, fail

    def if_rest(self) -> Callable[[Command], Command]:
        negated = False
        if self.at("!", "not") and self.peek().text == "cas":
            self.i += 1
            negated = True
        if self.accept("cas"):
            ok, fail = self.cas_args()
            heads = (fail, ok) if negated else (ok, fail)
        else:
            cond = self.expr()
            heads = (Guard(cond), Guard(neg(cond)))
        then = self.block()
        other: Command = SKIP
        if self.accept("else"):
            if self.accept("if"):
                other = self.if_rest()(SKIP)
            else:
                other = self.block()
        return lambda k: Choice(Prefix(heads[0], seq_compose(then, k)), Prefix(heads[1], seq_compose(other, k)))

    def assignment(self) -> list:
        t = self.tok
        deref = bool(self.accept("*"))
        if self.at("["):
            target = self.primary()
        else:
            target = self.location()
        if self.at(".") and self.peek().text in ("next", "value"):
            self.i += 1
            fieldname = self.ident_text()
            self.expect(":=")
            rhs = self.expr()
            self.uses_heap = True
            cell = Glob(HEAP, target)
            if fieldname == "next":
                new = MkNode(Proj("value", cell), rhs)
            else:
                new = MkNode(rhs, Proj("next", cell))
            return [Update(cell, new)]
        if deref:
            raise self.error("'*' must be followed by a field store such as '*n.next := e'", t)
        self.expect(":=")
        if self.accept("new"):
            word = self.ident_text()
            if word != "Node":
                raise self.error("expected 'new Node(e)'", t)
            self.expect("(")
            v = self.expr()
            self.expect(")")
            self.uses_heap = True
            maxh = Glob(MAXH)
            return [Atomic((
                Update(Glob(HEAP, maxh), MkNode(v, Lit(None))),
                Update(target, maxh),
                Update(maxh, Binop("+", maxh, Lit(1))),
                Fence("full"),
            ))]
        return [Update(target, self.expr())]


def _chain(actions: list, k: Command) -> Command:
    for a in reversed(actions):
        k = Prefix(a, k)
    return k


def _globals_in(c, acc: set) -> None:
    from .expr import free_vars

    def expr_globals(e):
        for v in free_vars(e):
            if isinstance(v, Glob):
                acc.add(v)

    def action(a):
        match a:
            case Update(t, rhs):
                expr_globals(t)
                expr_globals(rhs)
            case Guard(cond):
                expr_globals(cond)
            case Atomic(body):
                for b in body:
                    action(b)

    stack = [c]
    seen = set()
    while stack:
        c = stack.pop()
        if c in seen:
            continue
        seen.add(c)
        match c:
            case Prefix(a, rest):
                action(a)
                stack.append(rest)
            case Choice(left, right):
                stack.extend((left, right))
            case While(cond, body, cont, _):
                expr_globals(cond)
                stack.extend((body, cont))


def parse_program(src: str) -> ParsedTest:
    """Parse a litmus file into a ``ParsedTest``."""
    headers, body = _split_headers(src)
    name, arch, expectations = "", None, []
    for kind, text, line in headers:
        if kind == "test":
            name = text
        elif kind == "arch":
            arch = text
        else:
            parts = text.split()
            if len(parts) < 2:
                raise ParseError("expect needs an architecture and a verdict", line, 1)
            if parts[1] not in ("Observable", "NotObservable", "NotObservableBounded"):
                raise ParseError(f"unknown verdict {parts[1]!r}", line, 1)
            expectations.append(Expectation(parts[0], parts[1], " ".join(parts[2:])))
    p = _Parser(tokenize(body))
    init: dict = {}
    processes = []
    declared: dict[int, set[str]] = {}
    quantifier, condition = None, None
    while p.tok.kind != "eof":
        t = p.tok
        if p.accept("init"):
            p.expect("{")
            while not p.at("}"):
                if p.accept(";"):
                    continue
                loc = p.location()
                if not isinstance(loc, Glob):
                    raise p.error("init entries must be shared locations", t)
                p.expect("=")
                from .expr import evaluate
                if loc.index is not None:
                    loc = Glob(loc.name, evaluate(loc.index))
                init[loc] = p.value()
            p.expect("}")
        elif p.accept("process"):
            pid = p.number()
            if pid <= 0 or pid in declared:
                raise p.error(f"process ids must be distinct positive integers, got {pid}", t)
            locs: dict = {}
            if p.accept("locals"):
                p.expect("{")
                while not p.at("}"):
                    if p.accept(";") or p.accept(","):
                        continue
                    n = p.ident()
                    p.expect("=")
                    locs[n] = p.value()
                p.expect("}")
            declared[pid] = set(locs)
            p.scope = set(locs)
            code = p.block()
            p.scope = set()
            processes.append(Process(pid, make_locals(locs), code))
        elif p.accept("exists", "forbidden"):
            if condition is not None:
                raise p.error("only one condition is allowed", t)
            quantifier = t.text
            p.expect("(")
            condition = p.expr()
            p.expect(")")
        else:
            raise p.error(f"unexpected {t.text!r}")
    if not processes:
        raise ParseError("no processes")
    if condition is None:
        raise ParseError("missing exists/forbidden condition")

    all_locals = set().union(*declared.values())
    clash = all_locals & {g.name for g in init}
    if clash:
        raise NameClashError(f"name(s) declared both as local and shared: {', '.join(sorted(clash))}")
    for proc in processes:
        used: set = set()
        _globals_in(proc.code, used)
        for g in used:
            if g.index is None and g.name in all_locals:
                raise UndeclaredLocalError(
                    f"process {proc.pid} uses {g.name!r}, which is a local of another process but not declared here"
                )
            if g.index is None:
                init.setdefault(g, 0)
    for v in _condition_vars(condition):
        if isinstance(v, Reg):
            pid_s, _, n = v.name.partition(":")
            if not pid_s.isdigit() or int(pid_s) not in declared or n not in declared[int(pid_s)]:
                raise ParseError(f"condition refers to unknown local {v.name!r}")
        elif v.index is None:
            init.setdefault(v, 0)
    if p.uses_heap:
        init.setdefault(Glob(MAXH), 0)
    system = System(tuple(sorted(init.items(), key=lambda kv: (kv[0].name, repr(kv[0].index)))), tuple(processes))
    return ParsedTest(name or "unnamed", system, quantifier, condition, arch, expectations)


def _condition_vars(e):
    from .expr import free_vars

    return free_vars(e)


def parse_command(src: str, local_names=()) -> Command:
    """Parse a statement sequence; ``local_names`` are registers."""
    p = _Parser(tokenize(src))
    p.scope = set(local_names)
    c = p.stmts("")
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return c


def parse_expr(src: str, local_names=()) -> Expr:
    p = _Parser(tokenize(src))
    p.scope = set(local_names)
    e = p.expr()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return e

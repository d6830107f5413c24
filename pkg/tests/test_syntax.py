import pickle

from weakmem.parser import parse_command, parse_expr
from weakmem.printer import show, show_expr
from weakmem.syntax import (
    Binop, Choice, Fence, Glob, Guard, Lit, NodeVal, Prefix, Reg, SKIP, Shift, Update, ite, neg, seq,
    seq_compose, value_eq,
)


def test_structural_equality_and_hash():
    a = Update(Glob("x"), Binop("+", Reg("r"), Lit(1)))
    b = Update(Glob("x"), Binop("+", Reg("r"), Lit(1)))
    assert a == b and hash(a) == hash(b)
    assert a != Update(Glob("y"), Binop("+", Reg("r"), Lit(1)))


def test_bool_and_int_literals_differ():
    assert Lit(True) != Lit(1)
    assert Lit(False) != Lit(0)
    assert len({Lit(True), Lit(1)}) == 2
    assert not value_eq(True, 1)


def test_pickle_roundtrip_keeps_equality():
    c = seq([Update(Glob("x"), Lit(1)), Fence("full"), Update(Reg("r"), Glob("y"))])
    d = pickle.loads(pickle.dumps(c))
    assert d == c and hash(d) == hash(c)


def test_seq_compose_keeps_relaxed_prefixes():
    a = Prefix(Update(Glob("x"), Lit(1)), SKIP)
    b = Prefix(Update(Glob("y"), Lit(2)), SKIP)
    c = seq_compose(a, b)
    assert c == Prefix(Update(Glob("x"), Lit(1)), Prefix(Update(Glob("y"), Lit(2)), SKIP))
    assert seq_compose(SKIP, b) == b and seq_compose(a, SKIP) == a


def test_if_desugars_to_guarded_choice():
    c = ite(Binop("=", Reg("r"), Lit(1)), seq([Update(Glob("x"), Lit(1))]))
    assert isinstance(c, Choice)
    assert c.left.head == Guard(Binop("=", Reg("r"), Lit(1)))
    assert c.right.head == Guard(neg(Binop("=", Reg("r"), Lit(1))))
    assert c.right.tail == SKIP


def test_neg_simplifies():
    assert neg(Lit(True)) == Lit(False)
    e = Binop("<", Reg("a"), Reg("b"))
    assert neg(neg(e)) == e


def test_node_values():
    assert NodeVal(1, None) == NodeVal(1, None)
    assert NodeVal(1, None) != NodeVal(1, 0)


def test_printer_roundtrip_expressions():
    for src in ["r + 1", "x = 1 and not (r < 2)", "[r xor r]x", "tasks[h mod 4]", "(a + b) * c", "node(1, null).next"]:
        e = parse_expr(src, {"r", "h", "a", "b", "c"})
        assert parse_expr(show_expr(e), {"r", "h", "a", "b", "c"}) == e


def test_printer_command():
    c = parse_command("x := 1; fence; r := y; cfence; fence.st", {"r"})
    assert show(c) == "x := 1; fence; r := y; cfence; fence.st"


def test_shift_term():
    e = Shift(Binop("xor", Reg("r"), Reg("r")), Glob("x"))
    assert show_expr(e) == "[r xor r]x"

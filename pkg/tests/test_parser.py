import pytest

from weakmem.parser import NameClashError, ParseError, UndeclaredLocalError, parse_command, parse_program
from weakmem.syntax import Choice, Fence, Glob, Guard, Lit, NodeVal, Prefix, Shift


SB = """
test SB  # store buffering
expect tso Observable literature
expect sc NotObservable oracle
init { x = 0; y = 0 }
process 1 locals { r1 = 0 } { x := 1; r1 := y }
process 2 locals { r2 = 0 } { y := 1; r2 := x }
exists (1:r1 = 0 and 2:r2 = 0)
"""


def test_parse_sb():
    t = parse_program(SB)
    assert t.name == "SB" and t.quantifier == "exists"
    assert [p.pid for p in t.system.processes] == [1, 2]
    assert dict(t.system.init) == {Glob("x"): 0, Glob("y"): 0}
    assert [(e.arch, e.verdict, e.source) for e in t.expectations] == [
        ("tso", "Observable", "literature"), ("sc", "NotObservable", "oracle")]


def test_forbidden_mode():
    t = parse_program(SB.replace("exists", "forbidden"))
    assert t.quantifier == "forbidden"


def test_ppo017_shift_and_empty_conditional():
    t = parse_program("""
init { x = 0; y = 0; z = 0 }
process 2 locals { r0 = 0; r2 = 0; r4 = 0 } { r0 := y; r2 := [r0 xor r0]z; r4 := z; if r4 = r4 { skip } else { skip } }
exists (2:r0 = 1)
""")
    code = t.system.processes[0].code
    assert code.tail.head.rhs == Shift(parse_command("r := r0 xor r0", {"r", "r0"}).head.rhs, Glob("z"))
    cond = code.tail.tail.tail
    assert isinstance(cond, Choice)
    assert cond.left.head == Guard(parse_command("guard(r4 = r4)", {"r4"}).head.cond)


def test_statements():
    c = parse_command("fence; fence.st; cfence; storegate; loadgate; eieio", set())
    kinds = []
    while isinstance(c, Prefix):
        kinds.append(c.head.kind)
        c = c.tail
    assert kinds == ["full", "store", "ctrl", "storegate", "loadgate", "eieio"]
    lw = parse_command("lwfence", set())
    assert lw.head == Fence("storegate") and lw.tail.head == Fence("loadgate")


def test_cas_is_atomic_choice():
    c = parse_command("cas(x, r, 2)", {"r"})
    assert isinstance(c, Choice)


def test_new_node_desugars_to_heap_store():
    t = parse_program("process 1 locals { n = null } { n := new Node(5); *n.next := 7 } exists (true)")
    mem = dict(t.system.init)
    assert mem[Glob("maxh")] == 0
    text = str(t.system.processes[0].code)
    assert "heap" in text and "maxh" in text


def test_indexed_init():
    t = parse_program("init { tasks[0] = 99; tasks[1] = 99 } process 1 { skip } exists (tasks[1] = 99)")
    assert dict(t.system.init)[Glob("tasks", Lit(1))] == 99


@pytest.mark.parametrize(
    "src, err",
    [
        ("process 1 { x := } exists (true)", ParseError),
        ("process 1 { skip } process 1 { skip } exists (true)", ParseError),
        ("process 1 { skip }", ParseError),
        ("process 1 { skip } exists (3:r = 1)", ParseError),
        ("init { r = 0 } process 1 locals { r = 0 } { skip } exists (true)", NameClashError),
        ("process 1 locals { r = 0 } { skip } process 2 { r := 1 } exists (true)", UndeclaredLocalError),
        ("expect tso Maybe\nprocess 1 { skip } exists (true)", ParseError),
    ],
)
def test_errors(src, err):
    with pytest.raises(err):
        parse_program(src)


def test_error_positions():
    with pytest.raises(ParseError) as info:
        parse_program("process 1 {\n  x := ;\n} exists (true)")
    assert info.value.line == 2


def test_undeclared_globals_default_to_zero():
    t = parse_program("process 1 { x := 1 } exists (y = 0)")
    assert dict(t.system.init) == {Glob("x"): 0, Glob("y"): 0}


def test_node_literal_in_init():
    t = parse_program("init { heap[0] = node(1, null) } process 1 { skip } exists (true)")
    assert dict(t.system.init)[Glob("heap", Lit(0))] == NodeVal(1, None)

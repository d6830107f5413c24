from weakmem.parser import parse_command, parse_program
from weakmem.reorder import architecture
from weakmem.semantics import BOUND_HIT, command_steps, lift_action, unfold
from weakmem.syntax import (
    SKIP, Binop, Glob, Guard, GuardResidual, Lit, Load, Prefix, Reg, Store, TruePrefix, Update, While, neg,
)

L = {"r", "r1", "r2", "b"}
NMCA, TSO, SC = architecture("arm-nmca"), architecture("tso"), architecture("sc")


def C(src):
    return parse_command(src, L)


def labels(arch, c):
    return {st.label for st in command_steps(arch, c)}


def test_forwarded_promotion():
    c = C("r := 1; x := r")
    steps = {st.label: st.next for st in command_steps(NMCA, c)}
    assert Update(Glob("x"), Lit(1)) in steps
    assert steps[Update(Glob("x"), Lit(1))] == Prefix(Update(Reg("r"), Lit(1)), SKIP)


def test_true_prefix_has_one_step():
    c = TruePrefix(Update(Glob("x"), Lit(1)), C("r := y"))
    assert [st.label for st in command_steps(NMCA, c)] == [Update(Glob("x"), Lit(1))]


def test_sc_only_program_order():
    assert labels(SC, C("x := 1; r := y")) == {Update(Glob("x"), Lit(1))}
    assert labels(TSO, C("x := 1; r := y")) == {Update(Glob("x"), Lit(1)), Update(Reg("r"), Glob("y"))}


def test_write_elimination_step():
    c = C("x := 1; x := 2; r := y")
    elim = [st for st in command_steps(NMCA, c) if st.rule == "write-elim"]
    assert len(elim) == 1
    assert elim[0].label == Update(Glob("x"), Lit(2)) and elim[0].next == C("r := y")
    off = architecture("arm-nmca", write_elimination=False)
    assert not [st for st in command_steps(off, c) if st.rule == "write-elim"]


def test_load_speculation_inserts_check():
    c = C("r1 := [b]x; r2 := x")
    spec = [st for st in command_steps(NMCA, c) if st.rule == "load-spec"]
    assert len(spec) == 1
    assert spec[0].label == Update(Reg("r2"), Glob("x"))
    assert spec[0].next.tail.head == Guard(Binop("=", Reg("r1"), Reg("r2")))
    assert not [st for st in command_steps(architecture("arm-nmca", load_speculation=False), c) if st.rule == "load-spec"]


def test_exhausted_loop_only_exits():
    w = While(Binop("=", Reg("r"), Lit(0)), C("r := x"), SKIP, 0)
    nxt, hit = unfold(w, 2)
    assert hit and nxt == Prefix(Guard(neg(Binop("=", Reg("r"), Lit(0)))), SKIP)
    st = command_steps(NMCA, w)
    assert len(st) == 1 and BOUND_HIT in st[0].meta


def test_lift_action():
    locs = (("r", 1),)
    assert lift_action(Update(Glob("x"), Reg("r")), 1, locs) == Store(Glob("x"), Lit(1))
    assert lift_action(Guard(Binop("=", Reg("r"), Lit(1))), 1, locs) == GuardResidual(Lit(True))
    assert lift_action(Guard(Binop("=", Reg("r"), Lit(0))), 1, locs) is None
    assert lift_action(Update(Reg("r"), Glob("x")), 1, locs) == Load("r", Glob("x"))
    assert lift_action(Update(Reg("r"), Binop("+", Reg("r"), Lit(1))), 1, locs) == ("tau", "r", 2)


def test_sb_reordered_trace_exists_under_tso():
    from weakmem.explorer import enumerate_traces
    from weakmem.printer import show_label

    t = parse_program("""
test SB
init { x = 0; y = 0 }
process 1 locals { r1 = 0 } { x := 1; r1 := y }
process 2 locals { r2 = 0 } { y := 1; r2 := x }
exists (true)
""")
    traces = {tuple(show_label(l) for l in tr) for tr in enumerate_traces(t.system, TSO)}
    assert ("1: y = 0", "2: x = 0", "1: x := 1", "2: y := 1") in traces

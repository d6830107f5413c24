import pytest

from weakmem.explorer import (
    NOT_OBSERVABLE, NOT_OBSERVABLE_BOUNDED, OBSERVABLE, CapExceeded, Options, check_condition, explore,
    initial_config, system_steps, Stats,
)
from weakmem.parser import parse_program
from weakmem.reorder import ALL_ARCHS, architecture
from weakmem.semantics import is_terminated

SB = """
init { x = 0; y = 0 }
process 1 locals { r1 = 0 } { x := 1; r1 := y }
process 2 locals { r2 = 0 } { y := 1; r2 := x }
exists (1:r1 = 0 and 2:r2 = 0)
"""

LOOP = """
init { x = 0 }
process 1 locals { r = 0 } { while r = 0 { r := x } }
process 2 { x := 1 }
exists (1:r = 1)
"""


def verdict(src, arch, **kw):
    t = parse_program(src)
    return check_condition(explore(t.system, architecture(arch), Options(**kw)), t.condition)


@pytest.mark.parametrize("arch, expected", [("sc", NOT_OBSERVABLE), ("tso", OBSERVABLE), ("arm-nmca", OBSERVABLE)])
def test_sb(arch, expected):
    assert verdict(SB, arch).kind == expected


def test_witness_replays():
    t = parse_program(SB)
    arch = architecture("tso")
    v = check_condition(explore(t.system, arch), t.condition)
    cfg = initial_config(t.system, arch)
    for lab in v.witness:
        nxt = [c for l, c, _ in system_steps(arch, cfg, 2, Stats()) if l == lab]
        assert nxt, lab
        cfg = nxt[0]
    assert is_terminated(cfg.procs)


def test_bounded_verdict_and_monotone_unroll():
    v = verdict(LOOP.replace("1:r = 1", "1:r = 2"), "sc")
    assert v.kind == NOT_OBSERVABLE_BOUNDED
    t = parse_program(LOOP)
    sizes = [len(explore(t.system, architecture("arm-nmca"), Options(unroll=k)).finals) for k in range(4)]
    assert sizes == sorted(sizes)
    prev = set()
    for k in range(4):
        cur = set(explore(t.system, architecture("arm-nmca"), Options(unroll=k)).finals)
        assert prev <= cur
        prev = cur


def test_unroll_irrelevant_without_loops(arch):
    t = parse_program(SB)
    a = set(explore(t.system, arch, Options(unroll=0)).finals)
    b = set(explore(t.system, arch, Options(unroll=3)).finals)
    assert a == b


def test_cap_carries_partial_result():
    t = parse_program(SB)
    with pytest.raises(CapExceeded) as info:
        explore(t.system, architecture("arm-nmca"), Options(max_configs=5))
    assert info.value.partial.stats.configurations > 5


def test_dedup_does_not_change_finals():
    from weakmem.explorer import _final_state, enumerate_traces

    t = parse_program(SB)
    for arch in ALL_ARCHS:
        res = explore(t.system, arch)
        cfg0 = initial_config(t.system, arch)
        finals = set()
        for tr in enumerate_traces(t.system, arch):
            # replay every path without state merging
            frontier = {cfg0}
            for lab in tr:
                frontier = {c for f in frontier for l, c, _ in system_steps(arch, f, 2, Stats()) if l == lab}
            finals |= {_final_state(c) for c in frontier if is_terminated(c.procs)}
        assert finals == set(res.finals), arch


def test_atomic_lock_step():
    v = verdict("""
init { locked = false }
process 1 { atomic { guard(!locked); locked := true; fence } }
exists (locked = true)
""", "arm-nmca")
    assert v.kind == OBSERVABLE


def test_speculative_null_read_is_pruned():
    t = parse_program("""
init { heap[0] = node(1, null); p = null }
process 1 locals { h = null; v = 0 } { h := p; if h != null { v := heap(h).value } }
exists (1:v = 1)
""")
    res = explore(t.system, architecture("arm-nmca"))
    assert check_condition(res, t.condition).kind == NOT_OBSERVABLE


FORWARD_RACE = """
init { y = 0 }
process 1 locals { r1 = 0 } { y := 2; r1 := y }
process 2 { y := 1 }
exists (1:r1 = 1)
"""


@pytest.mark.parametrize("src", [SB, LOOP, FORWARD_RACE])
def test_eager_local_steps_keep_final_states(src, arch):
    t = parse_program(src)
    full = explore(t.system, arch, Options(reduce=False))
    reduced = explore(t.system, arch, Options(reduce=True))
    assert set(full.finals) == set(reduced.finals)
    assert reduced.stats.configurations <= full.stats.configurations
    assert full.stats.bound_hit == reduced.stats.bound_hit


def test_forwarded_load_does_not_hide_racing_store():
    # the load may still read the other thread's store after its own store lands
    assert verdict(FORWARD_RACE, "power").kind == OBSERVABLE

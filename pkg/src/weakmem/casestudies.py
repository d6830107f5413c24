"""Lock, Treiber stack and Chase-Lev deque, with abstract specifications.

A combination such as ``"push;pop|pop"`` lists processes separated by ``|``
and operations within a process separated by ``;``.  Each operation instance
gets its own locals (suffixed with its position), and pushes/puts receive
distinct values 1, 2, ... in order of appearance.

Conformance compares projected final states: the concrete set must be a
subset of the abstract one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .explorer import CapExceeded, FinalState, Options, explore
from .parser import parse_program
from .reorder import Architecture, architecture
from .syntax import Glob, Lit, NodeVal

RETRY = -1
EMPTY = -2
FAIL = -3
SENTINEL = 99
DEQUE_SIZE = 4
STACK_CELLS = 4

# ------------------------------------------------------------------ lock

LOCK_PROCESS = """
process {pid} locals {{ success = false }} {{
  while !success {{
    choice {{ atomic {{ guard(!locked); locked := true; fence }}; success := true }}
    or {{ guard(locked); success := false }}
  }};
  cs{pid} := true;{check}
  cs{pid} := false;{unlock_fence}
  locked := false
}}
"""


def lock_source(n: int = 2, fenced_unlock: bool = False) -> str:
    """Process 1 raises ``conflict`` if it sees any other process inside its critical section."""
    procs = []
    for i in range(1, n + 1):
        check = "".join(f"\n  if cs{j} {{ conflict := true }};" for j in range(2, n + 1)) if i == 1 else ""
        procs.append(LOCK_PROCESS.format(pid=i, check=check, unlock_fence="\n  fence;" if fenced_unlock else ""))
    flags = "; ".join(f"cs{i} = false" for i in range(1, n + 1))
    name = "lock-fenced" if fenced_unlock else "lock"
    return (
        f"test {name}\n"
        f"init {{ locked = false; conflict = false; {flags} }}\n"
        f"{''.join(procs)}"
        "exists (conflict = true)\n"
    )


# --------------------------------------------------------------- treiber

TREIBER_OPS = {
    "push": (
        "head{k} = null; n{k} = null; done{k} = false",
        """
  n{k} := new Node({v});
  while !done{k} {{
    head{k} := Head;
    *n{k}.next := head{k};
    if cas(Head, head{k}, n{k}) {{ done{k} := true }}
  }}""",
    ),
    "pop": (
        f"head{{k}} = null; n{{k}} = null; ret{{k}} = {RETRY}",
        f"""
  while ret{{k}} = {RETRY} {{{{
    head{{k}} := Head;
    if head{{k}} = null {{{{ ret{{k}} := {EMPTY} }}}}
    else {{{{
      n{{k}} := heap(head{{k}});
      if cas(Head, head{{k}}, n{{k}}.next) {{{{ ret{{k}} := n{{k}}.value }}}}
    }}}}
  }}}}""",
    ),
}

ABSTRACT_STACK_OPS = {
    "push": ("", "atomic {{ s[size] := {v}; size := size + 1 }}"),
    "pop": (
        f"ret{{k}} = {RETRY}",
        f"""choice {{{{ atomic {{{{ guard(size = 0); ret{{k}} := {EMPTY} }}}} }}}}
  or {{{{ atomic {{{{ guard(size > 0); ret{{k}} := s[size - 1]; size := size - 1 }}}} }}}}""",
    ),
}

# ------------------------------------------------------------- chase-lev

_STEAL_ORIGINAL = f"""
  h{{k}} := head;
  fence;
  t{{k}} := tail;
  cfence;
  if h{{k}} < t{{k}} {{{{
    ret{{k}} := tasks[h{{k}} mod {DEQUE_SIZE}];
    cfence;
    if !cas(head, h{{k}}, h{{k}} + 1) {{{{ ret{{k}} := {FAIL} }}}}
  }}}} else {{{{ ret{{k}} := {EMPTY} }}}}"""

_STEAL_NO_FIRST = _STEAL_ORIGINAL.replace("  cfence;\n  if", "  if", 1)

_STEAL_FIXED = f"""
  h{{k}} := head;
  fence;
  t{{k}} := tail;
  if h{{k}} < t{{k}} {{{{
    cfence;
    ret{{k}} := tasks[h{{k}} mod {DEQUE_SIZE}];
    if !cas(head, h{{k}}, h{{k}} + 1) {{{{ ret{{k}} := {FAIL} }}}}
  }}}} else {{{{ ret{{k}} := {EMPTY} }}}}"""

_PUT = f"""
  t{{k}} := tail;
  tasks[t{{k}} mod {DEQUE_SIZE}] := {{v}};
  fence;
  tail := t{{k}} + 1"""

_TAKE = f"""
  t{{k}} := tail - 1;
  tail := t{{k}};
  fence;
  h{{k}} := head;
  if h{{k}} <= t{{k}} {{{{
    ret{{k}} := tasks[t{{k}} mod {DEQUE_SIZE}];
    if h{{k}} = t{{k}} {{{{
      if !cas(head, h{{k}}, h{{k}} + 1) {{{{ ret{{k}} := {EMPTY} }}}};
      tail := t{{k}} + 1
    }}}}
  }}}} else {{{{
    ret{{k}} := {EMPTY};
    tail := t{{k}} + 1
  }}}}"""

_DEQUE_LOCALS = "h{k} = 0; t{k} = 0; ret{k} = 0"


def _deque_ops(steal: str) -> dict:
    return {
        "put": ("t{k} = 0", _PUT),
        "take": (_DEQUE_LOCALS, _TAKE),
        "steal": (_DEQUE_LOCALS, steal),
    }


ABSTRACT_DEQUE_OPS = {
    "put": ("", "atomic {{ q[hi] := {v}; hi := hi + 1 }}"),
    "take": (
        "ret{k} = 0",
        f"""choice {{{{ atomic {{{{ guard(hi = lo); ret{{k}} := {EMPTY} }}}} }}}}
  or {{{{ atomic {{{{ guard(hi > lo); ret{{k}} := q[hi - 1]; hi := hi - 1 }}}} }}}}""",
    ),
    "steal": (
        "ret{k} = 0",
        f"""choice {{{{ atomic {{{{ guard(hi = lo); ret{{k}} := {EMPTY} }}}} }}}}
  or {{{{ atomic {{{{ guard(hi > lo); ret{{k}} := q[lo]; lo := lo + 1 }}}} }}}}""",
    ),
}


# ----------------------------------------------------------- assembling


def parse_combination(combo: str) -> list[list[str]]:
    procs = [[op.strip() for op in part.split(";") if op.strip()] for part in combo.split("|")]
    if not procs or any(not p for p in procs):
        raise ValueError(f"malformed combination {combo!r}")
    return procs


def build_source(name: str, ops: dict, combo: str, init: str) -> str:
    """Instantiate operation templates into a litmus-style program."""
    procs = parse_combination(combo)
    value = 0
    k = 0
    lines = [f"test {name} {combo}", f"init {{ {init} }}"]
    for pid, names in enumerate(procs, start=1):
        locs, body = [], []
        for op in names:
            if op not in ops:
                raise ValueError(f"unknown operation {op!r}; expected one of {', '.join(ops)}")
            k += 1
            if op in ("push", "put"):
                value += 1
            loc_t, body_t = ops[op]
            if loc_t:
                locs.append(loc_t.format(k=k))
            body.append(body_t.format(k=k, v=value))
        lines.append(f"process {pid} locals {{ {'; '.join(locs)} }} {{{';'.join(body)}\n}}")
    lines.append("exists (true)")
    return "\n".join(lines) + "\n"


def op_slots(combo: str) -> list[tuple[int, int, str]]:
    """``(pid, k, op)`` for each operation instance, in numbering order."""
    out, k = [], 0
    for pid, names in enumerate(parse_combination(combo), start=1):
        for op in names:
            k += 1
            out.append((pid, k, op))
    return out


# ----------------------------------------------------------- projections


def _mem(fs: FinalState) -> dict:
    return {(g.name, g.index.value if g.index is not None else None): v for g, v in fs.memory}


def _returns(fs: FinalState, combo: str, returning: tuple) -> Optional[tuple]:
    env = {pid: dict(locs) for pid, locs in fs.locals}
    out = []
    for pid, k, op in op_slots(combo):
        if op in returning:
            out.append((k, env[pid][f"ret{k}"]))
    return tuple(out)


def stack_projection(combo: str) -> Callable[[FinalState], Optional[tuple]]:
    def project(fs: FinalState):
        mem = _mem(fs)
        items = []
        p = mem[("Head", None)]
        while p is not None:
            node = mem[("heap", p)]
            if not isinstance(node, NodeVal):
                return ("corrupt", p)
            items.append(node.value)
            p = node.next
            if len(items) > 16:
                return ("cycle",)
        return tuple(items), _returns(fs, combo, ("pop",))

    return project


def abstract_stack_projection(combo: str):
    def project(fs: FinalState):
        mem = _mem(fs)
        size = mem[("size", None)]
        items = tuple(mem[("s", i)] for i in range(size - 1, -1, -1))
        return items, _returns(fs, combo, ("pop",))

    return project


def deque_projection(combo: str):
    def project(fs: FinalState):
        mem = _mem(fs)
        rets = _returns(fs, combo, ("take", "steal"))
        if any(v == FAIL for _, v in rets):
            return None
        h, t = mem[("head", None)], mem[("tail", None)]
        items = tuple(mem[("tasks", i % DEQUE_SIZE)] for i in range(h, t))
        return items, rets

    return project


def abstract_deque_projection(combo: str):
    def project(fs: FinalState):
        mem = _mem(fs)
        lo, hi = mem[("lo", None)], mem[("hi", None)]
        return tuple(mem[("q", i)] for i in range(lo, hi)), _returns(fs, combo, ("take", "steal"))

    return project


# ------------------------------------------------------------ case study


@dataclass
class CaseStudy:
    name: str
    concrete: Callable[[str], str]
    abstract: Optional[Callable[[str], str]]
    project: Optional[Callable]
    project_abstract: Optional[Callable]
    default_combination: str
    description: str = ""


def _stack_init() -> str:
    return "Head = null"


def _abstract_stack_init() -> str:
    cells = "; ".join(f"s[{i}] = 0" for i in range(STACK_CELLS))
    return f"size = 0; {cells}"


def _deque_init() -> str:
    cells = "; ".join(f"tasks[{i}] = {SENTINEL}" for i in range(DEQUE_SIZE))
    return f"head = 0; tail = 0; {cells}"


def _abstract_deque_init() -> str:
    cells = "; ".join(f"q[{i}] = 0" for i in range(DEQUE_SIZE))
    return f"lo = 0; hi = 0; {cells}"


CASE_STUDIES = {
    "lock": CaseStudy(
        "lock",
        lambda combo: lock_source(len(parse_combination(combo))),
        None,
        None,
        None,
        "lock|lock",
        "test-and-set lock with an unfenced unlock; conforms iff conflict is never set",
    ),
    "lock-fenced": CaseStudy(
        "lock-fenced",
        lambda combo: lock_source(len(parse_combination(combo)), fenced_unlock=True),
        None,
        None,
        None,
        "lock|lock",
        "the same lock with a full fence before the unlocking store",
    ),
    "treiber": CaseStudy(
        "treiber",
        lambda combo: build_source("treiber", TREIBER_OPS, combo, _stack_init()),
        lambda combo: build_source("abstract-stack", ABSTRACT_STACK_OPS, combo, _abstract_stack_init()),
        stack_projection,
        abstract_stack_projection,
        "push|pop",
        "Treiber stack against an atomic abstract stack",
    ),
    "chase-lev-original": CaseStudy(
        "chase-lev-original",
        lambda combo: build_source("chase-lev-original", _deque_ops(_STEAL_ORIGINAL), combo, _deque_init()),
        lambda combo: build_source("abstract-deque", ABSTRACT_DEQUE_OPS, combo, _abstract_deque_init()),
        deque_projection,
        abstract_deque_projection,
        "put|steal",
        "work-stealing deque with the published fence placement",
    ),
    "chase-lev-fixed": CaseStudy(
        "chase-lev-fixed",
        lambda combo: build_source("chase-lev-fixed", _deque_ops(_STEAL_FIXED), combo, _deque_init()),
        lambda combo: build_source("abstract-deque", ABSTRACT_DEQUE_OPS, combo, _abstract_deque_init()),
        deque_projection,
        abstract_deque_projection,
        "put|steal",
        "deque with the first control fence removed and the second moved before the task load",
    ),
    "chase-lev-no-first-cfence": CaseStudy(
        "chase-lev-no-first-cfence",
        lambda combo: build_source("chase-lev-no-first-cfence", _deque_ops(_STEAL_NO_FIRST), combo, _deque_init()),
        lambda combo: build_source("abstract-deque", ABSTRACT_DEQUE_OPS, combo, _abstract_deque_init()),
        deque_projection,
        abstract_deque_projection,
        "put|steal",
        "published placement with only the first control fence deleted",
    ),
}


@dataclass
class CaseResult:
    name: str
    combination: str
    arch: str
    conforms: Optional[bool]
    counterexample: Optional[tuple] = None
    witness: Optional[tuple] = None
    concrete: set = field(default_factory=set)
    abstract: set = field(default_factory=set)
    bound_hit: bool = False
    stats: dict = field(default_factory=dict)
    error: Optional[str] = None


def concrete_test(name: str, combo: Optional[str] = None):
    cs = CASE_STUDIES[name]
    return parse_program(cs.concrete(combo or cs.default_combination))


def abstract_finals(cs: CaseStudy, combo: str, opts: Options) -> set:
    """Abstract behaviours; atomic operations on a multicopy-atomic store."""
    test = parse_program(cs.abstract(combo))
    res = explore(test.system, architecture("sc"), opts)
    proj = cs.project_abstract(combo)
    return {proj(fs) for fs in res.finals}


def run_case_study(name: str, combo: Optional[str] = None, arch: Architecture | str = "arm-nmca",
                   opts: Options = Options()) -> CaseResult:
    if name not in CASE_STUDIES:
        raise ValueError(f"unknown case study {name!r}; expected one of {', '.join(CASE_STUDIES)}")
    cs = CASE_STUDIES[name]
    combo = combo or cs.default_combination
    if isinstance(arch, str):
        arch = architecture(arch)
    test = parse_program(cs.concrete(combo))
    try:
        res = explore(test.system, arch, opts)
    except CapExceeded as exc:
        return CaseResult(name, combo, arch.name, None, stats=exc.partial.stats.as_dict(), error=str(exc))
    stats = res.stats.as_dict()
    if cs.abstract is None:  # lock-style: conflict flag
        conflict = Glob("conflict")
        for fs, wit in res.finals.items():
            if dict(fs.memory).get(conflict) is True:
                return CaseResult(name, combo, arch.name, False, ("conflict",), wit,
                                  bound_hit=res.bound_hit, stats=stats)
        return CaseResult(name, combo, arch.name, True, bound_hit=res.bound_hit, stats=stats)
    proj = cs.project(combo)
    concrete = {}
    for fs, wit in res.finals.items():
        p = proj(fs)
        if p is not None:
            concrete.setdefault(p, wit)
    spec = abstract_finals(cs, combo, opts)
    bad = sorted((p for p in concrete if p not in spec), key=repr)
    return CaseResult(
        name, combo, arch.name, not bad,
        counterexample=bad[0] if bad else None,
        witness=concrete[bad[0]] if bad else None,
        concrete=set(concrete), abstract=spec,
        bound_hit=res.bound_hit, stats=stats,
    )


# ------------------------------------------------------ fence redundancy


def steal_command(variant: str = "original"):
    """The steal operation alone as a command over registers h1, t1, ret1."""
    from .parser import parse_command

    body = {"original": _STEAL_ORIGINAL, "no-first-cfence": _STEAL_NO_FIRST, "fixed": _STEAL_FIXED}[variant]
    return parse_command(body.format(k=1), ("h1", "t1", "ret1"))


@dataclass
class RedundancyResult:
    steal_forward: bool
    steal_backward: bool
    system_forward: bool
    system_backward: bool

    @property
    def holds(self) -> bool:
        return self.steal_forward and self.steal_backward and self.system_forward and self.system_backward


def first_cfence_redundant(arch: Architecture | str = "arm-nmca", combo: str = "put|steal",
                           budget: int = 2) -> RedundancyResult:
    """Trace equality between steal with and without its first control fence.

    Control fences are hidden from the traces, since they are the very actions being
    compared; everything else, including every load and store, is observed.
    """
    from .refinement import check_refinement

    if isinstance(arch, str):
        arch = architecture(arch)
    hide = frozenset({"ctrl"})
    a, b = steal_command("original"), steal_command("no-first-cfence")
    sa = concrete_test("chase-lev-original", combo).system
    sb = concrete_test("chase-lev-no-first-cfence", combo).system
    kw = dict(budget=budget, hide=hide)
    return RedundancyResult(
        bool(check_refinement(arch, a, b, **kw)),
        bool(check_refinement(arch, b, a, **kw)),
        bool(check_refinement(arch, sa, sb, **kw)),
        bool(check_refinement(arch, sb, sa, **kw)),
    )

"""Command-line driver.

Exit codes: 0 success or agreement, 1 disagreement or non-conformance,
2 usage or parse error, 3 exploration cap reached.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .casestudies import CASE_STUDIES, run_case_study
from .explorer import DEFAULT_MAX_CONFIGS, OBSERVABLE, Options
from .litmus import INCONCLUSIVE, Report, corpus_files, expectation_for, load_test, run_corpus, run_test
from .parser import ParseError
from .printer import FENCE_NAMES, show_label
from .refinement import RefinementCapExceeded, check_refinement
from .reorder import ALIASES, Architecture, architecture
from .semantics import UndeclaredLocal

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3
FENCE_KIND_NAMES = {v: k for k, v in FENCE_NAMES.items()}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--arch", help=f"one of: {', '.join(sorted(ALIASES))}")
    common.add_argument("--unroll", type=_nonneg, default=2, help="loop unrolling bound (default 2)")
    common.add_argument("--max-configs", type=_nonneg, default=DEFAULT_MAX_CONFIGS,
                        help="configuration cap (default 10^7)")
    common.add_argument("--witness", action="store_true", help="print a witness trace")
    common.add_argument("--format", choices=("text", "structured"), default="text")
    flags = common.add_mutually_exclusive_group()
    flags.add_argument("--write-elimination", dest="write_elimination", action="store_true", default=None)
    flags.add_argument("--no-write-elimination", dest="write_elimination", action="store_false")
    spec = common.add_mutually_exclusive_group()
    spec.add_argument("--load-speculation", dest="load_speculation", action="store_true", default=None)
    spec.add_argument("--no-load-speculation", dest="load_speculation", action="store_false")
    common.add_argument("--seed", type=int, help="accepted for compatibility; exploration is deterministic")

    p = _Parser(prog="weakmem", description="Reordering semantics for weak memory models.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    r = sub.add_parser("run", parents=[common], help="run one litmus test")
    r.add_argument("file")
    c = sub.add_parser("corpus", parents=[common], help="run a directory of litmus tests")
    c.add_argument("dir")
    f = sub.add_parser("refine", parents=[common], help="check that B's traces are traces of A")
    f.add_argument("file_a")
    f.add_argument("file_b")
    f.add_argument("--both", action="store_true", help="also check the converse (trace equality)")
    f.add_argument("--hide", action="append", default=[], metavar="FENCE",
                   help=f"fence kind to treat as silent ({', '.join(FENCE_KIND_NAMES)}); repeatable")
    k = sub.add_parser("case", parents=[common], help="check a case study against its abstract specification")
    k.add_argument("name", choices=sorted(CASE_STUDIES))
    k.add_argument("combination", nargs="?", help="e.g. 'push|pop' or 'push;pop|pop'")
    return p


def _arch(args, fallback: str | None = "arm-nmca") -> Architecture | None:
    name = args.arch or fallback
    if name is None:
        return None
    return architecture(name, write_elimination=args.write_elimination, load_speculation=args.load_speculation)


def _opts(args) -> Options:
    return Options(unroll=args.unroll, max_configs=args.max_configs, witnesses=True)


def _emit(args, doc: dict, text: str) -> None:
    if args.format == "structured":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(text)


def _cmd_run(args) -> int:
    test = load_test(args.file)
    arch = _arch(args, test.arch or "arm-nmca")
    row = run_test(test, arch, _opts(args))
    lines = [f"{row.test} [{row.arch}] {row.quantifier}: {row.verdict}"]
    if row.expected:
        lines.append(f"expected {row.expected}: {'agrees' if row.agrees else 'DISAGREES' if row.agrees is False else 'undetermined'}")
    if args.witness and row.witness is not None:
        lines.append("witness:")
        lines += [f"  {show_label(l)}" for l in row.witness]
    lines.append(f"{len(row.finals)} final states, {row.stats['configurations']} configurations, "
                 f"{row.stats['seconds']:.3f}s" + (" (loop bound reached)" if row.stats["bound_hit"] else ""))
    if row.error:
        lines.append(f"cap: {row.error}")
    _emit(args, row.as_dict(with_witness=args.witness), "\n".join(lines))
    if row.verdict == INCONCLUSIVE:
        return EXIT_CAP
    return EXIT_FAIL if row.agrees is False else EXIT_OK


def _applies(test, arch: Architecture) -> bool:
    if test.arch is not None:
        return ALIASES.get(test.arch.lower()) is arch.model
    return not test.expectations or expectation_for(test, arch) is not None


def _cmd_corpus(args) -> int:
    root = Path(args.dir)
    if not root.exists():
        raise FileNotFoundError(f"no such corpus: {root}")
    files = corpus_files(root)
    tests = {p: load_test(p) for p in files}
    if args.arch:
        arches = [_arch(args)]
    else:
        names: list = []
        for t in tests.values():
            for n in [t.arch] if t.arch else [e.arch for e in t.expectations]:
                m = ALIASES.get(n.lower())
                if m is not None and m.value not in names:
                    names.append(m.value)
        arches = [architecture(n, write_elimination=args.write_elimination,
                               load_speculation=args.load_speculation) for n in sorted(names)]
    reports: list[Report] = []
    for arch in arches:
        chosen = [p for p, t in tests.items() if _applies(t, arch)]
        reports.append(run_corpus(chosen, arch, _opts(args)))
    doc = {"reports": [r.as_dict() for r in reports]}
    text = "\n\n".join(f"== {r.arch} ==\n{r.table()}" for r in reports)
    _emit(args, doc, text)
    if any(r.disagreements for r in reports):
        return EXIT_FAIL
    if any(r.inconclusive for r in reports):
        return EXIT_CAP
    return EXIT_OK


def _cmd_refine(args) -> int:
    arch = _arch(args)
    a, b = load_test(args.file_a), load_test(args.file_b)
    unknown = [h for h in args.hide if h not in FENCE_KIND_NAMES]
    if unknown:
        raise ValueError(f"unknown fence {unknown[0]!r} for --hide")
    hide = frozenset(FENCE_KIND_NAMES[h] for h in args.hide)
    kw = dict(budget=args.unroll, hide=hide, cap=args.max_configs)
    results = {"b_refines_a": check_refinement(arch, a.system, b.system, **kw)}
    if args.both:
        results["a_refines_b"] = check_refinement(arch, b.system, a.system, **kw)
    holds = all(results.values())
    doc = {
        "a": a.name, "b": b.name, "arch": arch.name, "holds": holds,
        "checks": {
            k: {
                "holds": r.holds,
                "explored": r.explored,
                "counterexample": [show_label(l) for l in r.counterexample] if r.counterexample is not None else None,
            }
            for k, r in results.items()
        },
    }
    lines = []
    for k, r in results.items():
        lhs, rhs = (b.name, a.name) if k == "b_refines_a" else (a.name, b.name)
        lines.append(f"{lhs} refines {rhs} [{arch.name}]: {'yes' if r.holds else 'no'} ({r.explored} product states)")
        if not r.holds:
            lines.append("  unmatched trace: " + (" ; ".join(show_label(l) for l in r.counterexample) or "<empty>"))
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK if holds else EXIT_FAIL


def _cmd_case(args) -> int:
    arch = _arch(args)
    res = run_case_study(args.name, args.combination, arch, _opts(args))
    doc = {
        "case": res.name, "combination": res.combination, "arch": res.arch,
        "conforms": res.conforms, "bound_hit": res.bound_hit, "stats": res.stats,
        "counterexample": repr(res.counterexample) if res.counterexample is not None else None,
        "concrete": sorted(repr(x) for x in res.concrete),
        "abstract": sorted(repr(x) for x in res.abstract),
        "witness": [show_label(l) for l in res.witness] if (args.witness and res.witness) else None,
    }
    verdict = {True: "conforms", False: "DOES NOT CONFORM", None: "inconclusive"}[res.conforms]
    lines = [f"{res.name} {res.combination} [{res.arch}]: {verdict}"
             + (" (loop bound reached)" if res.bound_hit else "")]
    if res.counterexample is not None:
        lines.append(f"counterexample: {res.counterexample!r}")
    if args.witness and res.witness:
        lines += [f"  {show_label(l)}" for l in res.witness]
    if res.error:
        lines.append(f"cap: {res.error}")
    lines.append(f"{res.stats.get('configurations', 0)} configurations, {res.stats.get('seconds', 0):.2f}s")
    _emit(args, doc, "\n".join(lines))
    if res.conforms is None:
        return EXIT_CAP
    return EXIT_OK if res.conforms else EXIT_FAIL


COMMANDS = {"run": _cmd_run, "corpus": _cmd_corpus, "refine": _cmd_refine, "case": _cmd_case}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except RefinementCapExceeded as exc:
        print(f"weakmem: cap reached: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ParseError as exc:
        print(f"weakmem: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, UndeclaredLocal) as exc:
        print(f"weakmem: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

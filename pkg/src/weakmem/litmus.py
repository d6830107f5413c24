"""Running litmus tests and corpora."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .explorer import (
    NOT_OBSERVABLE,
    NOT_OBSERVABLE_BOUNDED,
    OBSERVABLE,
    CapExceeded,
    ExplorationResult,
    FinalState,
    Options,
    check_condition,
    explore,
)
from .parser import ParsedTest, parse_program
from .printer import show_expr, show_label, show_value
from .reorder import ALIASES, Architecture, architecture

LitmusTest = ParsedTest
INCONCLUSIVE = "Inconclusive"
WORKERS_ENV = "WEAKMEM_WORKERS"


def parse_litmus(text: str) -> LitmusTest:
    return parse_program(text)


def load_test(path) -> LitmusTest:
    return parse_litmus(Path(path).read_text())


def expectation_for(test: LitmusTest, arch: Architecture) -> Optional[str]:
    for e in test.expectations:
        if ALIASES.get(e.arch.lower()) is arch.model:
            return e.verdict
    return None


def _agrees(expected: Optional[str], verdict: str) -> Optional[bool]:
    if expected is None or verdict == INCONCLUSIVE:
        return None
    if expected == OBSERVABLE:
        return verdict == OBSERVABLE
    return verdict in (NOT_OBSERVABLE, NOT_OBSERVABLE_BOUNDED)


@dataclass
class TestRun:
    test: str
    arch: str
    verdict: str
    quantifier: str
    expected: Optional[str]
    agrees: Optional[bool]
    witness: Optional[tuple]
    finals: list
    stats: dict
    seconds: float
    error: Optional[str] = None

    @property
    def passed(self) -> Optional[bool]:
        """For ``forbidden`` tests the condition must not be observable."""
        if self.verdict == INCONCLUSIVE:
            return None
        obs = self.verdict == OBSERVABLE
        return not obs if self.quantifier == "forbidden" else obs

    def as_dict(self, with_witness: bool = True) -> dict:
        return {
            "test": self.test,
            "arch": self.arch,
            "verdict": self.verdict,
            "expected": self.expected,
            "agrees": self.agrees,
            "finals": self.finals,
            "witness": [show_label(l) for l in self.witness] if (self.witness and with_witness) else None,
            "stats": self.stats,
            **({"error": self.error} if self.error else {}),
        }


def _final_dict(fs: FinalState) -> dict:
    return {
        "locals": {str(pid): {k: show_value(v) for k, v in locs} for pid, locs in fs.locals},
        "memory": {show_expr(k): show_value(v) for k, v in fs.memory},
    }


def run_test(test: LitmusTest, arch: Architecture, opts: Options = Options()) -> TestRun:
    t0 = time.perf_counter()
    expected = expectation_for(test, arch)
    error = None
    try:
        res = explore(test.system, arch, opts)
    except CapExceeded as exc:
        res, error = exc.partial, str(exc)
    verdict = check_condition(res, test.condition)
    kind = verdict.kind
    if error is not None and kind != OBSERVABLE:
        kind = INCONCLUSIVE
    finals = sorted((_final_dict(fs) for fs in res.finals), key=lambda d: repr(sorted(d.items())))
    return TestRun(
        test=test.name,
        arch=arch.name,
        verdict=kind,
        quantifier=test.quantifier,
        expected=expected,
        agrees=_agrees(expected, kind),
        witness=verdict.witness,
        finals=finals,
        stats=res.stats.as_dict(),
        seconds=time.perf_counter() - t0,
        error=error,
    )


@dataclass
class Report:
    arch: str
    rows: list = field(default_factory=list)

    @property
    def disagreements(self) -> list:
        return [r for r in self.rows if r.agrees is False]

    @property
    def inconclusive(self) -> list:
        return [r for r in self.rows if r.verdict == INCONCLUSIVE]

    def summary(self) -> dict:
        return {
            "tests": len(self.rows),
            "agree": sum(1 for r in self.rows if r.agrees),
            "disagree": len(self.disagreements),
            "no_expectation": sum(1 for r in self.rows if r.agrees is None and r.verdict != INCONCLUSIVE),
            "inconclusive": len(self.inconclusive),
        }

    def as_dict(self) -> dict:
        return {
            "arch": self.arch,
            "summary": self.summary(),
            "tests": [r.as_dict(with_witness=False) for r in self.rows],
        }

    def table(self) -> str:
        lines = [f"{'test':<28} {'verdict':<22} {'expected':<22} {'agree':<6} {'configs':>9} {'time':>8}"]
        for r in self.rows:
            agree = {True: "yes", False: "NO", None: "-"}[r.agrees]
            lines.append(
                f"{r.test:<28} {r.verdict:<22} {r.expected or '-':<22} {agree:<6} "
                f"{r.stats['configurations']:>9} {r.seconds:>7.2f}s"
            )
        s = self.summary()
        lines.append(
            f"{s['tests']} tests, {s['agree']} agree, {s['disagree']} disagree, "
            f"{s['no_expectation']} without expectation, {s['inconclusive']} inconclusive"
        )
        return "\n".join(lines)


def _run_one(args):
    path, arch_name, flags, opts = args
    arch = architecture(arch_name, **flags)
    return run_test(load_test(path), arch, opts)


def corpus_files(root) -> list[Path]:
    root = Path(root)
    if root.is_file():
        return [root]
    return sorted(root.glob("*.lit"))


def run_corpus(paths: Iterable, arch: Architecture, opts: Options = Options(),
               workers: Optional[int] = None, only_expected: bool = False) -> Report:
    """Run every test; with ``only_expected`` skip tests lacking an expectation for ``arch``."""
    paths = list(paths)
    if only_expected:
        paths = [p for p in paths if expectation_for(load_test(p), arch) is not None]
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    flags = {"write_elimination": arch.write_elimination, "load_speculation": arch.load_speculation}
    jobs = [(str(p), arch.name, flags, opts) for p in paths]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, jobs))
    else:
        rows = [_run_one(j) for j in jobs]
    rows.sort(key=lambda r: r.test)
    return Report(arch.name, rows)


def bundled_corpus() -> Path:
    return Path(__file__).parent / "corpus"

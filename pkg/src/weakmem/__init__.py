"""Weak memory models as instruction reordering."""

from .casestudies import CASE_STUDIES, first_cfence_redundant, run_case_study
from .explorer import (
    NOT_OBSERVABLE,
    NOT_OBSERVABLE_BOUNDED,
    OBSERVABLE,
    CapExceeded,
    Options,
    check_condition,
    explore,
)
from .litmus import run_corpus, run_test
from .parser import ParseError, parse_command, parse_program
from .refinement import check_refinement, equivalent
from .reorder import ALL_ARCHS, Architecture, Model, architecture, forward, may_promote, reorderable

__all__ = [
    "ALL_ARCHS", "Architecture", "CASE_STUDIES", "CapExceeded", "Model", "NOT_OBSERVABLE",
    "NOT_OBSERVABLE_BOUNDED", "OBSERVABLE", "Options", "ParseError", "architecture",
    "check_condition", "check_refinement", "equivalent", "explore", "first_cfence_redundant",
    "forward", "may_promote", "parse_command", "parse_program", "reorderable", "run_case_study",
    "run_corpus", "run_test",
]
